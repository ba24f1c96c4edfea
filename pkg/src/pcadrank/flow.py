"""The whole analysis on one cohort as a crewai Flow: weigh, then ablate, then the per-group analyses."""

from __future__ import annotations

import logging
import os
from uuid import uuid4

from pydantic import BaseModel, ConfigDict, Field

# no telemetry, no network
os.environ.setdefault("OTEL_SDK_DISABLED", "true")
os.environ.setdefault("CREWAI_DISABLE_TELEMETRY", "true")

from crewai.flow.flow import Flow, listen, start  # noqa: E402

from pcadrank.classifiers import default_specs  # noqa: E402
from pcadrank.config import RunConfig  # noqa: E402
from pcadrank.dataio import Table, stratified_folds  # noqa: E402
from pcadrank.evaluation import (  # noqa: E402
    AblationReport,
    GroupRankings,
    GroupWinners,
    ablation,
    best_classifier_per_group,
    per_group_rankings,
)
from pcadrank.seeding import derive_seed  # noqa: E402
from pcadrank.synth import Cohort  # noqa: E402
from pcadrank.weighting import WeightMatrix, weigh_all  # noqa: E402

logger = logging.getLogger(__name__)


class ReportState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: str = Field(default_factory=lambda: str(uuid4()))
    table: Table | None = None
    cohort: Cohort | None = None
    feature: str | None = None
    weights: WeightMatrix | None = None
    ablation: AblationReport | None = None
    rankings: GroupRankings | None = None
    winners: GroupWinners | None = None


class CohortReportFlow(Flow[ReportState]):
    def __init__(self, run_config: RunConfig, table: Table, cohort: Cohort | None = None):
        super().__init__()
        self.run_config = run_config
        self.table = table
        self.cohort = cohort

    @start()
    def load_cohort(self):
        self.state.table = self.table
        self.state.cohort = self.cohort
        group = self.table.schema.group
        self.state.feature = self.run_config.feature or (group.name if group is not None else None)
        logger.info("Report on %d rows; ablation feature %r", self.table.n_rows, self.state.feature)
        return self.state

    @listen(load_cohort)
    def weigh(self):
        c = self.run_config
        self.state.weights = weigh_all(self.state.table, c.bins, c.relief_k, c.seed, n_jobs=c.n_jobs, relief_samples=c.relief_samples)
        return self.state.weights

    @listen(weigh)
    def ablate(self):
        c = self.run_config
        if self.state.feature is None:
            logger.warning("No group column and no --feature; skipping the ablation")
            return None
        specs = default_specs(c.classifiers, seed=derive_seed(c.seed, "classifiers"))
        plan = stratified_folds(self.state.table, c.folds, derive_seed(c.seed, "folds"))
        self.state.ablation = ablation(self.state.table, self.state.feature, specs, plan, c.smote_config(), c.seed, c.n_jobs)
        return self.state.ablation

    @listen(ablate)
    def compare_groups(self):
        c = self.run_config
        if self.state.table.schema.group is None:
            logger.warning("No group column; skipping the per-group analyses")
            return None
        specs = default_specs(c.classifiers, seed=derive_seed(c.seed, "classifiers"))
        self.state.rankings = per_group_rankings(self.state.table, c.top_n, c.bins, c.relief_k, c.seed, n_jobs=c.n_jobs)
        self.state.winners = best_classifier_per_group(self.state.table, specs, c.folds, c.seed, c.smote_config(), c.n_jobs)
        return self.state.winners
