"""Weight, evaluation and group report tables, rendered as CSV and Markdown and written in one pass."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from rich.console import Console
from rich.markdown import Markdown

from pcadrank.classifiers import ClassifierKind, Model
from pcadrank.classifiers.model import model_document
from pcadrank.config import OutputFormat, RunConfig
from pcadrank.dataio import dump_schema, table_csv
from pcadrank.errors import DataError
from pcadrank.evaluation import METRICS, AblationReport, EvalReport, GroupRankings, GroupWinners, Metrics
from pcadrank.synth import Cohort
from pcadrank.weighting import ALGORITHM_TITLES, WeightMatrix

logger = logging.getLogger(__name__)

METRIC_TITLES = {"accuracy": "Accuracy", "precision": "Precision", "recall": "Recall", "auc": "AUC"}


def _metric(name: str, value: float) -> str:
    """Percent for the rate metrics, plain for AUC, two decimals either way."""
    return f"{value:.2f}" if name == "auc" else f"{100.0 * value:.2f}"


def _signed(name: str, value: float) -> str:
    return f"{value:+.2f}" if name == "auc" else f"{100.0 * value:+.2f}"


# Weights
def weights_frame(matrix: WeightMatrix) -> pd.DataFrame:
    rows = []
    for attribute in matrix.ordered():
        row = {"attribute": attribute}
        for alg in matrix.algorithms:
            row[f"{alg}_rank"] = matrix.rank[attribute][alg]
            row[f"{alg}_weight"] = f"{matrix.weight[attribute][alg]:.5f}"
        row["mean_rank"] = f"{matrix.mean_rank[attribute]:.2f}"
        row["overall_rank"] = matrix.overall_rank[attribute]
        rows.append(row)
    return pd.DataFrame(rows)


def _weights_titles(frame: pd.DataFrame) -> pd.DataFrame:
    renamed = {}
    for column in frame.columns:
        for alg, title in ALGORITHM_TITLES.items():
            if column in (f"{alg}_rank", f"{alg}_weight"):
                renamed[column] = f"{title} {column.rsplit('_', 1)[1]}"
    return frame.rename(columns=renamed)


def read_weight_report(path: str | Path) -> WeightMatrix:
    """Parse a weights CSV back into a WeightMatrix (weights carry five decimals)."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"attribute": str}, keep_default_na=False)
    except (FileNotFoundError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read weight report {path}: {exc}") from exc
    algorithms = [c[: -len("_weight")] for c in frame.columns if c.endswith("_weight")]
    if not algorithms or "mean_rank" not in frame or "overall_rank" not in frame:
        raise DataError(f"{path} is not a weight report")
    attributes = frame["attribute"].tolist()
    records = frame.set_index("attribute")
    return WeightMatrix(
        attributes=attributes,
        algorithms=algorithms,
        weight={a: {alg: float(records.at[a, f"{alg}_weight"]) for alg in algorithms} for a in attributes},
        rank={a: {alg: int(records.at[a, f"{alg}_rank"]) for alg in algorithms} for a in attributes},
        mean_rank={a: float(records.at[a, "mean_rank"]) for a in attributes},
        overall_rank={a: int(records.at[a, "overall_rank"]) for a in attributes},
    )


# Evaluation (Tables 2 and 3 layout)
def eval_frame(report: EvalReport) -> pd.DataFrame:
    """Rows are metrics, columns the classifiers plus the average; cells read "mean ± std"."""
    rows = []
    for name in METRICS:
        row = {"metric": name}
        for kind, summary in report.results.items():
            row[kind.value] = f"{_metric(name, getattr(summary.mean, name))} ± {_metric(name, getattr(summary.std, name))}"
        row["average"] = f"{_metric(name, getattr(report.average, name))} ± {_metric(name, getattr(report.average_std, name))}"
        rows.append(row)
    return pd.DataFrame(rows)


def _eval_titles(frame: pd.DataFrame) -> pd.DataFrame:
    renamed = {kind.value: kind.title for kind in ClassifierKind}
    renamed.update(metric="", average="Average")
    titled = frame.rename(columns=renamed)
    titled[""] = titled[""].map(METRIC_TITLES)
    return titled


def delta_frame(ablation: AblationReport) -> pd.DataFrame:
    rows = []
    for name in METRICS:
        rows.append(
            {
                "metric": name,
                "without": _metric(name, getattr(ablation.without_feature.average, name)),
                "with": _metric(name, getattr(ablation.with_feature.average, name)),
                "delta": _signed(name, ablation.delta[name]),
            }
        )
    return pd.DataFrame(rows)


# Group analyses (figure layouts as ranked tables)
def group_rankings_frame(rankings: GroupRankings, top_n: int) -> pd.DataFrame:
    ranks = [f"rank_{i}" for i in range(1, top_n + 1)]
    rows = []
    for group, size in rankings.sizes.items():
        row = {"group": group, "n_rows": size}
        if group in rankings.top:
            row.update(status="ok", reason="")
            row.update(dict(zip(ranks, rankings.top[group])))
        else:
            row.update(status="skipped", reason=rankings.skipped.get(group, ""))
        rows.append(row)
    overall = {"group": "All", "n_rows": sum(rankings.sizes.values()), "status": "ok", "reason": ""}
    overall.update(dict(zip(ranks, rankings.overall)))
    rows.append(overall)
    return pd.DataFrame(rows, columns=["group", "n_rows", "status", *ranks, "reason"]).fillna("")


def group_winners_frame(winners: GroupWinners) -> pd.DataFrame:
    columns = ["group", "n_rows", "status", "classifier", *METRICS, "reason"]
    rows = []

    def winner_row(group: str, size: int, kind: ClassifierKind, metrics: Metrics) -> dict[str, object]:
        row = {"group": group, "n_rows": size, "status": "ok", "classifier": kind.value, "reason": ""}
        row.update({name: _metric(name, getattr(metrics, name)) for name in METRICS})
        return row

    for group, size in winners.sizes.items():
        if group in winners.winners:
            w = winners.winners[group]
            rows.append(winner_row(group, size, w.kind, w.metrics))
        else:
            rows.append({"group": group, "n_rows": size, "status": "skipped", "reason": winners.skipped.get(group, "")})
    if winners.overall is not None:
        rows.append(winner_row("All", winners.overall.n_rows, winners.overall.kind, winners.overall.metrics))
    return pd.DataFrame(rows, columns=columns).fillna("")


# Bundle
@dataclass
class ReportBundle:
    """Report documents held in memory until ``write`` puts them all on disk."""

    out: Path
    format: OutputFormat = OutputFormat.CSV
    files: dict[Path, str] = field(default_factory=dict)
    sections: list[str] = field(default_factory=list)

    def add_frame(self, name: str, frame: pd.DataFrame, title: str, display: pd.DataFrame | None = None) -> None:
        self.files[self.out / f"{name}.csv"] = frame.to_csv(index=False, lineterminator="\n")
        markdown = f"## {title}\n\n{(frame if display is None else display).to_markdown(index=False)}\n"
        self.sections.append(markdown)
        if self.format is OutputFormat.MD:
            self.files[self.out / f"{name}.md"] = markdown

    def add_text(self, filename: str, text: str) -> None:
        self.files[self.out / filename] = text

    def add_model(self, directory: Path, model: Model) -> None:
        self.files[directory / f"{model.spec.kind.value}.json"] = json.dumps(model_document(model), indent=2) + "\n"

    def add_weights(self, matrix: WeightMatrix, title: str = "Attribute weights and ranks") -> None:
        frame = weights_frame(matrix)
        self.add_frame("weights", frame, title, _weights_titles(frame))

    def add_ablation(self, ablation: AblationReport) -> None:
        feature = ablation.feature
        for name, report, title in (
            ("eval_without", ablation.without_feature, f"Classification results without {feature}"),
            ("eval_with", ablation.with_feature, f"Classification results with {feature}"),
        ):
            frame = eval_frame(report)
            self.add_frame(name, frame, title, _eval_titles(frame))
        self.add_frame("ablation_delta", delta_frame(ablation), f"Effect of including {feature} (average column)")

    def add_groups(self, rankings: GroupRankings | None, winners: GroupWinners | None, top_n: int) -> None:
        if rankings is not None:
            self.add_frame("group_rankings", group_rankings_frame(rankings, top_n), f"Top {top_n} attributes per group")
        if winners is not None:
            self.add_frame("group_winners", group_winners_frame(winners), "Best classifier per group")

    def add_cohort(self, cohort: Cohort) -> None:
        self.add_text("cohort.csv", table_csv(cohort.table))
        self.add_text("schema.json", dump_schema(cohort.table.schema))
        self.add_text("truth.json", cohort.truth.model_dump_json(indent=2) + "\n")

    def add_run_config(self, config: RunConfig) -> None:
        # execution settings stay out so reports match at any parallelism
        self.add_text("run_config.json", config.model_dump_json(indent=2, exclude={"n_jobs", "log_level"}) + "\n")

    def markdown(self) -> str:
        return "\n".join(self.sections)

    def write(self) -> list[Path]:
        written = []
        for path, text in self.files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            written.append(path)
        logger.info("Wrote %d file(s) to %s", len(written), self.out)
        return written


def display(markdown: str, console: Console | None = None) -> None:
    (console or Console()).print(Markdown(markdown))
