import pytest

pytest.importorskip("crewai")

from pcadrank.config import build_run_config  # noqa: E402
from pcadrank.flow import CohortReportFlow  # noqa: E402
from pcadrank.main import main  # noqa: E402
from pcadrank.synth import default_spec, generate  # noqa: E402


@pytest.fixture
def run_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PCADRANK_N_JOBS", raising=False)
    return build_run_config("report", {"seed": 3, "folds": 3, "classifiers": "glm", "relief_samples": 100})


def test_flow_fills_every_stage(run_config):
    cohort = generate(default_spec(n_rows=400, seed=3))
    flow = CohortReportFlow(run_config, cohort.table, cohort)
    flow.kickoff()
    state = flow.state
    assert state.feature == "ethnicity"
    assert state.weights.attributes == cohort.table.features
    assert state.ablation.feature == "ethnicity"
    assert "Fars" in state.rankings.sizes
    assert state.winners.overall is not None


def test_flow_skips_group_stages_without_a_group(run_config, mixed_table):
    table = mixed_table
    assert table.schema.group is None
    flow = CohortReportFlow(run_config, table)
    flow.kickoff()
    assert flow.state.weights is not None
    assert flow.state.ablation is None
    assert flow.state.winners is None


def test_report_command_on_a_synthetic_cohort(run_config, tmp_path):
    args = ["report", "--n-rows", "400", "--seed", "3", "--folds", "3", "--classifiers", "glm", "--relief-samples", "100"]
    assert main(args) == 0
    written = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"cohort.csv", "truth.json", "weights.csv", "ablation_delta.csv", "group_rankings.csv"} <= written
