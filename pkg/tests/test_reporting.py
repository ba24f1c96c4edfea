import io
import json

import pytest
from rich.console import Console

from pcadrank.classifiers import ClassifierKind, fit, make_spec
from pcadrank.config import OutputFormat, build_run_config
from pcadrank.errors import DataError
from pcadrank.evaluation import (
    AblationReport,
    EvalReport,
    GroupRankings,
    GroupWinner,
    GroupWinners,
    Metrics,
)
from pcadrank.reporting import (
    ReportBundle,
    delta_frame,
    display,
    eval_frame,
    group_rankings_frame,
    group_winners_frame,
    read_weight_report,
    weights_frame,
)
from pcadrank.synth import default_spec, generate
from pcadrank.weighting import ALGORITHMS, WeightMatrix


@pytest.fixture
def matrix():
    weights = {alg: {"age": 0.5, "smoking": 0.25} for alg in ALGORITHMS[:3]}
    weights.update({alg: {"age": 0.125, "smoking": 0.75} for alg in ALGORITHMS[3:]})
    return WeightMatrix.from_weights(weights, ["smoking", "age"])


def flat(value):
    return Metrics(accuracy=value, precision=value, recall=value, auc=value)


@pytest.fixture
def ablation_report():
    without = EvalReport.from_means({ClassifierKind.GLM: flat(0.70), ClassifierKind.GBT: flat(0.74)})
    with_ = EvalReport.from_means({ClassifierKind.GLM: flat(0.76), ClassifierKind.GBT: flat(0.78)})
    return AblationReport(feature="ethnicity", with_feature=with_, without_feature=without)


def test_weights_frame_layout(matrix):
    frame = weights_frame(matrix)
    expected = ["attribute"]
    for alg in ALGORITHMS:
        expected += [f"{alg}_rank", f"{alg}_weight"]
    assert list(frame.columns) == expected + ["mean_rank", "overall_rank"]
    assert frame["attribute"].tolist() == ["age", "smoking"]
    assert frame.loc[0, "information_gain_weight"] == "0.50000"
    assert frame.loc[0, "mean_rank"] == "1.50"


def test_weight_report_round_trip(tmp_path, matrix):
    bundle = ReportBundle(tmp_path)
    bundle.add_weights(matrix)
    bundle.write()
    parsed = read_weight_report(tmp_path / "weights.csv")
    assert parsed.weight == matrix.weight
    assert parsed.rank == matrix.rank
    assert parsed.mean_rank == matrix.mean_rank
    assert parsed.overall_rank == matrix.overall_rank
    assert parsed.algorithms == list(ALGORITHMS)


def test_read_weight_report_rejects_other_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(DataError, match="not a weight report"):
        read_weight_report(path)
    with pytest.raises(DataError):
        read_weight_report(tmp_path / "absent.csv")


def test_eval_frame_cells(ablation_report):
    frame = eval_frame(ablation_report.without_feature)
    assert list(frame.columns) == ["metric", "glm", "gbt", "average"]
    assert frame["metric"].tolist() == ["accuracy", "precision", "recall", "auc"]
    assert frame.loc[0, "glm"] == "70.00 ± 0.00"
    assert frame.loc[0, "average"] == "72.00 ± 0.00"
    assert frame.loc[3, "average"] == "0.72 ± 0.00"


def test_delta_frame(ablation_report):
    frame = delta_frame(ablation_report)
    accuracy = frame.iloc[0]
    assert (accuracy["without"], accuracy["with"], accuracy["delta"]) == ("72.00", "77.00", "+5.00")
    assert frame.iloc[3]["delta"] == "+0.05"


def test_group_rankings_frame():
    rankings = GroupRankings(
        top={"Fars": ["age", "gender"]},
        sizes={"Fars": 500, "Balouch": 11},
        skipped={"Balouch": "11 rows < 20"},
        overall=["gender", "age"],
    )
    frame = group_rankings_frame(rankings, top_n=2)
    assert list(frame.columns) == ["group", "n_rows", "status", "rank_1", "rank_2", "reason"]
    assert frame["group"].tolist() == ["Fars", "Balouch", "All"]
    assert frame.iloc[1]["status"] == "skipped"
    assert frame.iloc[1]["rank_1"] == ""
    assert frame.iloc[2]["n_rows"] == 511
    assert frame.iloc[2]["rank_1"] == "gender"


def test_group_winners_frame():
    winner = GroupWinner(kind=ClassifierKind.GLM, metrics=flat(0.8), n_rows=500)
    winners = GroupWinners(
        winners={"Fars": winner},
        sizes={"Fars": 500, "Balouch": 11},
        skipped={"Balouch": "too small"},
        overall=winner,
    )
    frame = group_winners_frame(winners)
    assert frame["group"].tolist() == ["Fars", "Balouch", "All"]
    assert frame.iloc[0]["classifier"] == "glm"
    assert frame.iloc[0]["accuracy"] == "80.00"
    assert frame.iloc[0]["auc"] == "0.80"
    assert frame.iloc[1]["reason"] == "too small"


def test_bundle_writes_markdown_twins(tmp_path, matrix, ablation_report):
    bundle = ReportBundle(tmp_path / "out", OutputFormat.MD)
    bundle.add_weights(matrix)
    bundle.add_ablation(ablation_report)
    assert not (tmp_path / "out").exists()
    written = bundle.write()
    names = sorted(p.name for p in written)
    assert names == sorted(
        ["weights.csv", "weights.md", "eval_without.csv", "eval_without.md", "eval_with.csv", "eval_with.md"]
        + ["ablation_delta.csv", "ablation_delta.md"]
    )
    markdown = (tmp_path / "out" / "weights.md").read_text(encoding="utf-8")
    assert markdown.startswith("## Attribute weights and ranks")
    assert "Information Gain rank" in markdown
    assert "Generalized Linear Model" in (tmp_path / "out" / "eval_with.md").read_text(encoding="utf-8")


def test_csv_format_has_no_markdown(tmp_path, matrix):
    bundle = ReportBundle(tmp_path)
    bundle.add_weights(matrix)
    assert [p.name for p in bundle.write()] == ["weights.csv"]
    assert "## Attribute weights and ranks" in bundle.markdown()


def test_cohort_and_model_documents(tmp_path):
    cohort = generate(default_spec(n_rows=200, seed=1))
    bundle = ReportBundle(tmp_path)
    bundle.add_cohort(cohort)
    bundle.add_model(tmp_path / "models", fit(make_spec("glm"), cohort.table))
    bundle.write()
    assert len((tmp_path / "cohort.csv").read_text(encoding="utf-8").splitlines()) == 201
    assert json.loads((tmp_path / "truth.json").read_text(encoding="utf-8"))["seed"] == 1
    assert "ethnicity" in (tmp_path / "schema.json").read_text(encoding="utf-8")
    assert json.loads((tmp_path / "models" / "glm.json").read_text(encoding="utf-8"))["kind"] == "glm"


def test_run_config_leaves_out_execution_settings(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    bundle = ReportBundle(tmp_path)
    bundle.add_run_config(build_run_config("synth", {"n_jobs": 4, "seed": 2}))
    document = json.loads(bundle.files[tmp_path / "run_config.json"])
    assert document["seed"] == 2
    assert "n_jobs" not in document
    assert "log_level" not in document


def test_display_renders_markdown():
    bundle = ReportBundle(None)
    console = Console(file=io.StringIO(), width=200)
    bundle.sections.append("## Summary\n\nall good\n")
    display(bundle.markdown(), console)
    assert "all good" in console.file.getvalue()
