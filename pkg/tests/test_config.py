import os
from pathlib import Path

import pytest

from pcadrank.config import Command, OutputFormat, build_run_config, read_run_file
from pcadrank.errors import ConfigError


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("PCADRANK_N_JOBS", raising=False)
    monkeypatch.delenv("PCADRANK_LOG_LEVEL", raising=False)
    (tmp_path / "cohort.csv").write_text("age,pcad\n1,yes\n", encoding="utf-8")
    return tmp_path


def test_defaults(workdir):
    config = build_run_config("weigh", {"data": "cohort.csv"})
    assert config.command is Command.WEIGH
    assert (config.folds, config.bins, config.relief_k, config.smote_k) == (10, 10, 10, 5)
    assert config.smote_ratio == 1.0
    assert config.classifiers == ["all"]
    assert config.format is OutputFormat.CSV
    assert config.out == Path("out")


def test_flags_override_the_run_file(workdir):
    (workdir / "run.yaml").write_text("seed: 3\nfolds: 5\nrelief-k: 4\nclassifiers: glm, mlp\n", encoding="utf-8")
    config = build_run_config("ablate", {"data": "cohort.csv", "folds": 7, "seed": None}, "run.yaml")
    assert config.seed == 3
    assert config.folds == 7
    assert config.relief_k == 4
    assert config.classifiers == ["glm", "mlp"]


def test_environment_sits_between_file_and_flags(workdir, monkeypatch):
    (workdir / "run.yaml").write_text("n_jobs: 2\n", encoding="utf-8")
    monkeypatch.setenv("PCADRANK_N_JOBS", "4")
    monkeypatch.setenv("PCADRANK_LOG_LEVEL", "debug")
    config = build_run_config("synth", {}, "run.yaml")
    assert config.n_jobs == 4
    assert config.log_level == "DEBUG"
    assert build_run_config("synth", {"n_jobs": -1}, "run.yaml").n_jobs == -1


def test_dotenv_file_is_read(workdir):
    (workdir / ".env").write_text("PCADRANK_N_JOBS=3\n", encoding="utf-8")
    try:
        assert build_run_config("synth", {}).n_jobs == 3
    finally:
        os.environ.pop("PCADRANK_N_JOBS", None)


def test_schema_flag_maps_to_schema_file(workdir):
    (workdir / "schema.json").write_text("{}", encoding="utf-8")
    config = build_run_config("weigh", {"data": "cohort.csv", "schema": "schema.json"})
    assert config.schema_file == Path("schema.json")


@pytest.mark.parametrize(
    "command, flags",
    [
        ("weigh", {}),
        ("weigh", {"data": "absent.csv"}),
        ("ablate", {"data": "cohort.csv", "folds": 1}),
        ("synth", {"n_jobs": 0}),
        ("synth", {"log_level": "loud"}),
        ("synth", {"smote_ratio": 1.5}),
        ("synth", {"effect": -1.0}),
        ("synth", {"n_rows": 10}),
        ("lint", {}),
    ],
)
def test_invalid_configurations(workdir, command, flags):
    with pytest.raises(ConfigError):
        build_run_config(command, flags)


def test_unknown_run_file_key(workdir):
    (workdir / "run.yaml").write_text("colour: blue\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        build_run_config("synth", {}, "run.yaml")


def test_read_run_file_errors(workdir):
    with pytest.raises(ConfigError, match="not found"):
        read_run_file("absent.yaml")
    (workdir / "list.yaml").write_text("- 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="mapping"):
        read_run_file("list.yaml")
    (workdir / "empty.yaml").write_text("", encoding="utf-8")
    assert read_run_file("empty.yaml") == {}


def test_smote_config(workdir):
    config = build_run_config("synth", {"seed": 5, "smote_k": 3, "smote_ratio": 0.8})
    smote = config.smote_config()
    assert (smote.k_neighbors, smote.target_ratio, smote.seed) == (3, 0.8, 5)
    assert build_run_config("synth", {"smote": False}).smote_config() is None
