import numpy as np
import pytest

from pcadrank.errors import ComputeError, ConfigError
from pcadrank.smote import SmoteConfig, minority_class, minority_neighbors, oversample, smote


def test_nearest_minority_on_a_line(make_table):
    table = make_table(
        {"x": [0.0, 1.0, 10.0, 5.0, 6.0, 7.0, 8.0], "label": ["yes"] * 3 + ["no"] * 4},
        numeric=("x",),
    )
    assert minority_class(table) == 1
    assert minority_neighbors(table, 0, 1) == [1]
    assert minority_neighbors(table, 2, 2) == [1, 0]


def test_neighbor_ties_go_to_lower_position(make_table):
    table = make_table({"x": [5.0, 5.0, 5.0, 1.0, 2.0, 3.0, 4.0], "label": ["yes"] * 3 + ["no"] * 4}, numeric=("x",))
    assert minority_neighbors(table, 2, 1) == [0]
    assert minority_neighbors(table, 0, 1) == [1]


def test_k_must_be_below_minority_size(make_table):
    table = make_table({"x": [0.0, 1.0, 10.0, 5.0, 6.0, 7.0, 8.0], "label": ["yes"] * 3 + ["no"] * 4}, numeric=("x",))
    with pytest.raises(ConfigError):
        minority_neighbors(table, 0, 3)
    with pytest.raises(ConfigError):
        minority_neighbors(table, 4, 1)


def test_two_point_segment(make_table):
    table = make_table(
        {"a": [0.0, 2.0, 5.0, 6.0, 7.0], "b": [0.0, 2.0, 5.0, 6.0, 7.0], "label": ["yes", "yes", "no", "no", "no"]},
        numeric=("a", "b"),
    )
    result = oversample(table, SmoteConfig(k_neighbors=1, seed=3))
    assert result.n_synthetic == 1
    synthetic = result.table.frame.loc[-1]
    assert synthetic["a"] == synthetic["b"]
    assert 0.0 <= synthetic["a"] <= 2.0
    assert synthetic["label"] == "yes"


@pytest.mark.parametrize("ratio, expected", [(1.0, 250), (0.5, 125), (0.3, 100)])
def test_class_counts_follow_target_ratio(make_table, ratio, expected):
    rng = np.random.default_rng(0)
    table = make_table({"x": rng.normal(size=350), "label": ["yes"] * 100 + ["no"] * 250}, numeric=("x",))
    out = smote(table, SmoteConfig(target_ratio=ratio))
    assert out.class_counts() == (250, expected)


def test_categorical_cells_take_the_neighbour_vote(make_table):
    table = make_table(
        {
            "cat": ["B", "A", "A", "B"] + ["A"] * 8,
            "x": [0.0, 1.0, 2.0, 3.0] + [10.0 + i for i in range(8)],
            "label": ["yes"] * 4 + ["no"] * 8,
        },
        numeric=("x",),
    )
    result = oversample(table, SmoteConfig(k_neighbors=3, seed=1))
    assert result.n_synthetic == 4
    voted = {0: "A", 1: "B", 2: "B", 3: "A"}
    synthetic = result.table.frame.loc[result.table.row_ids < 0]
    for anchor, cat in zip(result.anchors, synthetic["cat"]):
        assert cat == voted[anchor]


def test_synthetic_numerics_are_convex_combinations(mixed_table):
    result = oversample(mixed_table, SmoteConfig(k_neighbors=5, seed=9))
    frame = result.table.frame
    synthetic = frame.loc[frame.index < 0]
    assert len(synthetic) == result.n_synthetic == 40
    for name in ("x", "z"):
        start = mixed_table.frame.loc[result.anchors, name].to_numpy()
        end = mixed_table.frame.loc[result.neighbors, name].to_numpy()
        values = synthetic[name].to_numpy()
        assert (values >= np.minimum(start, end)).all()
        assert (values <= np.maximum(start, end)).all()


def test_original_rows_stay_first(mixed_table):
    out = smote(mixed_table, SmoteConfig(seed=2))
    assert out.frame.iloc[: mixed_table.n_rows].equals(mixed_table.frame)


def test_seed_determinism(mixed_table):
    first = smote(mixed_table, SmoteConfig(seed=5)).frame
    assert first.equals(smote(mixed_table, SmoteConfig(seed=5)).frame)
    assert not first.equals(smote(mixed_table, SmoteConfig(seed=6)).frame)


def test_balanced_table_is_returned_unchanged(make_table):
    table = make_table({"x": np.arange(20.0), "label": ["yes", "no"] * 10}, numeric=("x",))
    result = oversample(table, SmoteConfig())
    assert result.n_synthetic == 0
    assert result.table is table


def test_single_class_table_is_rejected(mixed_table):
    positives = mixed_table.take(np.flatnonzero(mixed_table.y == 1))
    with pytest.raises(ComputeError):
        oversample(positives, SmoteConfig())


def test_config_bounds():
    with pytest.raises(ValueError):
        SmoteConfig(target_ratio=0.0)
    with pytest.raises(ValueError):
        SmoteConfig(k_neighbors=0)
