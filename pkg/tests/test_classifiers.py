import numpy as np
import pytest

from pcadrank.classifiers import (
    ClassifierKind,
    default_specs,
    fit,
    load_model,
    make_spec,
    mlp_gradient_check,
    predict,
    predict_table,
    save_model,
)
from pcadrank.classifiers.boosting import GradientBoostedTrees
from pcadrank.classifiers.linear import LogisticGLM
from pcadrank.classifiers.mlp import cross_entropy, cross_entropy_gradient, n_parameters
from pcadrank.classifiers.rules import Condition
from pcadrank.dataio import split, stratified_folds
from pcadrank.errors import ComputeError, ConfigError, DataError
from pcadrank.evaluation import auc

# small settings so every kind fits in well under a second
QUICK = {
    "rule_induction": {},
    "mlp": {"epochs": 20},
    "glm": {},
    "gbt": {"n_rounds": 20},
    "decision_tree": {},
    "random_forest": {"n_trees": 10},
}


def test_default_specs_follow_report_order():
    specs = default_specs()
    assert [s.kind for s in specs] == list(ClassifierKind)
    assert [s.kind.value for s in default_specs(["glm", "mlp"])] == ["mlp", "glm"]
    assert default_specs(["all"]) == specs
    with pytest.raises(ConfigError, match="unknown classifier"):
        default_specs(["svm"])


def test_resolved_hyperparameters():
    spec = make_spec("gbt", n_rounds=7)
    params = spec.resolved()
    assert params["n_rounds"] == 7
    assert params["max_depth"] == 3
    assert ClassifierKind.GLM.title == "Generalized Linear Model"


@pytest.mark.parametrize(
    "kind, params",
    [
        ("glm", {"l2": -1.0}),
        ("glm", {"momentum": 0.9}),
        ("mlp", {"hidden": 2.5}),
        ("random_forest", {"max_features": "half"}),
        ("decision_tree", {"max_depth": 0}),
    ],
)
def test_invalid_hyperparameters(kind, params):
    with pytest.raises(ConfigError):
        make_spec(kind, **params)


@pytest.mark.parametrize("kind", [k.value for k in ClassifierKind])
def test_scores_lie_in_unit_interval(mixed_table, kind):
    model = fit(make_spec(kind, seed=1, **QUICK[kind]), mixed_table)
    scores = predict_table(model, mixed_table)
    assert scores.shape == (mixed_table.n_rows,)
    assert ((scores >= 0.0) & (scores <= 1.0)).all()


@pytest.mark.parametrize("kind", [k.value for k in ClassifierKind])
def test_save_and_load_give_the_same_scores(tmp_path, mixed_table, kind):
    model = fit(make_spec(kind, seed=2, **QUICK[kind]), mixed_table)
    path = tmp_path / f"{kind}.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.spec.kind == model.spec.kind
    assert loaded.spec.resolved() == model.spec.resolved()
    np.testing.assert_array_equal(predict_table(loaded, mixed_table), predict_table(model, mixed_table))


def test_load_rejects_unknown_format(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"format_version": 99}', encoding="utf-8")
    with pytest.raises(DataError, match="format_version"):
        load_model(path)


@pytest.mark.parametrize("kind", [k.value for k in ClassifierKind])
def test_fit_is_deterministic(mixed_table, kind):
    spec = make_spec(kind, seed=3, **QUICK[kind])
    first = predict_table(fit(spec, mixed_table), mixed_table)
    np.testing.assert_array_equal(first, predict_table(fit(spec, mixed_table), mixed_table))


def test_fit_does_not_depend_on_row_order(mixed_table):
    spec = make_spec("gbt", seed=1, n_rounds=10)
    shuffled = mixed_table.take(np.random.default_rng(0).permutation(mixed_table.n_rows))
    np.testing.assert_array_equal(
        predict_table(fit(spec, mixed_table), mixed_table), predict_table(fit(spec, shuffled), mixed_table)
    )


def test_forest_serial_and_parallel_agree(mixed_table):
    spec = make_spec("random_forest", seed=4, n_trees=8)
    serial = fit(spec, mixed_table, n_jobs=1)
    parallel = fit(spec, mixed_table, n_jobs=2)
    assert serial.estimator.to_dict() == parallel.estimator.to_dict()


def test_training_set_preconditions(mixed_table):
    with pytest.raises(ComputeError, match="at least"):
        fit(make_spec("glm"), mixed_table.take(range(9)))
    negatives = mixed_table.take(np.flatnonzero(mixed_table.y == 0))
    with pytest.raises(ComputeError, match="single-class"):
        fit(make_spec("glm"), negatives)


def test_decision_tree_separates_a_threshold(make_table):
    x = np.linspace(-1.0, 1.0, 50)
    table = make_table({"x": x, "label": np.where(x >= 0, "yes", "no")}, numeric=("x",))
    model = fit(make_spec("decision_tree"), table)
    predicted = predict_table(model, table) >= 0.5
    assert (predicted == table.y.astype(bool)).all()


def test_rule_induction_learns_the_cut(make_table):
    x = np.arange(40.0)
    table = make_table({"x": x, "label": np.where(x < 20, "yes", "no")}, numeric=("x",))
    model = fit(make_spec("rule_induction"), table)
    rules = model.estimator.rules
    assert rules[0].conditions == (Condition(0, "<", 19.5),)
    assert rules[0].score == 1.0
    assert predict(model, {"x": 5.0}) == 1.0
    assert predict(model, {"x": 30.0}) == 0.0


def test_rule_induction_covers_until_nothing_beats_the_prior(make_table):
    sites = [f"s{k:02d}" for k in range(30) for _ in range(8)]
    labels = ["yes" if int(site[1:]) % 2 == 0 else "no" for site in sites]
    table = make_table({"site": sites, "label": labels})
    model = fit(make_spec("rule_induction"), table)
    assert len(model.estimator.rules) > 20
    scores = predict_table(model, table)
    np.testing.assert_array_equal(scores, table.y.astype(float))


def test_gbt_training_loss_never_increases(mixed_table):
    model = fit(make_spec("gbt", seed=0, n_rounds=40, shrinkage=1.0), mixed_table)
    assert (np.diff(model.estimator.train_loss) <= 1e-12).all()


def test_glm_stops_on_the_gradient_norm():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 4))
    y = (X[:, 0] - 0.5 * X[:, 1] + rng.normal(size=200) > 0).astype(float)
    glm = LogisticGLM(l2=1e-4, tol=1e-5, max_iter=500).fit(X, y, seed=0)
    _, grad = glm._objective(np.append(glm.coef, glm.intercept), X, y)
    assert np.linalg.norm(grad) <= 1e-5


def test_gbt_refit_starts_from_scratch():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(60, 2)), (rng.random(60) < 0.5).astype(float)
    gbt = GradientBoostedTrees(n_rounds=5, max_depth=2, shrinkage=0.1, min_leaf=3, subsample=1.0)
    gbt.fit(X, y, seed=0)
    gbt.fit(X, y, seed=0)
    assert len(gbt.trees) == len(gbt.steps) == 5


def test_mlp_gradient_matches_finite_differences(mixed_table):
    train = mixed_table.take(range(30))
    error = mlp_gradient_check(make_spec("mlp", hidden=16, seed=5), train, epsilon=1e-5)
    assert error < 1e-4


def test_mlp_output_bias_gradient_at_zero():
    X = np.zeros((8, 3))
    y = np.array([1, 1, 1, 0, 0, 1, 0, 1], dtype=float)
    theta = np.zeros(n_parameters(3, 4))
    analytic = cross_entropy_gradient(theta, X, y, 4)[-1]
    step = np.zeros_like(theta)
    step[-1] = 1e-5
    numeric = (cross_entropy(theta + step, X, y, 4) - cross_entropy(theta - step, X, y, 4)) / 2e-5
    assert analytic == 0.5 - y.mean()
    assert numeric == pytest.approx(analytic, abs=1e-9)


def test_gradient_check_preconditions(mixed_table):
    with pytest.raises(ConfigError):
        mlp_gradient_check(make_spec("glm"), mixed_table, 1e-5)
    with pytest.raises(ConfigError):
        mlp_gradient_check(make_spec("mlp"), mixed_table, 1.0)


def test_one_hot_width(mixed_table):
    with_colour = fit(make_spec("glm"), mixed_table)
    without = fit(make_spec("glm"), mixed_table.select(["x", "z"]))
    assert len(with_colour.encoder.columns) == 5
    assert len(with_colour.encoder.columns) - len(without.encoder.columns) == 3


def test_predict_needs_every_feature(mixed_table):
    model = fit(make_spec("glm"), mixed_table)
    with pytest.raises(DataError, match="schema mismatch"):
        predict(model, {"x": 0.1, "z": 0.2})
    assert 0.0 <= predict(model, {"x": 0.1, "z": 0.2, "colour": "purple"}) <= 1.0


@pytest.mark.slow
@pytest.mark.parametrize("kind", [k.value for k in ClassifierKind])
def test_classifier_floor_on_separable_cohort(separable_cohort, kind):
    plan = stratified_folds(separable_cohort, 3, seed=0)
    train, test = split(separable_cohort, plan, 0)
    scores = predict_table(fit(make_spec(kind, seed=0), train), test)
    assert auc(scores, test.y) >= 0.85
    majority = max(test.class_counts()) / test.n_rows
    assert ((scores >= 0.5) == test.y.astype(bool)).mean() > majority
