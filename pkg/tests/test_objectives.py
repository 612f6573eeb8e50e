import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypertime.dataset import TimeSeriesDataset
from hypertime.folds import plan_folds
from hypertime.learners import LearnerSpec
from hypertime.objectives import (
    FoldEvaluator,
    ObjectiveError,
    ObjectiveMode,
    aggregate,
    evaluate_config,
)

AVG_WORST = ObjectiveMode("lexi_avg_then_worst")
ALL_MODES = [
    AVG_WORST,
    ObjectiveMode("lexi_worst_then_avg"),
    ObjectiveMode("single_avg"),
    ObjectiveMode("single_worst"),
    ObjectiveMode("weighted", 0.3),
]
losses_st = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=12)


def test_avg_then_worst():
    assert aggregate([0.2, 0.4, 0.3], AVG_WORST) == pytest.approx((0.3, 0.4))


def test_reverse_and_single_modes():
    assert aggregate([0.2, 0.4], ObjectiveMode("lexi_worst_then_avg")) == pytest.approx((0.4, 0.3))
    assert aggregate([0.2, 0.4], ObjectiveMode("single_avg")) == pytest.approx((0.3,))
    assert aggregate([0.2, 0.4], ObjectiveMode("single_worst")) == (0.4,)


def test_constant_folds():
    for mode in ALL_MODES:
        assert all(v == pytest.approx(0.5) for v in aggregate([0.5, 0.5], mode))


def test_weighted_default_combination():
    assert aggregate([0.2, 0.4], ObjectiveMode.parse("weighted(0.01)")) == pytest.approx((0.301,))


def test_parse():
    assert ObjectiveMode.parse("weighted(0.15)") == ObjectiveMode("weighted", 0.15)
    assert ObjectiveMode.parse("weighted") == ObjectiveMode("weighted", 0.01)
    assert ObjectiveMode.parse("single_avg").n_objectives == 1
    assert AVG_WORST.n_objectives == 2


def test_mode_validation():
    with pytest.raises(ObjectiveError):
        ObjectiveMode("weighted", 1.5)
    with pytest.raises(ObjectiveError):
        ObjectiveMode("single_avg", 0.1)
    with pytest.raises(ObjectiveError):
        ObjectiveMode("median")


def test_rejects_bad_losses():
    with pytest.raises(ObjectiveError):
        aggregate([], AVG_WORST)
    with pytest.raises(ObjectiveError):
        aggregate([0.1, -0.2], AVG_WORST)
    with pytest.raises(ObjectiveError):
        aggregate([0.1, math.nan], AVG_WORST)
    with pytest.raises(ObjectiveError):
        aggregate([0.1, math.inf], AVG_WORST)


@given(losses_st)
def test_mean_not_above_max(losses):
    avg, worst = aggregate(losses, AVG_WORST)
    assert avg <= worst * (1 + 1e-12)


@given(losses_st)
def test_weighted_endpoints(losses):
    assert aggregate(losses, ObjectiveMode("weighted", 0.0)) == pytest.approx(
        aggregate(losses, ObjectiveMode("single_avg")))
    assert aggregate(losses, ObjectiveMode("weighted", 1.0)) == pytest.approx(
        aggregate(losses, ObjectiveMode("single_worst")))


@given(losses_st, st.randoms(use_true_random=False))
def test_permutation_invariance(losses, rnd):
    shuffled = list(losses)
    rnd.shuffle(shuffled)
    for mode in ALL_MODES:
        assert aggregate(shuffled, mode) == pytest.approx(aggregate(losses, mode), rel=1e-12)


def _linear_data(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    y = X @ np.array([1.0, -2.0]) + 0.1 * rng.standard_normal(n)
    return TimeSeriesDataset(np.arange(n), X, y)


def test_evaluate_config_deterministic():
    ds = _linear_data()
    plan = plan_folds(ds, 3, "cv")
    a = evaluate_config({"alpha": 0.5}, ds, plan, LearnerSpec("ridge"))
    b = evaluate_config({"alpha": 0.5}, ds, plan, LearnerSpec("ridge"))
    assert np.array_equal(a, b) and a.shape == (3,)


def test_holdout_trains_once():
    ds = _linear_data()
    ev = FoldEvaluator(ds, plan_folds(ds, 3, "holdout"), LearnerSpec("ridge"))
    out = ev({"alpha": 1.0})
    assert (ev.n_fits, ev.n_scores, len(out)) == (1, 3, 3)


def test_cv_trains_k_times():
    ds = _linear_data()
    ev = FoldEvaluator(ds, plan_folds(ds, 3, "cv"), LearnerSpec("ridge"))
    ev({"alpha": 1.0})
    assert (ev.n_fits, ev.n_scores) == (3, 3)


def test_cv_fold_loss_matches_manual_fit():
    from hypertime import learners
    ds = _linear_data()
    plan = plan_folds(ds, 3, "cv")
    out = evaluate_config({"alpha": 2.0}, ds, plan, LearnerSpec("ridge"))
    seg = plan.segments[1]
    rest = np.setdiff1d(np.arange(len(ds)), seg)
    model = learners.train(LearnerSpec("ridge"), {"alpha": 2.0}, ds.features[rest], ds.labels[rest])
    assert out[1] == learners.loss(model, ds.features[seg], ds.labels[seg], "mse")


def test_rows_seen_and_plan_mismatch():
    ds = _linear_data()
    ev = FoldEvaluator(ds, plan_folds(ds, 3, "cv"), LearnerSpec("ridge"))
    ev({"alpha": 1.0})
    assert ev.rows_seen == set(range(60))
    with pytest.raises(ObjectiveError):
        FoldEvaluator(ds.subset(np.arange(30)), plan_folds(ds, 3, "cv"), LearnerSpec("ridge"))
