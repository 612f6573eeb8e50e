import numpy as np
import pytest

from hypertime.dataset import TimeSeriesDataset
from hypertime.drift import (
    DriftScenario,
    ScenarioError,
    Segment,
    benchmark_scenario,
    generate,
    sample_rows,
    split_train_test,
)


def ols(X, y):
    A = np.column_stack([X, np.ones(len(X))])
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    return coef, float(np.mean((A @ coef - y) ** 2))


def test_noiseless_single_segment():
    sc = DriftScenario("regression", 200, 1, (Segment(1.0, (1.0,), 0.0),))
    ds = generate(sc)
    assert np.array_equal(ds.labels, ds.features[:, 0])
    assert ols(ds.features, ds.labels)[1] < 1e-25


def test_per_segment_slopes():
    segs = tuple(Segment(1 / 3, (w,), 0.1) for w in (1.0, 2.0, 4.0))
    sc = DriftScenario("regression", 3000, 1, segs, seed=3)
    ds = generate(sc)
    seg = sc.segment_of_rows()
    for k, w in enumerate((1.0, 2.0, 4.0)):
        coef, _ = ols(ds.features[seg == k], ds.labels[seg == k])
        assert abs(coef[0] - w) <= 0.05


def test_timestamps_and_size():
    ds = generate(benchmark_scenario(n_rows=500))
    assert len(ds) == 500
    assert np.all(np.diff(ds.timestamps) > 0)
    assert np.all(np.abs(ds.features) <= 1)


def test_seed_determinism():
    a, b = generate(benchmark_scenario()), generate(benchmark_scenario())
    assert a.features.tobytes() == b.features.tobytes() and a.labels.tobytes() == b.labels.tobytes()
    c = generate(benchmark_scenario(seed=1))
    assert c.labels.tobytes() != a.labels.tobytes()


def test_drift_makes_global_fit_worse():
    segs = tuple(Segment(0.25, (w, -w), 0.05) for w in (1.0, -1.0, 2.0, 0.5))
    sc = DriftScenario("regression", 2000, 2, segs, seed=8)
    ds = generate(sc)
    seg = sc.segment_of_rows()
    per_segment = np.mean([ols(ds.features[seg == k], ds.labels[seg == k])[1] for k in range(4)])
    assert ols(ds.features, ds.labels)[1] > per_segment


def test_linear_interp_between_midpoints():
    segs = (Segment(0.5, (0.0,), 0.0), Segment(0.5, (2.0,), 0.0))
    sc = DriftScenario("regression", 100, 1, segs, drift_kind="linear_interp")
    W, _, _ = sc.parameters_at(np.array([0, 25, 50, 75, 99]))
    assert W[:, 0].tolist() == [0.0, 0.0, 1.0, 2.0, 2.0]


def test_classification_labels():
    sc = DriftScenario("binary_classification", 400, 2, (Segment(1.0, (1.0, 1.0), 0.1),))
    ds = generate(sc)
    assert set(np.unique(ds.labels)) == {0.0, 1.0}
    agree = (ds.features.sum(axis=1) > 0) == (ds.labels == 1)
    assert agree.mean() > 0.9


def test_sample_rows_uses_period_parameters(rng):
    sc = benchmark_scenario()
    rows = np.full(5000, sc.n_rows - 1)
    X, y = sample_rows(sc, rows, rng)
    coef, _ = ols(X, y)
    assert np.allclose(coef[:3], sc.segments[-1].weights, atol=0.05)


@pytest.mark.parametrize("kwargs", [
    {"segments": (Segment(0.5, (1.0,)),)},
    {"segments": (Segment(1.0, (1.0,), -1.0),)},
    {"segments": (Segment(1.0, (1.0, 2.0)),)},
    {"n_rows": 5},
    {"task": "ranking"},
    {"drift_kind": "sudden"},
])
def test_invalid_scenarios(kwargs):
    base = {"task": "regression", "n_rows": 100, "feature_dim": 1, "segments": (Segment(1.0, (1.0,)),)}
    with pytest.raises(ScenarioError):
        DriftScenario(**{**base, **kwargs})


def test_scenario_json_round_trip(tmp_path):
    sc = benchmark_scenario()
    sc.save(tmp_path / "s.json")
    assert DriftScenario.load(tmp_path / "s.json") == sc


def test_split_train_test():
    ds = TimeSeriesDataset(np.arange(100), np.zeros((100, 1)), np.zeros(100))
    train, folds = split_train_test(ds, 0.3, 3)
    assert train.timestamps.tolist() == list(range(70))
    assert [f.timestamps.tolist() for f in folds] == [list(range(70, 80)), list(range(80, 90)), list(range(90, 100))]
    assert all(f.timestamps.min() > train.timestamps.max() for f in folds)


def test_split_rejects_empty_fold():
    ds = TimeSeriesDataset(np.arange(10), np.zeros((10, 1)), np.zeros(10))
    with pytest.raises(ScenarioError):
        split_train_test(ds, 0.2, 3)
    with pytest.raises(ScenarioError):
        split_train_test(ds, 1.0, 1)


def test_benchmark_layout():
    sc = benchmark_scenario()
    assert len(sc.segments) == 4 and sc.n_rows == 4000
    # the last segment covers exactly the default 30% test span
    assert sc.segments[-1].fraction == pytest.approx(0.3)
