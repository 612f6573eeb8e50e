import numpy as np
import pytest
from hypothesis import given, strategies as st

from hypertime import learners
from hypertime.learners import LearnerError, LearnerSpec, loss, polynomial_features, train

RIDGE = LearnerSpec("ridge")
RAW_RIDGE = LearnerSpec("ridge", {"fit_intercept": False, "standardize": False})


def _weights_on_raw_scale(model):
    return model.weights / model.scale


class TestRidge:
    def test_exact_line(self):
        X, y = np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 2.0])
        m = train(RIDGE, {"alpha": 0.0}, X, y)
        assert _weights_on_raw_scale(m)[0] == pytest.approx(1.0)
        assert m.predict(np.array([[0.0]]))[0] == pytest.approx(0.0, abs=1e-12)
        assert loss(m, X, y, "mse") == pytest.approx(0.0, abs=1e-20)
        assert m.predict(np.array([[5.0]]))[0] == pytest.approx(5.0)

    def test_closed_form_without_intercept(self):
        X, y = np.array([[1.0], [2.0]]), np.array([1.0, 2.0])
        m = train(RAW_RIDGE, {"alpha": 1.0}, X, y)
        # sum(xy) / (sum(x^2) + alpha)
        assert m.weights[0] == pytest.approx(5 / 6)
        assert m.intercept == 0.0

    def test_intercept_not_penalized(self):
        X = np.array([[1.0], [2.0], [3.0]])
        y = np.array([10.0, 10.0, 10.0])
        m = train(LearnerSpec("ridge", {"standardize": False}), {"alpha": 1e6}, X, y)
        assert m.intercept == pytest.approx(10.0)

    def test_closed_form_oracle(self, rng):
        X = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        alpha = 2.5
        m = train(LearnerSpec("ridge", {"standardize": False}), {"alpha": alpha}, X, y)
        Xc, yc = X - X.mean(0), y - y.mean()
        w = np.linalg.solve(Xc.T @ Xc + alpha * np.eye(3), Xc.T @ yc)
        assert np.allclose(m.weights, w)
        assert m.intercept == pytest.approx(y.mean() - X.mean(0) @ w)

    def test_collinear_zero_alpha_uses_lstsq(self):
        x = np.linspace(0, 1, 10)
        X = np.column_stack([x, 2 * x])
        m = train(RIDGE, {"alpha": 0.0}, X, 3 * x)
        assert np.all(np.isfinite(m.weights))
        assert loss(m, X, 3 * x, "mse") < 1e-20

    def test_interpolates_noiseless_linear_data(self, rng):
        X = rng.uniform(-1, 1, size=(30, 4))
        y = X @ np.array([1.0, -2.0, 0.5, 3.0]) + 0.7
        m = train(RIDGE, {"alpha": 0.0}, X, y)
        assert loss(m, X, y, "mse") <= 1e-10

    def test_weight_norm_shrinks_with_alpha(self, rng):
        X = rng.normal(size=(50, 3))
        y = X @ np.array([2.0, -1.0, 0.5]) + rng.normal(size=50)
        norms = [np.linalg.norm(train(RIDGE, {"alpha": a, "degree": 2}, X, y).weights)
                 for a in np.logspace(-3, 4, 30)]
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_polynomial_expansion(self):
        Z = polynomial_features(np.array([[2.0, 3.0]]), 3)
        assert Z.tolist() == [[2, 3, 4, 6, 9, 8, 12, 18, 27]]

    def test_degree_validated(self):
        with pytest.raises(LearnerError):
            train(RIDGE, {"degree": 4}, np.zeros((3, 1)), np.zeros(3))
        with pytest.raises(LearnerError):
            train(RIDGE, {"alpha": -1.0}, np.zeros((3, 1)), np.zeros(3))

    def test_row_order_invariance(self, rng):
        X, y = rng.normal(size=(25, 2)), rng.normal(size=25)
        perm = rng.permutation(25)
        a = train(RIDGE, {"alpha": 0.3, "degree": 2}, X, y)
        b = train(RIDGE, {"alpha": 0.3, "degree": 2}, X[perm], y[perm])
        assert np.allclose(a.predict(X), b.predict(X))


class TestKNN:
    def test_zero_distance_neighbour(self):
        X, y = np.array([[0.0], [1.0], [2.0]]), np.array([5.0, 6.0, 7.0])
        m = train(LearnerSpec("knn"), {"k": 1}, X, y)
        assert m.predict(np.array([[1.0]]))[0] == 6.0

    def test_tie_breaks_by_lower_row(self):
        X, y = np.array([[0.0], [2.0]]), np.array([1.0, 3.0])
        m = train(LearnerSpec("knn"), {"k": 1}, X, y)
        assert m.predict(np.array([[1.0]]))[0] == 1.0

    def test_metric_changes_nearest(self):
        X = np.array([[1.0, 1.0], [1.5, 0.0]])
        y = np.array([1.0, 2.0])
        q = np.zeros((1, 2))
        # euclidean: 1.41 vs 1.5; manhattan: 2.0 vs 1.5
        assert train(LearnerSpec("knn"), {"k": 1, "distance": "euclidean"}, X, y).predict(q)[0] == 1.0
        assert train(LearnerSpec("knn"), {"k": 1, "distance": "manhattan"}, X, y).predict(q)[0] == 2.0

    def test_k_equals_n_predicts_mean(self, rng):
        X, y = rng.normal(size=(12, 2)), rng.normal(size=12)
        m = train(LearnerSpec("knn"), {"k": 12}, X, y)
        assert np.allclose(m.predict(rng.normal(size=(5, 2))), y.mean())

    def test_dimension_mismatch(self):
        m = train(LearnerSpec("knn"), {"k": 1}, np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(LearnerError):
            m.predict(np.zeros((1, 3)))


class TestStumps:
    SPEC = LearnerSpec("boosted_stumps")

    def test_single_stump_matches_split_oracle(self, rng):
        x = rng.uniform(0, 1, 40)
        y = np.where(x > 0.37, 2.0, -1.0) + 0.1 * rng.normal(size=40)
        X = x.reshape(-1, 1)
        m = train(self.SPEC, {"n_estimators": 1, "learning_rate": 1.0}, X, y)
        # exhaustive oracle: best within-leaf squared error over every split
        xs = np.sort(x)
        best = min(
            ((y[x <= t] - y[x <= t].mean()) ** 2).sum() + ((y[x > t] - y[x > t].mean()) ** 2).sum()
            for t in (xs[:-1] + xs[1:]) / 2
        )
        assert loss(m, X, y, "mse") * len(y) == pytest.approx(best)

    def test_null_ensemble_is_label_mean(self, rng):
        X, y = rng.normal(size=(10, 2)), rng.normal(size=10)
        m = train(self.SPEC, {"n_estimators": 0}, X, y)
        assert np.allclose(m.predict(X), y.mean())

    def test_train_loss_non_increasing(self, rng):
        X = rng.uniform(-1, 1, size=(80, 3))
        y = np.sin(3 * X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=80)
        m = train(self.SPEC, {"n_estimators": 40, "learning_rate": 0.3, "min_samples_leaf": 3}, X, y)
        stage_losses = [np.mean((f - y) ** 2) for f in m.staged_predict(X)]
        assert all(b <= a + 1e-12 for a, b in zip(stage_losses, stage_losses[1:]))

    def test_min_leaf_respected(self, rng):
        X = rng.uniform(size=(30, 1))
        y = rng.normal(size=30)
        m = train(self.SPEC, {"n_estimators": 5, "min_samples_leaf": 8}, X, y)
        for s in m.stumps:
            if s.feature >= 0:
                left = np.count_nonzero(X[:, s.feature] <= s.threshold)
                assert 8 <= left <= 22

    def test_classification(self, rng):
        X = rng.uniform(-1, 1, size=(200, 2))
        y = (X[:, 0] > 0.1).astype(float)
        m = train(self.SPEC, {"n_estimators": 20, "learning_rate": 0.5}, X, y, "binary_classification")
        p = m.predict(X)
        assert np.all((p > 0) & (p < 1))
        assert loss(m, X, y, "zero_one") < 0.05

    def test_row_order_invariance(self, rng):
        X, y = rng.normal(size=(30, 2)), rng.normal(size=30)
        perm = rng.permutation(30)
        a = train(self.SPEC, {"n_estimators": 10}, X, y)
        b = train(self.SPEC, {"n_estimators": 10}, X[perm], y[perm])
        assert np.allclose(a.predict(X), b.predict(X))

    def test_learning_rate_range(self):
        with pytest.raises(LearnerError):
            train(self.SPEC, {"learning_rate": 0.0}, np.zeros((3, 1)), np.zeros(3))


class TestLoss:
    def test_perfect_predictions(self):
        y = np.array([0.0, 1.0, 1.0])
        for metric in learners.METRICS:
            assert learners.score(y, y, metric) == 0.0

    def test_constant_predictor(self):
        assert learners.score(np.array([1.0, 1.0]), np.array([0.0, 2.0]), "mse") == 1.0
        assert learners.score(np.array([1.0, 1.0]), np.array([0.0, 2.0]), "rmse") == 1.0

    def test_zero_one_counts(self):
        y = np.zeros(10)
        pred = np.array([0.9, 0.7, 0.5] + [0.1] * 7)
        assert learners.score(pred, y, "zero_one") == pytest.approx(0.3)

    def test_errors(self):
        with pytest.raises(LearnerError):
            learners.score(np.array([]), np.array([]), "mse")
        with pytest.raises(LearnerError):
            learners.score(np.zeros(2), np.zeros(2), "auc")
        with pytest.raises(LearnerError):
            train(RIDGE, {}, np.zeros((0, 1)), np.zeros(0))


class TestSpec:
    def test_unknown_family_and_param(self):
        with pytest.raises(LearnerError):
            LearnerSpec("svm")
        with pytest.raises(LearnerError):
            LearnerSpec("ridge", {"gamma": 1})

    def test_tunables(self):
        RIDGE.check_tunables(["alpha", "degree"])
        with pytest.raises(LearnerError):
            RIDGE.check_tunables(["fit_intercept"])


@pytest.mark.parametrize("family,config", [
    ("ridge", {"alpha": 0.1, "degree": 3}),
    ("knn", {"k": 3}),
    ("boosted_stumps", {"n_estimators": 7}),
])
def test_bit_identical_refits(family, config, rng):
    X, y = rng.normal(size=(30, 2)), rng.normal(size=30)
    q = rng.normal(size=(10, 2))
    a = train(LearnerSpec(family), config, X, y).predict(q)
    b = train(LearnerSpec(family), config, X, y).predict(q)
    assert a.tobytes() == b.tobytes()


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_mse_of_constant_predictor(c, shift):
    y = np.array([shift, shift + 2.0])
    expected = ((c - y[0]) ** 2 + (c - y[1]) ** 2) / 2
    assert learners.score(np.full(2, c), y, "mse") == pytest.approx(expected)
