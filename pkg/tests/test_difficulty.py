import statistics

import numpy as np
import pytest
from scipy.stats import spearmanr

from conformal_pi.data import Dataset, compute_stats
from conformal_pi.difficulty import estimate, fit_difficulty
from conformal_pi.errors import ArityMismatch, MissingPredictions, MissingResiduals


def line(targets, preds=None):
    n = len(targets)
    return Dataset(["x"], np.arange(n, dtype=float).reshape(-1, 1), targets, preds)


def test_knn_std_matches_bruteforce(rng):
    X = rng.normal(size=(100, 3))
    y = rng.normal(size=100) * 4
    train = Dataset(["a", "b", "c"], X, y)
    est = fit_difficulty("knn_std", train, k=25, beta=0.01)
    stats = compute_stats(train)
    Z = (X - stats.means) / stats.std_devs
    sig = estimate(est, X[:10])
    for i in range(10):
        d = ((Z - Z[i]) ** 2).sum(axis=1)
        nn = np.lexsort((np.arange(100), d))[:25]
        expected = statistics.pstdev(y[nn].tolist()) + 0.01
        assert sig[i] == pytest.approx(expected, rel=1e-12)


def test_hand_examples():
    # query at x=1 with k=3 picks rows 0, 1, 2
    q = [[1.0]]
    assert estimate(fit_difficulty("knn_std", line([10, 10, 10, 50]), 3, 0.5), q)[0] == 0.5
    s = estimate(fit_difficulty("knn_std", line([1, 2, 3, 50]), 3, 0.0), q)[0]
    assert s == pytest.approx(0.816496580927726, abs=1e-12)
    ts = fit_difficulty("target_strangeness", line([1, 2, 3, 50]), 3, 0.0)
    assert estimate(ts, q, [2.0])[0] == pytest.approx(2 / 3, abs=1e-12)
    # k=2 at x=0.4 -> rows 0, 1 with residuals 0.5, 1.5
    res = fit_difficulty("knn_residual", line([1.0, 1.0, 9.0]), 2, 0.25,
                         residual_source=[0.5, 2.5, 9.0])
    assert estimate(res, [[0.4]])[0] == pytest.approx(1.25)


def test_errors():
    with pytest.raises(MissingResiduals):
        fit_difficulty("knn_residual", line([1.0, 2.0]), 1)
    ts = fit_difficulty("target_strangeness", line([1.0, 2.0]), 1)
    with pytest.raises(MissingPredictions):
        estimate(ts, [[0.0]])
    with pytest.raises(ArityMismatch):
        estimate(ts, [[0.0, 1.0]], [1.0])


def test_constant_targets_strangeness():
    est = fit_difficulty("target_strangeness", line([7.0] * 10), 3, 0.01)
    assert estimate(est, [[4.0]], [7.0])[0] == pytest.approx(0.01)
    assert estimate(est, [[4.0]], [9.0])[0] == pytest.approx(2.01)


def test_shift_invariance(rng):
    X = rng.normal(size=(80, 2))
    y = rng.normal(size=80)
    Q, p = rng.normal(size=(20, 2)), rng.normal(size=20)
    a = fit_difficulty("knn_std", Dataset(["a", "b"], X, y), 9)
    b = fit_difficulty("knn_std", Dataset(["a", "b"], X, y + 123.0), 9)
    np.testing.assert_allclose(estimate(a, Q), estimate(b, Q), rtol=1e-9)
    a = fit_difficulty("target_strangeness", Dataset(["a", "b"], X, y), 9)
    b = fit_difficulty("target_strangeness", Dataset(["a", "b"], X, y + 123.0), 9)
    np.testing.assert_allclose(estimate(a, Q, p), estimate(b, Q, p + 123.0), rtol=1e-9)


def test_positive_and_deterministic(hetero_splits):
    train, cal, _ = hetero_splits
    est = fit_difficulty("knn_std", train, 25, 0.01)
    s1 = estimate(est, cal.features)
    s2 = estimate(fit_difficulty("knn_std", train, 25, 0.01), cal.features)
    assert np.all(s1 >= 0.01)
    assert s1.tobytes() == s2.tobytes()


def test_sigma_tracks_error(hetero_splits):
    train, _, test = hetero_splits
    est = fit_difficulty("knn_std", train, 25, 0.01)
    rho = spearmanr(estimate(est, test.features), np.abs(test.targets - test.preds))[0]
    assert rho > 0.3


def test_unstandardized_option(rng):
    X = np.column_stack([rng.normal(size=50), 1000 * rng.normal(size=50)])
    train = Dataset(["a", "b"], X, rng.normal(size=50))
    est = fit_difficulty("knn_std", train, 5, standardize=False)
    np.testing.assert_array_equal(est.index.points, X)
