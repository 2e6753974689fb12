import numpy as np
from scipy.stats import spearmanr

from conformal_pi.data import Dataset, save_dataset
from conformal_pi.difficulty import estimate, fit_difficulty
from conformal_pi.evaluation import rmse
from conformal_pi.testbed import (
    NoiseProfile,
    fit_baseline,
    generate_synthetic,
    predict_baseline,
    target_function,
)


def test_deterministic_bytes(tmp_path):
    for name in ("a.csv", "b.csv"):
        save_dataset(generate_synthetic(200, 3, NoiseProfile(1, 5, 0.3), seed=7), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_feature_range():
    ds = generate_synthetic(1000, 4, seed=1)
    assert ds.features.shape == (1000, 4)
    assert ds.features.min() >= -1 and ds.features.max() <= 1


def test_homoscedastic_sigmas_flat():
    ds = generate_synthetic(2000, 2, NoiseProfile(1.0, 0.0, 0.0), seed=3)
    train, query = ds.take(range(1000)), ds.take(range(1000, 2000))
    base = fit_baseline(train, 25)
    resid = Dataset(train.feature_names, train.features,
                    train.targets - predict_baseline(base, train.features))
    s = estimate(fit_difficulty("knn_std", resid, 25), query.features)
    assert s.std() / s.mean() < 0.3


def test_noise_grows_with_x1():
    ds = generate_synthetic(2000, 2, NoiseProfile(1.0, 5.0, 0.0), seed=4)
    err = np.abs(ds.targets - target_function(ds.features))
    ax1 = np.abs(ds.features[:, 0])
    # Gaussian noise caps the population rank correlation near 0.446
    assert spearmanr(err, ax1)[0] > 0.4
    noise = ds.targets - target_function(ds.features)
    outer, inner = noise[ax1 > 0.8].std(), noise[ax1 < 0.2].std()
    # expected ratio (1 + 5 * 0.9) / (1 + 5 * 0.1) = 3.67
    assert 3.0 < outer / inner < 4.4


def test_noise_standardized_for_any_skew():
    for skew in (0.0, 0.5, 0.9):
        ds = generate_synthetic(200_000, 1, NoiseProfile(2.0, 0.0, skew), seed=5)
        z = (ds.targets - target_function(ds.features)) / 2.0
        assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01


def test_baseline_examples():
    ds = generate_synthetic(30, 2, seed=2)
    full = fit_baseline(ds, k=30)
    np.testing.assert_allclose(predict_baseline(full, ds.features[:5]), ds.targets.mean())
    one = fit_baseline(ds, k=1)
    np.testing.assert_array_equal(predict_baseline(one, ds.features), ds.targets)


def test_baseline_beats_mean():
    ds = generate_synthetic(1000, 2, seed=9)
    train, test = ds.take(range(500)), ds.take(range(500, 1000))
    model = fit_baseline(train, 25)
    assert rmse(predict_baseline(model, test.features), test.targets) < \
        rmse(np.full(500, train.targets.mean()), test.targets)
