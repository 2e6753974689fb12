"""Seeded heteroscedastic regression data and a KNN baseline regressor.

Target function (fixed)::

    f(x) = 50 + 4 x1 + 3 x1^2 + sum_{j>=2} 2 sin(pi x_j)

Noise is ``s(x) * z`` with ``s(x) = base_std + slope |x1|`` and

    z = sqrt(1 - skew) * N1 + sqrt(skew) * (N2^2 - 1) / sqrt(2)

with independent standard normals ``N1, N2``. The second term is a
standardized chi-square(1) draw, one-sided about its minimum, so ``z`` has
mean 0 and variance 1 for every ``skew`` and ``skew`` is the share of noise
variance drawn from the right-skewed component. Features are uniform on
``[-1, 1]^dims``. All draws come from ``numpy.random.default_rng(seed)``
(PCG64) in the order: features, N1, N2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureStats, compute_stats, split_dataset, standardize_features
from .errors import EmptyDataset
from .knn import NeighborIndex


@dataclass(frozen=True)
class NoiseProfile:
    base_std: float = 1.0
    slope: float = 5.0
    skew: float = 0.0

    def __post_init__(self):
        if not self.base_std > 0:
            raise ValueError("base_std must be positive")
        if self.slope < 0:
            raise ValueError("slope must be non-negative")
        if not 0.0 <= self.skew < 1.0:
            raise ValueError("skew must lie in [0, 1)")

    def std(self, x1):
        return self.base_std + self.slope * np.abs(x1)


def target_function(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    x1 = X[:, 0]
    out = 50.0 + 4.0 * x1 + 3.0 * x1 ** 2
    for j in range(1, X.shape[1]):
        out = out + 2.0 * np.sin(np.pi * X[:, j])
    return out


def generate_synthetic(n: int, dims: int = 2, profile: NoiseProfile | None = None,
                       seed: int = 0) -> Dataset:
    if n < 1 or dims < 1:
        raise ValueError("n and dims must be >= 1")
    profile = profile or NoiseProfile()
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n, dims))
    normal = rng.standard_normal(n)
    one_sided = rng.standard_normal(n) ** 2
    z = (np.sqrt(1.0 - profile.skew) * normal
         + np.sqrt(profile.skew) * (one_sided - 1.0) / np.sqrt(2.0))
    y = target_function(X) + profile.std(X[:, 0]) * z
    return Dataset([f"x{j + 1}" for j in range(dims)], X, y)


@dataclass(frozen=True)
class BaselineModel:
    """KNN mean regressor over standardized features."""

    k: int
    index: NeighborIndex
    stats: FeatureStats
    targets: np.ndarray


def fit_baseline(train: Dataset, k: int = 25) -> BaselineModel:
    if len(train) == 0 or train.targets is None:
        raise EmptyDataset("baseline needs a non-empty labelled training set")
    stats = compute_stats(train)
    return BaselineModel(k, NeighborIndex(standardize_features(train.features, stats)), stats,
                         train.targets.copy())


def predict_baseline(model: BaselineModel, features) -> np.ndarray:
    Z = standardize_features(np.atleast_2d(np.asarray(features, dtype=float)), model.stats)
    idx, _ = model.index.query_batch(Z, model.k)
    return model.targets[idx].mean(axis=1)


def make_splits(n_train: int, n_cal: int, n_test: int, dims: int = 2,
                profile: NoiseProfile | None = None, seed: int = 0, baseline_k: int = 25):
    """Generate, split and attach baseline predictions to all three parts.

    Training-row predictions are in-sample; they only feed the residual-based
    difficulty estimator.
    """
    n = n_train + n_cal + n_test
    ds = generate_synthetic(n, dims, profile, seed)
    train, cal, test = split_dataset(ds, (n_train / n, n_cal / n, n_test / n), seed)
    model = fit_baseline(train, baseline_k)
    return tuple(part.with_preds(predict_baseline(model, part.features))
                 for part in (train, cal, test))
