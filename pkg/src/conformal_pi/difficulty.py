"""KNN difficulty estimators.

Each estimator maps a sample to a positive scale ``sigma`` from the k nearest
training rows (standardized features by default):

``knn_std``
    population std of the neighbours' targets
``knn_residual``
    mean of the neighbours' absolute training residuals
``target_strangeness``
    mean absolute gap between the sample's *predicted* target and the
    neighbours' targets

``beta`` is added to every sigma so normalized scores never divide by zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureStats, compute_stats, standardize_features
from .errors import EmptyDataset, MissingPredictions, MissingResiduals
from .knn import DEFAULT_K, NeighborIndex

KINDS = ("knn_std", "knn_residual", "target_strangeness")
ALIASES = {
    "norm_std": "knn_std",
    "std": "knn_std",
    "norm_res": "knn_residual",
    "res": "knn_residual",
    "norm_targ_strng": "target_strangeness",
    "targ_strng": "target_strangeness",
}
DEFAULT_BETA = 0.01


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown difficulty estimator {kind!r}; expected one of {KINDS}")
    return kind


@dataclass(frozen=True)
class DifficultyEstimator:
    kind: str
    k: int
    beta: float
    index: NeighborIndex
    feature_stats: FeatureStats
    ref_targets: np.ndarray | None = None
    ref_abs_residuals: np.ndarray | None = None

    @property
    def n_features(self) -> int:
        return len(self.feature_stats.means)

    def apply(self, X, y=None) -> np.ndarray:
        return estimate(self, X, y)


def fit_difficulty(kind: str, train: Dataset, k: int = DEFAULT_K, beta: float = DEFAULT_BETA,
                   residual_source=None, standardize: bool = True) -> DifficultyEstimator:
    """Fit an estimator on the proper training set.

    ``residual_source`` holds point predictions for the training rows and is
    required by ``knn_residual``.
    """
    kind = canonical_kind(kind)
    if len(train) == 0:
        raise EmptyDataset("difficulty estimator needs a non-empty training set")
    if k < 1:
        raise ValueError("k must be >= 1")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    stats = compute_stats(train) if standardize else FeatureStats.identity(train.n_features)
    index = NeighborIndex(standardize_features(train.features, stats))

    targets = residuals = None
    if kind == "knn_residual":
        if residual_source is None:
            raise MissingResiduals("knn_residual needs predictions for the training rows")
        if train.targets is None:
            raise EmptyDataset("knn_residual needs training targets")
        residuals = np.abs(train.targets - np.asarray(residual_source, dtype=float).reshape(-1))
    else:
        if train.targets is None:
            raise EmptyDataset(f"{kind} needs training targets")
        targets = train.targets.copy()
    return DifficultyEstimator(kind, int(k), float(beta), index, stats, targets, residuals)


def estimate(est: DifficultyEstimator, features, preds=None) -> np.ndarray:
    """Sigmas for each row of ``features``; ``preds`` is used only by target strangeness."""
    Z = standardize_features(np.atleast_2d(np.asarray(features, dtype=float)), est.feature_stats)
    idx, _ = est.index.query_batch(Z, est.k)
    if est.kind == "knn_std":
        raw = est.ref_targets[idx].std(axis=1)
    elif est.kind == "knn_residual":
        raw = est.ref_abs_residuals[idx].mean(axis=1)
    else:
        if preds is None:
            raise MissingPredictions("target_strangeness needs the predicted targets")
        preds = np.asarray(preds, dtype=float).reshape(-1)
        if len(preds) != Z.shape[0]:
            raise ValueError(f"{len(preds)} predictions for {Z.shape[0]} rows")
        raw = np.abs(preds[:, None] - est.ref_targets[idx]).mean(axis=1)
    return raw + est.beta
