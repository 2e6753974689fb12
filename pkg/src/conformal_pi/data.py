"""Dataset container, CSV ingestion, feature standardization and seeded splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    BadFractions,
    EmptyDataset,
    MissingColumn,
    NonNumericCell,
    ReservedColumn,
)

RESERVED_COLUMNS = ("sigma", "pi_lower", "pi_upper", "pi_width", "bin", "covered")


def fmt_float(x: float) -> str:
    """Text form used for every float written to disk (exact round trip)."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus target and (optional) point-prediction vectors.

    ``targets`` may be None for unlabelled data (e.g. a test file that only
    carries predictions).
    """

    feature_names: list[str]
    features: np.ndarray
    targets: np.ndarray | None
    preds: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise ArityMismatch(f"features must be 2-D, got shape {X.shape}")
        if X.shape[1] != len(self.feature_names):
            raise ArityMismatch(
                f"{len(self.feature_names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "features", X)
        for name in ("targets", "preds"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=float).reshape(-1)
            if len(v) != X.shape[0]:
                raise ArityMismatch(f"{name} has {len(v)} entries for {X.shape[0]} rows")
            object.__setattr__(self, name, v)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(
            list(self.feature_names),
            self.features[idx],
            None if self.targets is None else self.targets[idx],
            None if self.preds is None else self.preds[idx],
        )

    def with_preds(self, preds) -> "Dataset":
        return Dataset(list(self.feature_names), self.features, self.targets, preds)


@dataclass(frozen=True)
class FeatureStats:
    means: np.ndarray
    std_devs: np.ndarray = field()

    @classmethod
    def identity(cls, n_features: int) -> "FeatureStats":
        return cls(np.zeros(n_features), np.ones(n_features))


def _parse_cell(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCell(row, column, text) from None
    if not math.isfinite(value):
        raise NonNumericCell(row, column, text)
    return value


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def load_dataset(
    path,
    target_column: str | None = "target",
    pred_column: str | None = None,
    feature_columns: Sequence[str] | None = None,
    exclude: Sequence[str] = (),
) -> Dataset:
    """Read a header-first, comma-delimited UTF-8 CSV into a :class:`Dataset`.

    When ``feature_columns`` is omitted every column other than the target and
    prediction columns (and any listed in ``exclude``) whose first data cell is
    numeric becomes a feature, in file order. Rows are numbered from 1 (first data row) in error messages.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: no header row") from None
        rows = [r for r in reader if r]
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")

    reserved = [c for c in header if c in RESERVED_COLUMNS]
    if reserved:
        raise ReservedColumn(f"{path}: reserved column name(s) {reserved} in input")
    col = {name: i for i, name in enumerate(header)}
    for name in (target_column, pred_column, *(feature_columns or ())):
        if name is not None and name not in col:
            raise MissingColumn(f"{path}: column {name!r} not found")

    if feature_columns is None:
        skip = {target_column, pred_column, *exclude}
        feature_columns = [h for h in header
                           if h not in skip and _is_number(rows[0][col[h]].strip())]
    feature_columns = list(feature_columns)

    def column(name):
        j = col[name]
        out = np.empty(len(rows))
        for i, r in enumerate(rows, start=1):
            if len(r) != len(header):
                raise ArityMismatch(f"{path}: row {i} has {len(r)} cells, header has {len(header)}")
            out[i - 1] = _parse_cell(r[j].strip(), i, name)
        return out

    X = (np.column_stack([column(c) for c in feature_columns])
         if feature_columns else np.empty((len(rows), 0)))
    y = column(target_column) if target_column is not None else None
    p = column(pred_column) if pred_column is not None else None
    return Dataset(feature_columns, X, y, p)


def save_dataset(ds: Dataset, path, target_column: str = "target",
                 pred_column: str = "pred") -> None:
    header = list(ds.feature_names)
    cols = [ds.features[:, j] for j in range(ds.n_features)]
    if ds.targets is not None:
        header.append(target_column)
        cols.append(ds.targets)
    if ds.preds is not None:
        header.append(pred_column)
        cols.append(ds.preds)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(ds)):
            w.writerow([fmt_float(c[i]) for c in cols])


def compute_stats(train: Dataset) -> FeatureStats:
    """Per-feature mean and population standard deviation.

    Constant columns get a standard deviation of 1.0 so they standardize to 0.
    """
    if len(train) == 0:
        raise EmptyDataset("cannot compute feature statistics of an empty dataset")
    means = train.features.mean(axis=0)
    stds = train.features.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    return FeatureStats(means, stds)


def standardize_features(X: np.ndarray, stats: FeatureStats) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(stats.means):
        raise ArityMismatch(
            f"expected {len(stats.means)} features, got {X.shape[-1] if X.ndim else 0}")
    return (X - stats.means) / stats.std_devs


def standardize(ds: Dataset, stats: FeatureStats) -> Dataset:
    return Dataset(list(ds.feature_names), standardize_features(ds.features, stats),
                   ds.targets, ds.preds)


def split_sizes(n: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    if len(fractions) != 3:
        raise BadFractions(f"need three fractions, got {len(fractions)}")
    if any(not (0.0 < f < 1.0) for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"fractions must lie in (0, 1) and sum to 1, got {tuple(fractions)}")
    # the small offset keeps products like 0.2 * 10 from flooring to 1
    n_cal = math.floor(fractions[1] * n + 1e-9)
    n_test = math.floor(fractions[2] * n + 1e-9)
    return n - n_cal - n_test, n_cal, n_test


def split_indices(n: int, fractions: Sequence[float], seed: int):
    """Seeded partition of ``range(n)`` into ascending (train, cal, test) index arrays."""
    n_train, n_cal, _ = split_sizes(n, fractions)
    perm = np.random.default_rng(seed).permutation(n)
    parts = perm[:n_train], perm[n_train:n_train + n_cal], perm[n_train + n_cal:]
    return tuple(np.sort(p) for p in parts)


def split_dataset(ds: Dataset, fractions: Sequence[float], seed: int):
    """Split into (train, cal, test); floors for cal/test, remainder to train."""
    return tuple(ds.take(idx) for idx in split_indices(len(ds), fractions, seed))
