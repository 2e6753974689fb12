"""Coverage, width and difficulty diagnostics for a batch of intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import rank_position
from .errors import EmptyInput, LengthMismatch

QUARTER_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


def _bounds(intervals):
    """(lower, upper) arrays from an ``Intervals`` batch or a list of intervals."""
    if hasattr(intervals, "lower") and isinstance(intervals.lower, np.ndarray):
        return intervals.lower, intervals.upper
    intervals = list(intervals)
    return (np.array([iv.lower for iv in intervals], dtype=float),
            np.array([iv.upper for iv in intervals], dtype=float))


def covered(intervals, targets) -> np.ndarray:
    lower, upper = _bounds(intervals)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if len(targets) != len(lower):
        raise LengthMismatch(f"{len(lower)} intervals for {len(targets)} targets")
    return (lower <= targets) & (targets <= upper)


def effective_coverage(intervals, targets) -> float:
    """Fraction of targets inside their interval, bounds inclusive."""
    hits = covered(intervals, targets)
    if len(hits) == 0:
        raise EmptyInput("no intervals to evaluate")
    return float(np.count_nonzero(hits)) / len(hits)


@dataclass(frozen=True)
class WidthBox:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    lower_fence: float
    upper_fence: float
    outliers: int
    mean: float

    def as_rows(self):
        return [("min", self.min), ("q1", self.q1), ("median", self.median), ("q3", self.q3),
                ("max", self.max), ("lower_fence", self.lower_fence),
                ("upper_fence", self.upper_fence), ("outliers", self.outliers),
                ("mean", self.mean)]


def box_quartile(sorted_values: np.ndarray, p: float) -> float:
    """Order statistic at rank ``(p/100)(n+1)`` rounded toward the median.

    This is the rank position used by ``cps_quantile``; rounding goes inward
    (up below the median, down above it), so q1 <= median <= q3 always holds
    and e.g. widths ``1, 2, 3, 4, 100`` give quartiles 2, 3, 4.
    """
    n = len(sorted_values)
    t = rank_position(p, n)
    i = math.ceil(t) if p <= 50 else math.floor(t)
    return float(sorted_values[min(max(i, 1), n) - 1])


def width_stats(intervals) -> WidthBox:
    """Five-number summary of widths with Tukey 1.5 IQR fences."""
    lower, upper = _bounds(intervals)
    widths = np.sort(upper - lower)
    if len(widths) == 0:
        raise EmptyInput("no intervals to summarize")
    q1, med, q3 = (box_quartile(widths, p) for p in (25, 50, 75))
    iqr = q3 - q1
    lo_f, hi_f = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    n_out = int(np.count_nonzero((widths < lo_f) | (widths > hi_f)))
    return WidthBox(float(widths[0]), q1, med, q3, float(widths[-1]), lo_f, hi_f, n_out,
                    float(np.mean(widths)))


def rmse(preds, targets) -> float:
    err = np.asarray(preds, dtype=float) - np.asarray(targets, dtype=float)
    return float(np.sqrt(np.mean(err * err)))


def difficulty_quantile_rmse(preds, targets, sigmas, fractions=QUARTER_FRACTIONS):
    """RMSE over the easiest ``ceil(f n)`` rows for each cumulative fraction ``f``.

    Rows are ordered by ascending sigma, ties by row position.
    """
    preds = np.asarray(preds, dtype=float).reshape(-1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    sigmas = np.asarray(sigmas, dtype=float).reshape(-1)
    n = len(preds)
    if len(targets) != n or len(sigmas) != n:
        raise LengthMismatch("preds, targets and sigmas must have equal length")
    if n == 0:
        raise EmptyInput("no rows")
    fractions = [float(f) for f in fractions]
    if any(not 0.0 < f <= 1.0 for f in fractions) or fractions != sorted(fractions):
        raise ValueError("fractions must be ascending within (0, 1]")
    order = np.argsort(sigmas, kind="stable")
    sq = (preds[order] - targets[order]) ** 2
    out = []
    for f in fractions:
        m = max(1, math.ceil(f * n - 1e-9))
        out.append((f, float(np.sqrt(np.mean(sq[:m])))))
    return out


@dataclass(frozen=True)
class ExtremeRow:
    row: int
    prediction: float
    lower: float
    upper: float
    width: float
    target: float


def interval_extremes(intervals, preds, targets) -> dict[str, ExtremeRow]:
    """Rows with the smallest, median (lower middle) and largest width."""
    lower, upper = _bounds(intervals)
    preds = np.asarray(preds, dtype=float).reshape(-1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    n = len(lower)
    if n == 0:
        raise EmptyInput("no intervals")
    if len(preds) != n or len(targets) != n:
        raise LengthMismatch("intervals, preds and targets must have equal length")
    widths = upper - lower
    order = np.argsort(widths, kind="stable")

    def row(i):
        i = int(i)
        return ExtremeRow(i, float(preds[i]), float(lower[i]), float(upper[i]),
                          float(widths[i]), float(targets[i]))

    return {"smallest": row(order[0]), "median": row(order[(n - 1) // 2]),
            "largest": row(order[-1])}


@dataclass(frozen=True)
class EvalReport:
    n: int
    effective_coverage: float
    mean_width: float
    median_width: float
    width_box: WidthBox
    quantile_rmse: list = field(default_factory=list)
    extremes: dict = field(default_factory=dict)


def evaluate(intervals, preds, targets, sigmas, fractions=QUARTER_FRACTIONS) -> EvalReport:
    box = width_stats(intervals)
    return EvalReport(
        n=len(np.asarray(targets)),
        effective_coverage=effective_coverage(intervals, targets),
        mean_width=box.mean,
        median_width=box.median,
        width_box=box,
        quantile_rmse=difficulty_quantile_rmse(preds, targets, sigmas, fractions),
        extremes=interval_extremes(intervals, preds, targets),
    )
