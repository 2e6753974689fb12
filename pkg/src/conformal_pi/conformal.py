"""Split conformal regressors (CR) and conformal predictive systems (CPS).

Both are calibrated from residuals normalized by per-sample difficulty:

* CPS keeps signed scores ``(y - pred) / sigma``; any pair of percentiles of
  the resulting predictive distribution gives a (generally asymmetric)
  interval ``[pred + c_lo * sigma, pred + c_hi * sigma]``.
* CR keeps absolute scores ``|y - pred| / sigma`` and returns the symmetric
  interval ``pred -/+ alpha_(k) * sigma`` with ``k = ceil(confidence (n + 1))``.

Either can be Mondrian: calibration and prediction then happen separately per
bin of the point prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .difficulty import DifficultyEstimator, estimate
from .errors import BinOutOfRange, InsufficientCalibration, MissingBin

DEFAULT_LOWER = 2.5
DEFAULT_UPPER = 97.5
DEFAULT_MIN_BIN_SIZE = 40
_SNAP = 1e-9


def _snap(t: float) -> float:
    # absorb binary representation error so e.g. 0.95 * 20 counts as 19
    r = round(t)
    return float(r) if abs(t - r) < _SNAP else t


def rank_position(p: float, n: int) -> float:
    """Fractional 1-based rank ``(p / 100) (n + 1)`` of percentile ``p``."""
    return _snap(p * (n + 1) / 100.0)


def cps_quantile(scores, p: float) -> tuple[float, bool]:
    """Score at percentile ``p`` of an ascending score vector.

    Lower-tail requests (``p < 50``) round the rank down, upper-tail requests
    round it up. Ranks outside ``1..n`` are clamped and flagged.

    >>> cps_quantile([-3, -1, 0, 2, 5], 50)
    (0.0, False)
    >>> cps_quantile([-3, -1, 0, 2, 5], 97.5)
    (5.0, True)
    """
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    if n < 1:
        raise ValueError("need at least one score")
    i, clamped = _rank_index(p, n)
    return float(scores[i - 1]), clamped


def _rank_index(p: float, n: int) -> tuple[int, bool]:
    if not 0.0 < p < 100.0:
        raise ValueError(f"percentile must lie in (0, 100), got {p}")
    t = rank_position(p, n)
    i = math.floor(t) if p < 50 else math.ceil(t)
    if i < 1:
        return 1, True
    if i > n:
        return n, True
    return i, False


def min_cps_size(lower_p: float, upper_p: float) -> int:
    """Smallest calibration size for which neither percentile rank is clamped."""
    n = 1
    while _rank_index(lower_p, n)[1] or _rank_index(upper_p, n)[1]:
        n += 1
    return n


def cr_rank(confidence: float, n: int) -> int:
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    return math.ceil(_snap(confidence * (n + 1)))


def min_cr_size(confidence: float) -> int:
    n = 1
    while cr_rank(confidence, n) > n:
        n += 1
    return n


@dataclass(frozen=True)
class MondrianBinning:
    """Prediction-value thresholds; bin ``i`` is ``[edges[i-1], edges[i])``."""

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float).reshape(-1)
        if np.any(np.diff(e) <= 0):
            raise ValueError("Mondrian edges must be strictly ascending")
        object.__setattr__(self, "edges", e)

    @property
    def bin_count(self) -> int:
        return len(self.edges) + 1

    def assign(self, preds) -> np.ndarray:
        return np.searchsorted(self.edges, np.asarray(preds, dtype=float), side="right")


def fit_mondrian(cal_preds, B: int, min_bin_size: int = DEFAULT_MIN_BIN_SIZE) -> MondrianBinning:
    """Equal-frequency bins over the calibration predictions.

    Edge ``i`` sits midway between the ``floor(i n / B)``-th and next sorted
    prediction, so bins hold ``n / B`` points to within one (ties aside).
    """
    preds = np.sort(np.asarray(cal_preds, dtype=float).reshape(-1))
    n = len(preds)
    if B < 1:
        raise ValueError("bin count must be >= 1")
    if n < B * min_bin_size:
        raise InsufficientCalibration(None, B * min_bin_size, n)
    cuts = [n * i // B for i in range(1, B)]
    edges = np.unique([(preds[c - 1] + preds[c]) / 2.0 for c in cuts])
    binning = MondrianBinning(edges)
    counts = np.bincount(binning.assign(preds), minlength=binning.bin_count)
    for b, c in enumerate(counts):
        if c < min_bin_size:
            raise InsufficientCalibration(b, min_bin_size, int(c))
    return binning


def assign_bin(binning: MondrianBinning, pred: float) -> int:
    return int(binning.assign([pred])[0])


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    width: float
    sigma: float
    bin: int | None = None
    clamped_low: bool = False
    clamped_high: bool = False


@dataclass(frozen=True)
class Intervals:
    """Column-wise batch of prediction intervals."""

    lower: np.ndarray
    upper: np.ndarray
    sigma: np.ndarray
    bins: np.ndarray
    clamped_low: np.ndarray
    clamped_high: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def __len__(self):
        return len(self.lower)

    def __getitem__(self, i) -> PredictionInterval:
        return PredictionInterval(float(self.lower[i]), float(self.upper[i]),
                                  float(self.upper[i] - self.lower[i]), float(self.sigma[i]),
                                  int(self.bins[i]), bool(self.clamped_low[i]),
                                  bool(self.clamped_high[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@dataclass(frozen=True)
class _ConformalModel:
    scores_per_bin: list
    binning: MondrianBinning | None = None
    estimator: DifficultyEstimator | None = None
    meta: dict = field(default_factory=dict)

    @property
    def mondrian(self) -> bool:
        return self.binning is not None

    @property
    def bin_counts(self) -> list[int]:
        return [len(s) for s in self.scores_per_bin]

    def _resolve_bins(self, bins, m: int) -> np.ndarray:
        if self.binning is None:
            if bins is None:
                return np.zeros(m, dtype=np.intp)
            bins = np.broadcast_to(np.asarray(bins, dtype=np.intp), (m,))
            if np.any(bins != 0):
                raise BinOutOfRange("non-Mondrian model has only bin 0")
            return np.array(bins)
        if bins is None:
            raise MissingBin("a Mondrian model needs a bin for every prediction")
        bins = np.broadcast_to(np.asarray(bins, dtype=np.intp), (m,))
        if np.any((bins < 0) | (bins >= len(self.scores_per_bin))):
            raise BinOutOfRange(f"bins must lie in 0..{len(self.scores_per_bin) - 1}")
        return np.array(bins)

    def sigmas_and_bins(self, features, preds):
        """Difficulty and Mondrian category for raw test rows."""
        if self.estimator is None:
            raise ValueError("model was calibrated without a difficulty estimator")
        sigmas = estimate(self.estimator, features, preds)
        bins = self.binning.assign(preds) if self.binning is not None else None
        return sigmas, bins


@dataclass(frozen=True)
class CpsModel(_ConformalModel):
    kind = "cps"

    def predict(self, preds, sigmas, bins=None, lower_percentiles: float = DEFAULT_LOWER,
                higher_percentiles: float = DEFAULT_UPPER) -> Intervals:
        return predict_cps(self, preds, sigmas, bins, lower_percentiles, higher_percentiles)


@dataclass(frozen=True)
class CrModel(_ConformalModel):
    kind = "cr"

    def predict(self, preds, sigmas, bins=None, confidence: float = 0.95) -> Intervals:
        return predict_cr(self, preds, sigmas, bins, confidence)


def _check_sigmas(sigmas, m: int) -> np.ndarray:
    sigmas = np.broadcast_to(np.asarray(sigmas, dtype=float), (m,))
    if np.any(~(sigmas > 0)):
        raise ValueError("sigmas must be strictly positive")
    return np.array(sigmas)


def _binned_scores(scores, bins, n_bins):
    bins = np.zeros(len(scores), dtype=np.intp) if bins is None else np.asarray(bins, dtype=np.intp)
    return [np.sort(scores[bins == b], kind="stable") for b in range(n_bins)]


def fit_cps(residuals, sigmas, bins=None, n_bins: int | None = None, binning=None,
            estimator=None, lower_p: float | None = DEFAULT_LOWER,
            upper_p: float | None = DEFAULT_UPPER, meta: dict | None = None) -> CpsModel:
    """CPS from raw calibration residuals ``y - pred`` and their sigmas.

    With percentiles given, every bin must be large enough that neither rank
    is clamped; pass ``None`` to skip the check.
    """
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    sigmas = _check_sigmas(sigmas, len(residuals))
    if n_bins is None:
        n_bins = binning.bin_count if binning is not None else 1
    per_bin = _binned_scores(residuals / sigmas, bins, n_bins)
    needed = (min_cps_size(lower_p, upper_p)
              if lower_p is not None and upper_p is not None else 1)
    _gate(per_bin, needed, binning is not None)
    meta = dict(meta or {})
    meta["bin_counts"] = [len(s) for s in per_bin]
    return CpsModel(per_bin, binning, estimator, meta)


def fit_cr(residuals, sigmas, bins=None, n_bins: int | None = None, binning=None,
           estimator=None, confidence: float | None = None, meta: dict | None = None) -> CrModel:
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    sigmas = _check_sigmas(sigmas, len(residuals))
    if n_bins is None:
        n_bins = binning.bin_count if binning is not None else 1
    per_bin = _binned_scores(np.abs(residuals) / sigmas, bins, n_bins)
    _gate(per_bin, min_cr_size(confidence) if confidence is not None else 1, binning is not None)
    meta = dict(meta or {})
    meta["bin_counts"] = [len(s) for s in per_bin]
    return CrModel(per_bin, binning, estimator, meta)


def _gate(per_bin, needed: int, mondrian: bool) -> None:
    for b, s in enumerate(per_bin):
        if len(s) < needed:
            raise InsufficientCalibration(b if mondrian else None, needed, len(s))


def _calibration_inputs(cal, estimator, binning):
    if cal.targets is None or cal.preds is None:
        raise ValueError("calibration data needs both targets and predictions")
    sigmas = estimate(estimator, cal.features, cal.preds)
    bins = binning.assign(cal.preds) if binning is not None else None
    return cal.targets - cal.preds, sigmas, bins


def calibrate_cps(cal, estimator: DifficultyEstimator, binning: MondrianBinning | None = None,
                  lower_p: float | None = DEFAULT_LOWER, upper_p: float | None = DEFAULT_UPPER,
                  meta: dict | None = None) -> CpsModel:
    residuals, sigmas, bins = _calibration_inputs(cal, estimator, binning)
    return fit_cps(residuals, sigmas, bins, binning=binning, estimator=estimator,
                   lower_p=lower_p, upper_p=upper_p, meta=meta)


def calibrate_cr(cal, estimator: DifficultyEstimator, binning: MondrianBinning | None = None,
                 confidence: float | None = None, meta: dict | None = None) -> CrModel:
    residuals, sigmas, bins = _calibration_inputs(cal, estimator, binning)
    return fit_cr(residuals, sigmas, bins, binning=binning, estimator=estimator,
                  confidence=confidence, meta=meta)


def predict_cps(model: CpsModel, preds, sigmas, bins=None, lower_p: float = DEFAULT_LOWER,
                upper_p: float = DEFAULT_UPPER) -> Intervals:
    preds = np.atleast_1d(np.asarray(preds, dtype=float))
    m = len(preds)
    sigmas = _check_sigmas(sigmas, m)
    bins = model._resolve_bins(bins, m)
    c_lo, c_hi = np.empty(m), np.empty(m)
    f_lo, f_hi = np.zeros(m, dtype=bool), np.zeros(m, dtype=bool)
    for b in np.unique(bins):
        scores = model.scores_per_bin[b]
        if len(scores) == 0:
            raise InsufficientCalibration(int(b), 1, 0)
        sel = bins == b
        c_lo[sel], f_lo[sel] = cps_quantile(scores, lower_p)
        c_hi[sel], f_hi[sel] = cps_quantile(scores, upper_p)
    return Intervals(preds + c_lo * sigmas, preds + c_hi * sigmas, sigmas, bins, f_lo, f_hi)


def predict_cr(model: CrModel, preds, sigmas, bins=None, confidence: float = 0.95) -> Intervals:
    preds = np.atleast_1d(np.asarray(preds, dtype=float))
    m = len(preds)
    sigmas = _check_sigmas(sigmas, m)
    bins = model._resolve_bins(bins, m)
    alpha = np.empty(m)
    for b in np.unique(bins):
        scores = model.scores_per_bin[b]
        k = cr_rank(confidence, len(scores))
        if k > len(scores):
            raise InsufficientCalibration(int(b) if model.mondrian else None,
                                          min_cr_size(confidence), len(scores))
        alpha[bins == b] = scores[k - 1]
    hw = alpha * sigmas
    no = np.zeros(m, dtype=bool)
    return Intervals(preds - hw, preds + hw, sigmas, bins, no, no.copy())


def predict_interval_cps(model: CpsModel, pred: float, sigma: float, bin: int | None = None,
                         lower_p: float = DEFAULT_LOWER,
                         upper_p: float = DEFAULT_UPPER) -> PredictionInterval:
    return predict_cps(model, [pred], [sigma], None if bin is None else [bin],
                       lower_p, upper_p)[0]


def predict_interval_cr(model: CrModel, pred: float, sigma: float, bin: int | None = None,
                        confidence: float = 0.95) -> PredictionInterval:
    return predict_cr(model, [pred], [sigma], None if bin is None else [bin], confidence)[0]
