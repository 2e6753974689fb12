"""Hyperparameter sweep over CPS configurations and seeds.

Each seed pools the training and calibration rows and re-partitions them at
the original sizes, so the sweep sees calibration variability. A grid cell is
eligible when it calibrated on every seed and its seed-averaged coverage on
the tuning set reaches the floor.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conformal import (
    DEFAULT_LOWER,
    DEFAULT_MIN_BIN_SIZE,
    DEFAULT_UPPER,
    calibrate_cps,
    fit_mondrian,
)
from .data import Dataset
from .difficulty import estimate, fit_difficulty
from .errors import EmptyResults, InsufficientCalibration
from .evaluation import effective_coverage

log = logging.getLogger(__name__)

# configuration name -> (difficulty kind, Mondrian?)
CONFIGURATIONS = {
    "cps_norm_std": ("knn_std", False),
    "cps_norm_targ_strng": ("target_strangeness", False),
    "cps_mond_norm_std": ("knn_std", True),
    "cps_mond_norm_targ_strng": ("target_strangeness", True),
    "cps_mond_norm_res": ("knn_residual", True),
}
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_FLOOR = 0.89


@dataclass(frozen=True)
class SweepGrid:
    configurations: tuple = tuple(CONFIGURATIONS)
    k_values: tuple = (5, 25, 100)
    bin_counts: tuple = (2, 5, 10)
    betas: tuple = (0.01,)
    seeds: tuple = DEFAULT_SEEDS
    lower_p: float = DEFAULT_LOWER
    upper_p: float = DEFAULT_UPPER
    coverage_floor: float = DEFAULT_FLOOR
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE
    standardize: bool = True

    def __post_init__(self):
        unknown = [c for c in self.configurations if c not in CONFIGURATIONS]
        if unknown:
            raise ValueError(f"unknown configuration(s) {unknown}")
        if not 0.0 < self.coverage_floor < 1.0:
            raise ValueError("coverage_floor must lie in (0, 1)")

    def cells(self) -> list["Cell"]:
        """Grid cells in deterministic order; an empty list field gives no cells."""
        out = []
        for name in self.configurations:
            kind, mondrian = CONFIGURATIONS[name]
            for k in self.k_values:
                for B in (self.bin_counts if mondrian else (None,)):
                    for beta in self.betas:
                        out.append(Cell(name, kind, int(k), B, float(beta)))
        return out if self.seeds else []


@dataclass(frozen=True)
class Cell:
    configuration: str
    kind: str
    k: int
    bins: int | None
    beta: float

    @property
    def config_id(self) -> str:
        b = "" if self.bins is None else f"/B={self.bins}"
        return f"{self.configuration}/k={self.k}{b}/beta={self.beta:g}"


@dataclass
class SweepResult:
    config_id: str
    configuration: str
    kind: str
    k: int
    bins: int | None
    beta: float
    per_seed: list = field(default_factory=list)  # (seed, mean_width, coverage)
    mean_width: float = float("nan")
    coverage: float = float("nan")
    eligible: bool = False
    reason: str = ""


@dataclass(frozen=True)
class Selection:
    result: SweepResult
    no_eligible_config: bool

    @property
    def config_id(self) -> str:
        return self.result.config_id


def reshuffle(train: Dataset, cal: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Pool train and cal, then re-split at their original sizes."""
    pooled = Dataset(train.feature_names, np.vstack([train.features, cal.features]),
                     np.concatenate([train.targets, cal.targets]),
                     np.concatenate([train.preds, cal.preds]))
    perm = np.random.default_rng(seed).permutation(len(pooled))
    return pooled.take(np.sort(perm[:len(train)])), pooled.take(np.sort(perm[len(train):]))


def _seed_results(grid: SweepGrid, cells, train, cal, tune, seed):
    """Evaluate every cell for one seed; returns {config_id: (width, coverage) | reason}."""
    tr, ca = reshuffle(train, cal, seed)
    fitted = {}
    binnings = {}
    out = {}
    for cell in cells:
        key = (cell.kind, cell.k, cell.beta)
        try:
            if key not in fitted:
                est = fit_difficulty(cell.kind, tr, cell.k, cell.beta,
                                     residual_source=tr.preds, standardize=grid.standardize)
                fitted[key] = (est, estimate(est, tune.features, tune.preds))
            est, tune_sigmas = fitted[key]
            binning = None
            if cell.bins is not None:
                if cell.bins not in binnings:
                    try:
                        binnings[cell.bins] = fit_mondrian(ca.preds, cell.bins, grid.min_bin_size)
                    except InsufficientCalibration as exc:
                        binnings[cell.bins] = exc
                binning = binnings[cell.bins]
                if isinstance(binning, Exception):
                    raise binning
            model = calibrate_cps(ca, est, binning, grid.lower_p, grid.upper_p)
            tune_bins = binning.assign(tune.preds) if binning is not None else None
            iv = model.predict(tune.preds, tune_sigmas, tune_bins, grid.lower_p, grid.upper_p)
            out[cell.config_id] = (float(np.mean(iv.width)),
                                   effective_coverage(iv, tune.targets))
        except InsufficientCalibration as exc:
            out[cell.config_id] = f"InsufficientCalibration: {exc}"
    return out


def run_sweep(grid: SweepGrid, train: Dataset, cal: Dataset, tune: Dataset,
              n_jobs: int = 1) -> list[SweepResult]:
    """One :class:`SweepResult` per grid cell, in grid order.

    Seeds run in parallel when ``n_jobs > 1``; merging is by grid order, so
    output does not depend on scheduling.
    """
    for name, ds in (("train", train), ("cal", cal), ("tune", tune)):
        if ds.preds is None or ds.targets is None:
            raise ValueError(f"{name} data needs targets and predictions")
    cells = grid.cells()
    if not cells:
        return []

    def run(seed):
        log.info("sweep seed %s: %d cells", seed, len(cells))
        return _seed_results(grid, cells, train, cal, tune, seed)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            by_seed = list(pool.map(run, grid.seeds))
    else:
        by_seed = [run(s) for s in grid.seeds]

    results = []
    for cell in cells:
        r = SweepResult(cell.config_id, cell.configuration, cell.kind, cell.k, cell.bins,
                        cell.beta)
        reasons = []
        for seed, seed_out in zip(grid.seeds, by_seed):
            v = seed_out[cell.config_id]
            if isinstance(v, str):
                reasons.append(f"seed {seed}: {v}")
            else:
                r.per_seed.append((seed, *v))
        if r.per_seed:
            r.mean_width = float(np.mean([w for _, w, _ in r.per_seed]))
            r.coverage = float(np.mean([c for _, _, c in r.per_seed]))
        if reasons:
            r.reason = "; ".join(reasons)
        elif r.coverage < grid.coverage_floor:
            r.reason = f"coverage {r.coverage:.4f} below floor {grid.coverage_floor:g}"
        r.eligible = not r.reason
        results.append(r)
    return results


def _failed(r: SweepResult) -> bool:
    return bool(np.isnan(r.coverage)) or r.reason.startswith("seed ")


def select_best(results, coverage_floor: float = DEFAULT_FLOOR) -> Selection:
    """Narrowest mean width among rows meeting the coverage floor.

    Ties go to higher coverage, then smaller k, then config id. With no
    eligible row the highest-coverage row is returned and flagged.
    """
    results = list(results)
    if not results:
        raise EmptyResults("no sweep results to select from")
    eligible = [r for r in results if not _failed(r) and r.coverage >= coverage_floor]
    if eligible:
        best = min(eligible, key=lambda r: (r.mean_width, -r.coverage, r.k, r.config_id))
        return Selection(best, False)
    usable = [r for r in results if not np.isnan(r.coverage)] or results
    best = min(usable, key=lambda r: (-np.nan_to_num(r.coverage, nan=-1.0),
                                      np.nan_to_num(r.mean_width, nan=np.inf), r.config_id))
    return Selection(best, True)


def best_per_configuration(results, coverage_floor: float = DEFAULT_FLOOR) -> list[Selection]:
    """Best grid cell for each configuration name, in first-appearance order."""
    groups: dict[str, list] = {}
    for r in results:
        groups.setdefault(r.configuration, []).append(r)
    return [select_best(rows, coverage_floor) for rows in groups.values()]
