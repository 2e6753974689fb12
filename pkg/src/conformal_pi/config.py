"""Flat ``section.key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Values from the command line
override the file. Lists are comma separated.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .conformal import DEFAULT_LOWER, DEFAULT_MIN_BIN_SIZE, DEFAULT_UPPER
from .difficulty import DEFAULT_BETA
from .errors import ConfigError
from .knn import DEFAULT_K
from .sweep import CONFIGURATIONS, DEFAULT_FLOOR, DEFAULT_SEEDS


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _names(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(s):
    return s.strip() or None


# dotted key -> (attribute, parser)
KEYS = {
    "paths.train": ("train", _opt),
    "paths.cal": ("cal", _opt),
    "paths.test": ("test", _opt),
    "paths.tune": ("tune", _opt),
    "paths.model": ("model", _opt),
    "paths.predictions": ("predictions", _opt),
    "paths.out": ("out", str),
    "columns.target": ("target_column", str),
    "columns.pred": ("pred_column", str),
    "columns.features": ("feature_columns", lambda s: _names(s) or None),
    "difficulty.kind": ("kind", str),
    "difficulty.k": ("k", int),
    "difficulty.beta": ("beta", float),
    "mondrian.enabled": ("mondrian", _bool),
    "mondrian.bins": ("bins", int),
    "mondrian.min_bin_size": ("min_bin_size", int),
    "percentiles.lower": ("lower_p", float),
    "percentiles.upper": ("upper_p", float),
    "cr.enabled": ("cr", _bool),
    "confidence": ("confidence", float),
    "coverage_floor": ("coverage_floor", float),
    "sweep.configurations": ("sweep_configurations", _names),
    "sweep.k_values": ("sweep_k", _ints),
    "sweep.bin_counts": ("sweep_bins", _ints),
    "sweep.betas": ("sweep_betas", _floats),
    "sweep.seeds": ("sweep_seeds", _ints),
    "sweep.jobs": ("jobs", int),
    "seed": ("seed", int),
    "standardize": ("standardize", _bool),
    "synth.n": ("synth_n", int),
    "synth.dims": ("synth_dims", int),
    "synth.base_std": ("base_std", float),
    "synth.slope": ("slope", float),
    "synth.skew": ("skew", float),
    "synth.split": ("synth_split", lambda s: _floats(s) or None),
    "synth.baseline_k": ("baseline_k", int),
}


@dataclass
class RunConfig:
    train: str | None = None
    cal: str | None = None
    test: str | None = None
    tune: str | None = None
    model: str | None = None
    predictions: str | None = None
    out: str = "out"
    target_column: str = "target"
    pred_column: str = "pred"
    feature_columns: tuple | None = None
    kind: str = "knn_std"
    k: int = DEFAULT_K
    beta: float = DEFAULT_BETA
    mondrian: bool = False
    bins: int = 5
    min_bin_size: int = DEFAULT_MIN_BIN_SIZE
    lower_p: float = DEFAULT_LOWER
    upper_p: float = DEFAULT_UPPER
    cr: bool = False
    confidence: float = 0.95
    coverage_floor: float = DEFAULT_FLOOR
    sweep_configurations: tuple = tuple(CONFIGURATIONS)
    sweep_k: tuple = (5, 25, 100)
    sweep_bins: tuple = (2, 5, 10)
    sweep_betas: tuple = (DEFAULT_BETA,)
    sweep_seeds: tuple = DEFAULT_SEEDS
    jobs: int = 1
    seed: int = 0
    standardize: bool = True
    synth_n: int = 5000
    synth_dims: int = 2
    base_std: float = 1.0
    slope: float = 5.0
    skew: float = 0.0
    synth_split: tuple | None = None
    baseline_k: int = 25

    def update(self, mapping: dict[str, str]) -> "RunConfig":
        for key, raw in mapping.items():
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            attr, parse = KEYS[key]
            try:
                setattr(self, attr, parse(raw))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        return self

    def validate(self) -> "RunConfig":
        if not 0.0 < self.lower_p < self.upper_p < 100.0:
            raise ConfigError(
                f"percentiles must satisfy 0 < lower < upper < 100, got {self.lower_p}, {self.upper_p}")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if not 0.0 < self.coverage_floor < 1.0:
            raise ConfigError("coverage_floor must lie in (0, 1)")
        if self.k < 1 or self.beta < 0 or self.bins < 1 or self.min_bin_size < 1:
            raise ConfigError("k, bins and min_bin_size must be >= 1 and beta >= 0")
        return self

    def as_dict(self) -> dict:
        by_attr = {attr: key for key, (attr, _) in KEYS.items()}
        out = {}
        for f in fields(self):
            if f.name in by_attr:
                v = getattr(self, f.name)
                if isinstance(v, tuple):
                    v = ",".join(str(x) for x in v)
                out[by_attr[f.name]] = v
        return out


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides: dict[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        cfg.update(parse_config_text(Path(path).read_text(encoding="utf-8"), str(path)))
    if overrides:
        cfg.update(overrides)
    return cfg.validate()
