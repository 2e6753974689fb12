"""Versioned JSON model files.

Floats are written with 17 significant digits so a load reproduces every
score, edge and reference value exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .conformal import CpsModel, CrModel, MondrianBinning
from .data import FeatureStats, fmt_float
from .difficulty import DifficultyEstimator, canonical_kind
from .errors import CorruptModel, VersionMismatch
from .knn import NeighborIndex

FORMAT_VERSION = 1


def _encode(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        if any(isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            items = [pad + _encode(v, indent + 1) for v in obj]
            return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]" if items else "[]"
        return "[" + ", ".join(_encode(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None or isinstance(obj, str):
        return json.dumps(bool(obj) if isinstance(obj, np.bool_) else obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            raise ValueError("model files cannot hold non-finite numbers")
        return fmt_float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _estimator_record(est: DifficultyEstimator | None):
    if est is None:
        return None
    return {
        "kind": est.kind,
        "k": est.k,
        "beta": est.beta,
        "feature_means": est.feature_stats.means,
        "feature_std_devs": est.feature_stats.std_devs,
        "reference_features": est.index.points,
        "reference_targets": est.ref_targets,
        "reference_abs_residuals": est.ref_abs_residuals,
    }


def model_to_text(model) -> str:
    record = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "binning": None if model.binning is None else model.binning.edges,
        "scores_per_bin": model.scores_per_bin,
        "estimator": _estimator_record(model.estimator),
        "meta": model.meta,
    }
    return _encode(record) + "\n"


def save_model(model, path) -> None:
    Path(path).write_text(model_to_text(model), encoding="utf-8")


def _array(v, ndim=1):
    a = np.asarray(v, dtype=float)
    if a.ndim != ndim:
        raise CorruptModel(f"expected a {ndim}-D array")
    return a


def _estimator_from(rec) -> DifficultyEstimator | None:
    if rec is None:
        return None
    points = _array(rec["reference_features"], 2)
    if points.size == 0:
        points = points.reshape(len(rec["reference_features"]), len(rec["feature_means"]))
    stats = FeatureStats(_array(rec["feature_means"]), _array(rec["feature_std_devs"]))
    targets = rec.get("reference_targets")
    residuals = rec.get("reference_abs_residuals")
    return DifficultyEstimator(
        canonical_kind(rec["kind"]), int(rec["k"]), float(rec["beta"]), NeighborIndex(points),
        stats,
        None if targets is None else _array(targets),
        None if residuals is None else _array(residuals),
    )


def model_from_text(text: str):
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"unparseable model file: {exc}") from None
    if not isinstance(rec, dict) or "format_version" not in rec:
        raise CorruptModel("missing format_version")
    if rec["format_version"] != FORMAT_VERSION:
        raise VersionMismatch(
            f"model format version {rec['format_version']}, expected {FORMAT_VERSION}")
    try:
        cls = {"cps": CpsModel, "cr": CrModel}[rec["kind"]]
        edges = rec["binning"]
        binning = None if edges is None else MondrianBinning(_array(edges))
        scores = [_array(s) for s in rec["scores_per_bin"]]
        model = cls(scores, binning, _estimator_from(rec["estimator"]), dict(rec["meta"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, CorruptModel):
            raise
        raise CorruptModel(f"malformed model file: {exc!r}") from None
    if binning is not None and binning.bin_count != len(scores):
        raise CorruptModel("bin edges and score vectors disagree")
    return model


def load_model(path):
    return model_from_text(Path(path).read_text(encoding="utf-8"))
