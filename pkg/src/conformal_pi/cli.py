"""Command-line pipeline: synth -> calibrate -> predict -> evaluate, plus sweep."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import report
from .config import RunConfig, load_config
from .conformal import Intervals, calibrate_cps, calibrate_cr, fit_mondrian
from .data import (
    Dataset,
    fmt_float,
    load_dataset,
    save_dataset,
    split_dataset,
)
from .difficulty import canonical_kind, fit_difficulty
from .errors import ArityMismatch, ConfigError, ConformalError, EmptyInput, MissingColumn
from .evaluation import covered, evaluate
from .model_io import load_model, save_model
from .sweep import SweepGrid, best_per_configuration, run_sweep, select_best
from .testbed import NoiseProfile, fit_baseline, generate_synthetic, predict_baseline

log = logging.getLogger("conformal_pi")

# argparse dest -> config key
_FLAG_KEYS = {
    "seed": "seed", "out": "paths.out", "confidence": "confidence",
    "lower_pct": "percentiles.lower", "upper_pct": "percentiles.upper",
    "train": "paths.train", "cal": "paths.cal", "test": "paths.test", "tune": "paths.tune",
    "model": "paths.model", "predictions": "paths.predictions",
    "kind": "difficulty.kind", "k": "difficulty.k", "beta": "difficulty.beta",
    "bins": "mondrian.bins", "n": "synth.n", "dims": "synth.dims", "skew": "synth.skew",
    "slope": "synth.slope", "base_std": "synth.base_std", "split": "synth.split",
    "jobs": "sweep.jobs",
}


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_distinct(inputs, outputs):
    ins = {Path(p).resolve() for p in inputs if p}
    clash = [str(p) for p in outputs if Path(p).resolve() in ins]
    if clash:
        raise ConfigError(f"output path(s) would overwrite inputs: {clash}")


def _require(cfg: RunConfig, *attrs):
    for a in attrs:
        if not getattr(cfg, a):
            raise ConfigError(f"missing required path: --{a}")


def _load(path, cfg: RunConfig, pred=True, target=True) -> Dataset:
    return load_dataset(path, cfg.target_column if target else None,
                        cfg.pred_column if pred else None, cfg.feature_columns,
                        exclude=(cfg.target_column, cfg.pred_column))


def cmd_synth(cfg: RunConfig) -> list[Path]:
    profile = NoiseProfile(cfg.base_std, cfg.slope, cfg.skew)
    ds = generate_synthetic(cfg.synth_n, cfg.synth_dims, profile, cfg.seed)
    out = _out_dir(cfg)
    if cfg.synth_split is None:
        path = out / "synthetic.csv"
        save_dataset(ds, path, cfg.target_column, cfg.pred_column)
        print(f"wrote {len(ds)} rows to {path}")
        return [path]
    parts = split_dataset(ds, cfg.synth_split, cfg.seed)
    baseline = fit_baseline(parts[0], cfg.baseline_k)
    paths = []
    for name, part in zip(("train", "cal", "test"), parts):
        path = out / f"{name}.csv"
        save_dataset(part.with_preds(predict_baseline(baseline, part.features)), path,
                     cfg.target_column, cfg.pred_column)
        print(f"wrote {len(part)} rows to {path}")
        paths.append(path)
    return paths


def _model_meta(cfg: RunConfig, train: Dataset) -> dict:
    return {
        "feature_names": list(train.feature_names),
        "target_column": cfg.target_column,
        "pred_column": cfg.pred_column,
        "config": {k: v for k, v in cfg.as_dict().items()
                   if k.split(".")[0] in ("difficulty", "mondrian", "percentiles", "cr",
                                          "confidence", "standardize")},
    }


def cmd_calibrate(cfg: RunConfig) -> Path:
    _require(cfg, "train", "cal")
    model_path = Path(cfg.model) if cfg.model else _out_dir(cfg) / "model.json"
    _check_distinct([cfg.train, cfg.cal], [model_path])
    kind = canonical_kind(cfg.kind)
    train = _load(cfg.train, cfg, pred=kind == "knn_residual")
    cal = _load(cfg.cal, cfg)
    if cal.feature_names != train.feature_names:
        raise ArityMismatch(f"train features {train.feature_names} != cal features {cal.feature_names}")
    est = fit_difficulty(kind, train, cfg.k, cfg.beta, residual_source=train.preds,
                         standardize=cfg.standardize)
    binning = fit_mondrian(cal.preds, cfg.bins, cfg.min_bin_size) if cfg.mondrian else None
    meta = _model_meta(cfg, train)
    if cfg.cr:
        model = calibrate_cr(cal, est, binning, cfg.confidence, meta=meta)
    else:
        model = calibrate_cps(cal, est, binning, cfg.lower_p, cfg.upper_p, meta=meta)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    print(f"wrote {model.kind} model ({len(model.scores_per_bin)} bin(s), "
          f"counts {model.bin_counts}) to {model_path}")
    return model_path


def _read_rows(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r]
    if header is None:
        raise EmptyInput(f"{path}: empty file")
    return [h.strip() for h in header], rows


def cmd_predict(cfg: RunConfig) -> Path:
    _require(cfg, "model", "test")
    out_path = Path(cfg.predictions) if cfg.predictions else _out_dir(cfg) / "predictions.csv"
    _check_distinct([cfg.model, cfg.test], [out_path])
    model = load_model(cfg.model)
    meta_names = list(model.meta.get("feature_names", []))
    target_col = model.meta.get("target_column", cfg.target_column)
    pred_col = model.meta.get("pred_column", cfg.pred_column)
    header, rows = _read_rows(cfg.test)
    has_target = target_col in header
    test = load_dataset(cfg.test, target_col if has_target else None, pred_col,
                        cfg.feature_columns, exclude=(target_col,))
    n_model = model.estimator.n_features
    if test.n_features != n_model:
        raise ArityMismatch(f"model expects {n_model} features, {cfg.test} has {test.n_features}")
    if meta_names and test.feature_names != meta_names:
        if not set(meta_names) <= set(header):
            raise ArityMismatch(f"{cfg.test} lacks model features {sorted(set(meta_names) - set(header))}")
        test = load_dataset(cfg.test, target_col if has_target else None, pred_col, meta_names,
                            exclude=(target_col,))

    sigmas, bins = model.sigmas_and_bins(test.features, test.preds)
    if model.kind == "cr":
        iv = model.predict(test.preds, sigmas, bins, cfg.confidence)
    else:
        iv = model.predict(test.preds, sigmas, bins, cfg.lower_p, cfg.upper_p)
    hits = covered(iv, test.targets) if has_target else None

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        extra = ["sigma", "bin", "pi_lower", "pi_upper", "pi_width", "clamped_low", "clamped_high"]
        w.writerow(header + extra + (["covered"] if has_target else []))
        width = iv.width
        for i, row in enumerate(rows):
            cells = [fmt_float(iv.sigma[i]), str(int(iv.bins[i])), fmt_float(iv.lower[i]),
                     fmt_float(iv.upper[i]), fmt_float(width[i]),
                     str(bool(iv.clamped_low[i])).lower(), str(bool(iv.clamped_high[i])).lower()]
            if hits is not None:
                cells.append(str(bool(hits[i])).lower())
            w.writerow(row + cells)
    print(f"wrote {len(rows)} intervals to {out_path}")
    return out_path


def load_predictions(path, target_column="target", pred_column="pred"):
    """Columns needed for evaluation from a ``predict`` output file."""
    header, rows = _read_rows(path)
    if not rows:
        raise EmptyInput(f"{path}: no rows")
    need = [pred_column, target_column, "sigma", "pi_lower", "pi_upper"]
    for c in need:
        if c not in header:
            raise MissingColumn(f"{path}: column {c!r} not found")
    col = {h: i for i, h in enumerate(header)}
    return {c: np.array([float(r[col[c]]) for r in rows]) for c in need}


def cmd_evaluate(cfg: RunConfig) -> tuple[Path, Path]:
    src = cfg.predictions or str(Path(cfg.out) / "predictions.csv")
    out = _out_dir(cfg)
    report_path, box_path = out / "report.txt", out / "width_box.csv"
    rmse_path = out / "quantile_rmse.csv"
    _check_distinct([src], [report_path, box_path, rmse_path])
    cols = load_predictions(src, cfg.target_column, cfg.pred_column)
    n = len(cols["sigma"])
    iv = Intervals(cols["pi_lower"], cols["pi_upper"], cols["sigma"], np.zeros(n, dtype=int),
                   np.zeros(n, dtype=bool), np.zeros(n, dtype=bool))
    rep = evaluate(iv, cols[cfg.pred_column], cols[cfg.target_column], cols["sigma"])
    report_path.write_text(report.eval_report_text(rep), encoding="utf-8")
    report.write_box_data(rep, box_path)
    report.write_quantile_rmse(rep, rmse_path)
    print(f"effective coverage {rep.effective_coverage:.4f}, mean width {rep.mean_width:.2f} dB;"
          f" report in {report_path}")
    return report_path, box_path


def cmd_sweep(cfg: RunConfig) -> tuple[Path, Path]:
    _require(cfg, "train", "cal", "tune")
    out = _out_dir(cfg)
    csv_path, rep_path = out / "sweep.csv", out / "sweep_report.txt"
    _check_distinct([cfg.train, cfg.cal, cfg.tune, cfg.test], [csv_path, rep_path])
    train, cal, tune = (_load(p, cfg) for p in (cfg.train, cfg.cal, cfg.tune))
    grid = SweepGrid(cfg.sweep_configurations, cfg.sweep_k, cfg.sweep_bins, cfg.sweep_betas,
                     cfg.sweep_seeds, cfg.lower_p, cfg.upper_p, cfg.coverage_floor,
                     cfg.min_bin_size, cfg.standardize)
    results = run_sweep(grid, train, cal, tune, n_jobs=cfg.jobs)
    selection = select_best(results, cfg.coverage_floor)
    holdout = None
    if cfg.test:
        holdout = _holdout(selection.result, cfg, train, cal, _load(cfg.test, cfg))
    report.write_sweep_csv(results, csv_path)
    rep_path.write_text(report.sweep_report_text(
        selection, best_per_configuration(results, cfg.coverage_floor), cfg.coverage_floor,
        cfg.sweep_seeds, holdout), encoding="utf-8")
    flag = " (no configuration met the floor)" if selection.no_eligible_config else ""
    print(f"selected {selection.config_id}{flag}; {len(results)} rows in {csv_path}")
    return csv_path, rep_path


def _holdout(best, cfg, train, cal, test):
    """Width and coverage of the winner, calibrated on the original split, on held-out data."""
    est = fit_difficulty(best.kind, train, best.k, best.beta, residual_source=train.preds,
                         standardize=cfg.standardize)
    binning = fit_mondrian(cal.preds, best.bins, cfg.min_bin_size) if best.bins else None
    model = calibrate_cps(cal, est, binning, cfg.lower_p, cfg.upper_p)
    sigmas, bins = model.sigmas_and_bins(test.features, test.preds)
    iv = model.predict(test.preds, sigmas, bins, cfg.lower_p, cfg.upper_p)
    return float(np.mean(iv.width)), float(np.mean(covered(iv, test.targets)))


COMMANDS = {"synth": cmd_synth, "calibrate": cmd_calibrate, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--cr", action="store_true", help="conformal regressor mode")
    common.add_argument("--confidence", type=float)
    common.add_argument("--lower-pct", type=float)
    common.add_argument("--upper-pct", type=float)
    common.add_argument("--no-standardize", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="conformal-pi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write synthetic heteroscedastic data")
    p.add_argument("--n", type=int)
    p.add_argument("--dims", type=int)
    p.add_argument("--slope", type=float)
    p.add_argument("--base-std", type=float)
    p.add_argument("--skew", type=float)
    p.add_argument("--split", help="train,cal,test fractions; adds baseline predictions")

    p = sub.add_parser("calibrate", parents=[common], help="fit difficulty estimator and calibrate")
    p.add_argument("--train")
    p.add_argument("--cal")
    p.add_argument("--model", help="model file to write")
    p.add_argument("--kind", help="knn_std | knn_residual | target_strangeness")
    p.add_argument("--k", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--mondrian", action="store_true")
    p.add_argument("--bins", type=int)

    p = sub.add_parser("predict", parents=[common], help="prediction intervals for a test CSV")
    p.add_argument("--model")
    p.add_argument("--test")
    p.add_argument("--predictions", help="output CSV")

    p = sub.add_parser("evaluate", parents=[common], help="coverage/width/difficulty report")
    p.add_argument("--predictions", help="output of `predict`")

    p = sub.add_parser("sweep", parents=[common], help="hyperparameter sweep and selection")
    p.add_argument("--train")
    p.add_argument("--cal")
    p.add_argument("--tune")
    p.add_argument("--test", help="optional held-out set for the winner")
    p.add_argument("--jobs", type=int)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for dest, key in _FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[key] = str(v)
    if args.cr:
        overrides["cr.enabled"] = "true"
    if args.no_standardize:
        overrides["standardize"] = "false"
    if getattr(args, "mondrian", False):
        overrides["mondrian.enabled"] = "true"
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](config_from_args(args))
    except (ConformalError, ValueError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"{type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
