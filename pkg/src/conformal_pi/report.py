"""Plain-text reports and figure-ready data files.

Report layout is ``[section]`` headers followed by ``key = value`` lines in a
fixed order. dB quantities carry two decimals, coverages four.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .data import fmt_float
from .evaluation import EvalReport


def _db(x) -> str:
    return f"{x:.2f}"


def _pct(f: float) -> str:
    return "All" if f == 1.0 else f"{f * 100:g}%"


def eval_report_text(rep: EvalReport) -> str:
    lines = [
        "[summary]",
        f"n = {rep.n}",
        f"effective_coverage = {rep.effective_coverage:.4f}",
        f"mean_width_db = {_db(rep.mean_width)}",
        f"median_width_db = {_db(rep.median_width)}",
        "",
        "[width_box]",
    ]
    for stat, value in rep.width_box.as_rows():
        lines.append(f"{stat} = {value}" if stat == "outliers" else f"{stat}_db = {_db(value)}")
    lines += ["", "[quantile_rmse]",
              "fractions = " + " ".join(_pct(f) for f, _ in rep.quantile_rmse),
              "rmse_db = " + " ".join(_db(r) for _, r in rep.quantile_rmse),
              "", "[extremes]"]
    for name in ("smallest", "median", "largest"):
        e = rep.extremes[name]
        hit = "true" if e.lower <= e.target <= e.upper else "false"
        lines.append(
            f"{name} = row={e.row} prediction={_db(e.prediction)} lower={_db(e.lower)} "
            f"upper={_db(e.upper)} width={_db(e.width)} target={_db(e.target)} covered={hit}")
    return "\n".join(lines) + "\n"


def write_box_data(rep: EvalReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stat", "value_db"])
        for stat, value in rep.width_box.as_rows():
            w.writerow([stat, value if stat == "outliers" else fmt_float(value)])


def write_quantile_rmse(rep: EvalReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fraction", "rmse_db"])
        for f, r in rep.quantile_rmse:
            w.writerow([fmt_float(f), fmt_float(r)])


SWEEP_HEADER = ["config_id", "estimator", "k", "bins", "beta", "mean_width_db", "coverage",
                "eligible", "reason"]


def write_sweep_csv(results, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in results:
            w.writerow([r.config_id, r.configuration, r.k, "" if r.bins is None else r.bins,
                        fmt_float(r.beta), fmt_float(r.mean_width), fmt_float(r.coverage),
                        "true" if r.eligible else "false", r.reason])


def _row_line(r) -> str:
    return f"width_db={_db(r.mean_width)} coverage={r.coverage:.4f} eligible={str(r.eligible).lower()}"


def sweep_report_text(selection, per_config, coverage_floor, seeds, holdout=None) -> str:
    r = selection.result
    lines = [
        "[selection]",
        f"winner = {r.config_id}",
        f"coverage_floor = {coverage_floor:g}",
        f"no_eligible_config = {str(selection.no_eligible_config).lower()}",
        f"seeds = {','.join(str(s) for s in seeds)}",
        f"tune_mean_width_db = {_db(r.mean_width)}",
        f"tune_coverage = {r.coverage:.4f}",
    ]
    if holdout is not None:
        lines += [f"holdout_mean_width_db = {_db(holdout[0])}",
                  f"holdout_coverage = {holdout[1]:.4f}"]
    lines += ["", "[best_per_configuration]"]
    for sel in per_config:
        lines.append(f"{sel.result.configuration} = {sel.result.config_id} {_row_line(sel.result)}")
    return "\n".join(lines) + "\n"
