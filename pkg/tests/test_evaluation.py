import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformal_pi.conformal import Intervals, PredictionInterval
from conformal_pi.errors import EmptyInput, LengthMismatch
from conformal_pi.evaluation import (
    difficulty_quantile_rmse,
    effective_coverage,
    evaluate,
    interval_extremes,
    rmse,
    width_stats,
)


def ivs(pairs):
    return [PredictionInterval(lo, hi, hi - lo, 1.0) for lo, hi in pairs]


def widths(ws):
    return ivs([(0.0, w) for w in ws])


def test_coverage_examples():
    assert effective_coverage(ivs([(-1e12, 1e12)] * 3), [0, 5, -7]) == 1.0
    assert effective_coverage(ivs([(174.3, 175.1)]), [175.3]) == 0.0
    assert effective_coverage(ivs([(0, 1), (0, 1)]), [0.5, 2]) == 0.5
    assert effective_coverage(ivs([(0, 1), (0, 1)]), [0.0, 1.0]) == 1.0
    with pytest.raises(LengthMismatch):
        effective_coverage(ivs([(0, 1)]), [1, 2])
    with pytest.raises(EmptyInput):
        effective_coverage([], [])


def test_coverage_accepts_batches():
    n = 4
    batch = Intervals(np.zeros(n), np.ones(n), np.ones(n), np.zeros(n, int),
                      np.zeros(n, bool), np.zeros(n, bool))
    assert effective_coverage(batch, [0.5, 2, 1, -1]) == 0.5


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**32))
def test_coverage_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    lo = rng.normal(size=n)
    hi = lo + rng.uniform(size=n)
    t = rng.normal(size=n)
    perm = rng.permutation(n)
    a = effective_coverage(ivs(zip(lo, hi)), t)
    b = effective_coverage(ivs(zip(lo[perm], hi[perm])), t[perm])
    assert a == b


def test_width_box():
    box = width_stats(widths([1, 2, 3, 4, 100]))
    assert (box.min, box.q1, box.median, box.q3, box.max) == (1, 2, 3, 4, 100)
    assert box.upper_fence == 7.0 and box.outliers == 1
    one = width_stats(widths([5]))
    assert one.min == one.q1 == one.median == one.q3 == one.max == 5
    flat = width_stats(widths([2.5] * 9))
    assert flat.q3 - flat.q1 == 0 and flat.outliers == 0
    with pytest.raises(EmptyInput):
        width_stats([])


def test_box_quartile_rank_convention():
    # rank (p/100)(n+1) rounded toward the median: n=8 -> ranks 3, 5, 6
    box = width_stats(widths([10, 20, 30, 40, 50, 60, 70, 80]))
    assert (box.q1, box.median, box.q3) == (30, 50, 60)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=40))
def test_box_ordered(ws):
    box = width_stats(widths(ws))
    assert box.min <= box.q1 <= box.median <= box.q3 <= box.max


def test_quantile_rmse_examples():
    out = difficulty_quantile_rmse([3.0, 4.0], [0.0, 0.0], [1.0, 1.0], [0.5, 1.0])
    assert out[0] == (0.5, 3.0)
    assert out[1][1] == pytest.approx(math.sqrt(12.5), abs=1e-12)
    zero = difficulty_quantile_rmse(np.ones(8), np.ones(8), np.arange(8.0))
    assert [r for _, r in zero] == [0.0] * 4
    assert [f for f, _ in zero] == [0.25, 0.5, 0.75, 1.0]
    with pytest.raises(LengthMismatch):
        difficulty_quantile_rmse([1.0], [1.0, 2.0], [1.0])


def test_quantile_rmse_orders_by_sigma():
    # easiest half has zero error
    out = difficulty_quantile_rmse([0, 0, 5, 5], [0, 0, 0, 0], [4, 3, 2, 1], [0.5, 1.0])
    assert out[0][1] == 5.0
    out = difficulty_quantile_rmse([5, 5, 0, 0], [0, 0, 0, 0], [4, 3, 2, 1], [0.5, 1.0])
    assert out[0][1] == 0.0


def test_full_fraction_is_plain_rmse(rng):
    p, t, s = rng.normal(size=333), rng.normal(size=333), rng.uniform(size=333)
    assert difficulty_quantile_rmse(p, t, s)[-1][1] == pytest.approx(rmse(p, t), rel=1e-12)


def test_extremes():
    iv = widths([3, 1, 4, 2])
    ex = interval_extremes(iv, [10, 11, 12, 13], [0, 0, 0, 0])
    assert ex["smallest"].row == 1 and ex["largest"].row == 2
    assert ex["median"].width == 2 and ex["median"].row == 3
    one = interval_extremes(widths([7]), [1.0], [2.0])
    assert one["smallest"] == one["median"] == one["largest"]


def test_evaluate_bundle(rng):
    n = 40
    lo = rng.normal(size=n)
    iv = ivs(zip(lo, lo + 2))
    rep = evaluate(iv, lo + 1, lo + 1, rng.uniform(size=n))
    assert rep.effective_coverage == 1.0
    assert rep.mean_width == pytest.approx(2.0)
    assert rep.quantile_rmse[-1] == (1.0, 0.0)
