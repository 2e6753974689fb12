import json

import numpy as np
import pytest

from conformal_pi.conformal import calibrate_cps, calibrate_cr, fit_cps, fit_mondrian
from conformal_pi.difficulty import fit_difficulty
from conformal_pi.errors import CorruptModel, VersionMismatch
from conformal_pi.model_io import load_model, model_to_text, save_model


@pytest.fixture
def mondrian_cps(hetero_splits):
    train, cal, _ = hetero_splits
    est = fit_difficulty("knn_residual", train, 25, 0.01, residual_source=train.preds)
    return calibrate_cps(cal, est, fit_mondrian(cal.preds, 5, 40), meta={"note": "x"})


def test_round_trip_mondrian(tmp_path, mondrian_cps, hetero_splits, rng):
    test = hetero_splits[2]
    p = tmp_path / "m.json"
    save_model(mondrian_cps, p)
    back = load_model(p)
    assert back.kind == "cps" and back.binning.bin_count == 5
    for a, b in zip(mondrian_cps.scores_per_bin, back.scores_per_bin):
        assert a.tobytes() == b.tobytes()
    rows = rng.choice(len(test), 100, replace=False)
    X, preds = test.features[rows], test.preds[rows]
    s1, b1 = mondrian_cps.sigmas_and_bins(X, preds)
    s2, b2 = back.sigmas_and_bins(X, preds)
    i1, i2 = mondrian_cps.predict(preds, s1, b1), back.predict(preds, s2, b2)
    assert i1.lower.tobytes() == i2.lower.tobytes()
    assert i1.upper.tobytes() == i2.upper.tobytes()
    # saving again is byte-identical
    assert model_to_text(back) == p.read_text()


def test_cr_round_trip(tmp_path, hetero_splits):
    train, cal, _ = hetero_splits
    m = calibrate_cr(cal, fit_difficulty("target_strangeness", train, 10), confidence=0.9)
    save_model(m, tmp_path / "cr.json")
    back = load_model(tmp_path / "cr.json")
    assert back.kind == "cr" and back.binning is None
    np.testing.assert_array_equal(back.scores_per_bin[0], m.scores_per_bin[0])


def test_file_layout(mondrian_cps):
    rec = json.loads(model_to_text(mondrian_cps))
    assert list(rec) == ["format_version", "kind", "binning", "scores_per_bin", "estimator", "meta"]
    assert rec["format_version"] == 1
    assert rec["meta"]["bin_counts"] == [200] * 5
    assert rec["estimator"]["kind"] == "knn_residual"


def test_version_and_corruption(tmp_path):
    m = fit_cps(np.arange(40.0), np.ones(40))
    text = model_to_text(m)
    bad = tmp_path / "v99.json"
    bad.write_text(text.replace('"format_version": 1', '"format_version": 99'))
    with pytest.raises(VersionMismatch):
        load_model(bad)
    cut = tmp_path / "cut.json"
    cut.write_text(text[: len(text) // 2])
    with pytest.raises(CorruptModel):
        load_model(cut)
    missing = tmp_path / "missing.json"
    missing.write_text('{"format_version": 1, "kind": "cps"}')
    with pytest.raises(CorruptModel):
        load_model(missing)
