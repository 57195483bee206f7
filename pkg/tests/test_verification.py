import math

import numpy as np
import pytest

from relgain.distributions import Gaussian, Juttner, ZERO
from relgain.norms import TheoremCase
from relgain.quadrature import MomentumGrid
from relgain.scattering import ScatteringKernel
from relgain.verification import (
    EnvelopeTable, TAIL_FLAG_THRESHOLD, family_maxima, relative_tail, settings_hash, verify_case,
    verify_cases,
)

GRID = MomentumGrid(4.0, 8)
CASES = [TheoremCase("T11", 1.0, 1, 2), TheoremCase("T12_hard", 0.0),
         TheoremCase("T12_hard", 2.0), TheoremCase("T12_soft", -1.0, 3, 3)]


def test_reports_finite_and_consistent():
    f = Juttner(1.0, 0.7)
    reps = verify_cases(f, f, CASES, GRID, family="juttner_T", family_param=0.7)
    assert [r.case for r in reps] == CASES
    for r in reps:
        assert all(math.isfinite(v) for v in (r.lhs, r.rhs_f, r.rhs_h, r.ratio))
        assert r.ratio == pytest.approx(r.lhs / (r.rhs_f * r.rhs_h), rel=1e-15)
        assert r.grid_N == 8 and r.R == 4.0 and r.n_modes > 0
        row = r.as_row()
        assert list(row) == ["family_param", "lhs", "rhs_f", "rhs_h", "ratio", "grid_N", "R",
                             "mode_cutoff", "tail_flag"]
        assert r.as_dict()["case_label"] == r.case.label


def test_ratio_scale_invariant():
    f, h = Gaussian((0.3, 0, 0), 0.8), Juttner(1.0, 0.6)
    base = verify_cases(f, h, CASES, GRID)
    scaled = verify_cases(3.7 * f, 0.02 * h, CASES, GRID)
    for a, b in zip(base, scaled):
        assert b.ratio == pytest.approx(a.ratio, rel=1e-10)


def test_zero_input_gives_zero_ratio():
    f = Juttner(1.0, 1.0)
    r = verify_cases(ZERO, f, CASES[:1], GRID)[0]
    assert r.lhs == 0 and r.ratio == 0 and r.rhs_f == 0 and r.rhs_h > 0


def test_verify_case_checks_kernel():
    f = Juttner(1.0, 1.0)
    r = verify_case(f, f, ScatteringKernel(1.0), CASES[0], GRID)
    assert r.ratio == pytest.approx(verify_cases(f, f, CASES[:1], GRID)[0].ratio, rel=1e-14)
    with pytest.raises(ValueError, match="does not match"):
        verify_case(f, f, ScatteringKernel(2.0), CASES[0], GRID)
    with pytest.raises(ValueError, match="isotropic"):
        verify_case(f, f, ScatteringKernel(1.0, "halfcut"), CASES[0], GRID)


def test_tail_flag():
    assert relative_tail(ZERO, 1.0) == 0.0
    wide = Gaussian(width=2.0)
    assert relative_tail(wide, 4.0) > TAIL_FLAG_THRESHOLD
    r = verify_cases(wide, wide, CASES[:1], GRID)[0]
    assert r.tail_flag and r.as_row()["tail_flag"] == 1
    narrow = Gaussian(width=0.5)
    assert not verify_cases(narrow, narrow, CASES[:1], GRID)[0].tail_flag


def _fake(family, ratio, label_case=CASES[0]):
    from relgain.verification import VerificationReport
    return VerificationReport(label_case, ratio, 1.0, 1.0, ratio, 8, 4.0, 1.0, 1, 10, 0.0, 0.0,
                              family, 0.0)


def test_envelope_roundtrip_and_breach(tmp_path):
    reports = [_fake("juttner_T", 1.0), _fake("juttner_T", 2.0), _fake("gaussian_width", 3.0)]
    assert family_maxima(reports) == [("gaussian_width", "T11_a1", 3.0),
                                      ("juttner_T", "T11_a1", 2.0)]
    table = EnvelopeTable()
    table.freeze(reports, settings_hash({"N": 8}))
    path = tmp_path / "env.txt"
    table.save(path)
    loaded = EnvelopeTable.load(path)
    assert loaded.get("juttner_T", "T11_a1").envelope == 2.0
    assert loaded.get("juttner_T", "T11_a1").settings == settings_hash({"N": 8})
    assert loaded.breaches([_fake("juttner_T", 2.19)]) == []
    assert loaded.breaches([_fake("juttner_T", 2.21)]) == [("juttner_T", "T11_a1", 2.21, 2.0)]
    assert loaded.breaches([_fake("other", 100.0)]) == []
    assert EnvelopeTable.load(tmp_path / "missing.txt").records == {}


def test_settings_hash_stable():
    assert settings_hash({"a": 1, "b": [1, 2]}) == settings_hash({"b": [1, 2], "a": 1})
    assert len(settings_hash({})) == 12


def test_shipped_envelopes_parse():
    from relgain.verification import DEFAULT_ENVELOPES
    table = EnvelopeTable.load(DEFAULT_ENVELOPES)
    assert table.records
    assert all(np.isfinite(r.envelope) and r.envelope > 0 for r in table.records.values())
