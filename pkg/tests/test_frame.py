from fractions import Fraction

import pytest

from relca.coding.frame import (FrameError, FrameParams, brc_amp_preset, brc_amp_recurrence_ok,
                                eps_closed, eps_threshold, frame_check, frame_derive, power_le,
                                report_table)


def test_green_example_frame():
    fp = brc_amp_preset(100, Fraction(1, 10 ** 100))
    rep = frame_check(fp, example=True)
    assert rep.ok, rep.violations
    assert rep.eps_bounds_hold
    assert all(h for _, h in brc_amp_recurrence_ok(fp))


def test_c10_frame_fails_at_1e4():
    # The small example constant is not enough at eps = 1e-4; the report
    # names which inequality breaks and at which level.
    rep = frame_check(brc_amp_preset(10, Fraction(1, 10 ** 4)), example=True)
    assert not rep.ok
    assert any("error upper bound" in v for v in rep.violations)


def test_c10_bandwidth_fails_for_every_eps():
    # cap_2 = 10 but log2 U_2 = log2(16000) > 13, whatever eps is.
    for e in (4, 30, 400):
        rep = frame_check(brc_amp_preset(10, Fraction(1, 10 ** e)), example=True)
        assert "k=2: bandwidth lower bound cap_k >= R0 log U_k" in rep.violations
    assert eps_threshold(lambda eps: brc_amp_preset(10, eps), example=True) is None


def test_c100_threshold():
    e = eps_threshold(lambda eps: brc_amp_preset(100, eps), example=True)
    assert e is not None and 4 < e <= 100
    assert frame_check(brc_amp_preset(100, Fraction(1, 10 ** e)), example=True).ok
    assert not frame_check(brc_amp_preset(100, Fraction(1, 10 ** (e - 1))), example=True).ok


def test_closed_form_matches_recurrence():
    fp = brc_amp_preset(10, Fraction(1, 10 ** 30), K=6)
    d = frame_derive(fp)
    for k in range(1, 7):
        assert eps_closed(fp, k) == d["eps"][k - 1]


def test_eps_one_level_only_squares():
    fp = FrameParams(1, 1, Fraction(1, 100), 0, 1, [2, 2], [4, 4], [2, 2])
    d = frame_derive(fp)
    assert d["nu"] == [1, 1]
    assert d["eps"][1] == 25 * (8 * Fraction(1, 100)) ** 2


def test_validation():
    with pytest.raises(FrameError):
        frame_derive(FrameParams(2, 1, 0, 0, 1, [2], [2], [1]))
    with pytest.raises(FrameError):
        frame_derive(FrameParams(1, 1, 1, 0, 1, [2], [2], [1]))
    with pytest.raises(FrameError):
        FrameParams(1, 1, 0, 0, 1, [2], [2, 3], [1])


@pytest.mark.parametrize("x,a,y,b,want", [
    (Fraction(1, 2), 3, Fraction(1, 8), 1, True),
    (Fraction(1, 2), 3, Fraction(1, 9), 1, False),
    (Fraction(0), 5, Fraction(1, 3), 2, True),
    (Fraction(1, 3), 1, Fraction(0), 1, False),
    (Fraction(3, 7) ** 90, 2, Fraction(3, 7), 180, True),
])
def test_power_le(x, a, y, b, want):
    assert power_le(x, a, y, b) is want


def test_report_table_has_all_levels():
    rep = frame_check(brc_amp_preset(100, Fraction(1, 10 ** 100)))
    assert len(report_table(rep).splitlines()) == 11


def test_zero_eps_stays_zero():
    d = frame_derive(brc_amp_preset(10, 0))
    assert all(e == 0 for e in d["eps"])


def test_example_recurrence_constant():
    # With T_hi = 2 T_lo the nu factor is 1 + 1/(c k^2), so the step constant is
    # 25 (c^5 k^6 nu_k)^2, which lies between 25 c^10 k^12 and 100 c^10 k^12.
    c = 10
    fp = brc_amp_preset(c, Fraction(1, 10 ** 40), K=5)
    d = frame_derive(fp)
    for k in range(1, 5):
        ratio = d["eps"][k] / d["eps"][k - 1] ** 2
        nu = 1 + Fraction(1, c * k * k)
        assert ratio == 25 * (c ** 5 * k ** 6 * nu) ** 2
        assert 25 * c ** 10 * k ** 12 < ratio <= 100 * c ** 10 * k ** 12


def test_work_period_violation_flagged():
    fp = brc_amp_preset(100, Fraction(1, 10 ** 100), K=3)
    fp.U[1] = fp.Q[1]
    rep = frame_check(fp)
    assert any(v.startswith("k=2: work period") for v in rep.violations)


def test_large_eps_fails_at_level_one_first():
    rep = frame_check(brc_amp_preset(100, Fraction(1, 10 ** 6)))
    errs = [v for v in rep.violations if "error upper bound" in v]
    assert errs and errs[0].startswith("k=1:")
