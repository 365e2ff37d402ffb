import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fracflow.pointwise import (
    Exponents,
    RegimeError,
    check_deg_fourpoint,
    check_deg_fourpoint_trunc,
    check_deg_power,
    check_jp_lipschitz,
    check_sing_fourpoint,
    check_sing_fourpoint_trunc,
    check_sing_twopoint,
    fourpoint_constant,
    jp,
    jp_truncated,
    lipschitz_constant,
    sweep,
    truncate,
)

reals = st.floats(-10, 10, allow_nan=False)
wide = st.floats(-1e3, 1e3, allow_nan=False)
p_any = st.floats(1.1, 10)


# ---------------------------------------------------------------------------
# exponents


def test_exponents_validation():
    with pytest.raises(RegimeError):
        Exponents(1.0, 0.5)
    with pytest.raises(RegimeError):
        Exponents(2.0, 1.0)
    with pytest.raises(RegimeError):
        Exponents(2.0, 0.5, 0)


def test_p_star_only_below_critical():
    assert Exponents(1.5, 0.5).p_star == pytest.approx(1.5 / (1 - 0.75))
    assert Exponents(3.0, 0.5).p_star is None


def test_singular_guard():
    Exponents(1.5, 0.5).require_singular()
    with pytest.raises(RegimeError):
        Exponents(2.5, 0.5).require_singular()
    # 2n/(n+2s) = 2/1.2 for s = 0.1, so p = 1.5 is too small
    with pytest.raises(RegimeError):
        Exponents(1.5, 0.1).require_singular()
    with pytest.raises(RegimeError):
        Exponents(1.5, 0.5).require_degenerate()


def test_nu_branches():
    assert Exponents(1.5, 0.5).nu() == pytest.approx(1.0)
    assert Exponents(1.6, 0.8).nu(2) == pytest.approx(4 / 3.6)
    with pytest.raises(RegimeError):
        Exponents(1.6, 0.8).nu(1)


# ---------------------------------------------------------------------------
# J_p and truncation


def test_jp_examples():
    assert jp(2, 3) == 4
    assert jp(0, 1.5) == 0
    assert jp(-3, 2.5) == pytest.approx(-5.196152422706632, rel=1e-14)
    with pytest.raises(RegimeError):
        jp(1.0, 1.0)


def test_truncate_examples():
    assert truncate(5, 2) == 2
    assert truncate(-0.5, 2) == -0.5
    assert truncate(-7, 3) == -3
    with pytest.raises(ValueError):
        truncate(1, 0)


def test_jp_truncated_examples():
    assert jp_truncated(5, 3, 2) == 4
    assert jp_truncated(1, 3, 2) == 1
    assert jp_truncated(-5, 1.5, 4) == pytest.approx(-2)


@given(reals, p_any)
def test_jp_odd(t, p):
    assert jp(-t, p) == -jp(t, p)


@given(reals, reals, p_any)
def test_jp_increasing(t1, t2, p):
    assume(t1 < t2)
    assume(abs(t2 - t1) > 1e-6 * max(abs(t1), abs(t2), 1e-3))
    assert jp(t1, p) < jp(t2, p)


@given(reals, p_any)
def test_jp_inverse_pair(t, p):
    # |t|^(q-1) must not underflow
    assume(t == 0 or abs(t) > 1e-20)
    q = p / (p - 1)
    assert jp(jp(t, q), p) == pytest.approx(t, rel=1e-10, abs=1e-300)


@given(reals, st.floats(0.01, 100), p_any)
def test_jp_homogeneous(t, c, p):
    assume(t == 0 or abs(t) > 1e-200)   # subnormals lose relative precision
    assert jp(c * t, p) == pytest.approx(c ** (p - 1) * jp(t, p), rel=1e-12, abs=1e-300)


@given(wide, st.floats(0.01, 100), st.floats(1.05, 6))
def test_jp_truncated_bounded(t, M, p):
    assert abs(jp_truncated(t, p, M)) <= M ** (p - 1) * (1 + 1e-15)


# ---------------------------------------------------------------------------
# inequality examples


def test_deg_power_examples():
    v = check_deg_power(1, 1, 3, 2)
    assert v.gap == 0 and v.holds
    v = check_deg_power(1, 0, 3, 2)
    assert v.lhs == pytest.approx(1)
    assert v.rhs == pytest.approx(8 / 9)
    assert v.holds
    assert check_deg_power(2, -1, 4, 1).holds
    with pytest.raises(RegimeError):
        check_deg_power(1, 0, 1.5, 2)
    with pytest.raises(RegimeError):
        check_deg_power(1, 0, 3, 0.5)


def test_deg_fourpoint_examples():
    v = check_deg_fourpoint(1, 0, 0, 0, 3, 1)
    assert v.lhs == pytest.approx(1)
    assert v.rhs == pytest.approx(1 / 12)
    assert fourpoint_constant(3, 1) == pytest.approx(1 / 12)
    v = check_deg_fourpoint(2.0, 1.0, 2.0, 1.0, 3, 2)
    assert v.lhs == 0 and v.rhs == 0


def test_deg_fourpoint_trunc_example():
    v = check_deg_fourpoint_trunc(3, 0, 0, 0, 3, 2, 1)
    # left: J_3(3) * J_3(1) = 9; right: C(3, 2) * 1
    assert v.lhs == pytest.approx(9)
    assert v.rhs == pytest.approx(fourpoint_constant(3, 2))
    assert v.holds


def test_lipschitz_examples():
    assert check_jp_lipschitz(1.5, 1.5, 3).gap == 0
    v = check_jp_lipschitz(1, 0, 2)
    assert v.constant >= 1 and v.holds
    # at p = 2 the ratio is exactly 1 on the grid, so c = safety factor
    assert lipschitz_constant(2.0) == pytest.approx(1.05)


def test_lipschitz_constant_limits():
    # near a = b the ratio tends to p - 1 for p > 2; the grid witness covers it
    assert lipschitz_constant(3.0) >= 2.0
    assert lipschitz_constant(1.5) == pytest.approx(1.898, abs=2e-3)


def test_sing_twopoint_examples():
    assert check_sing_twopoint(1, 1, 1.5).gap == 0
    v = check_sing_twopoint(1, -1, 1.5)
    assert v.lhs == pytest.approx(4)
    assert v.rhs == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        check_sing_twopoint(0, 0, 1.5)
    with pytest.raises(RegimeError):
        check_sing_twopoint(1, 0, 2.5)


def test_sing_fourpoint_examples():
    v = check_sing_fourpoint(1, 0, 0, 0, 1.5, 2)
    assert v.lhs == pytest.approx(1)
    assert v.rhs == pytest.approx(0.5)
    v = check_sing_fourpoint(1.0, 2.0, 1.0, 2.0, 1.5, 2)
    assert v.gap == 0
    with pytest.raises(RegimeError):
        check_sing_fourpoint(1, 0, 0, 0, 1.5, 1)


def test_sing_fourpoint_trunc_example():
    v = check_sing_fourpoint_trunc(3, 0, 0, 0, 1.5, 2, 1)
    # left: (J_2(1) - 0)(J_1.5(3) - 0) = sqrt(3); right: 0.5 * 1 * 3^(-0.5)
    assert v.lhs == pytest.approx(math.sqrt(3))
    assert v.rhs == pytest.approx(0.5 / math.sqrt(3))
    assert v.holds


# ---------------------------------------------------------------------------
# properties


quad = st.tuples(wide, wide, wide, wide)


@given(st.tuples(wide, wide), st.sampled_from([2.0, 2.5, 3.0, 4.0]), st.sampled_from([1.0, 2.0, 5.0]))
def test_deg_power_holds(ab, p, q):
    assert check_deg_power(*ab, p, q).holds


@given(quad, st.sampled_from([2.5, 3.0, 4.0]), st.sampled_from([1.0, 2.0, 5.0]))
def test_deg_fourpoint_holds(x, p, g):
    assert check_deg_fourpoint(*x, p, g).holds


@given(quad, st.sampled_from([2.5, 3.0, 4.0]), st.sampled_from([1.0, 2.0, 5.0]), st.sampled_from([0.1, 1.0, 10.0]))
def test_deg_fourpoint_trunc_holds(x, p, g, M):
    assert check_deg_fourpoint_trunc(*x, p, g, M).holds


@given(st.tuples(wide, wide), st.floats(1.05, 4.0))
def test_lipschitz_holds(ab, p):
    assert check_jp_lipschitz(*ab, p).holds


@given(st.tuples(wide, wide), st.sampled_from([1.2, 1.5, 1.9]))
def test_sing_twopoint_holds(ab, p):
    assume(ab != (0.0, 0.0))
    assert check_sing_twopoint(*ab, p).holds


@given(quad, st.sampled_from([1.2, 1.5, 1.9]), st.sampled_from([2.0, 5.0]))
def test_sing_fourpoint_holds(x, p, g):
    assert check_sing_fourpoint(*x, p, g).holds


@given(quad, st.sampled_from([1.2, 1.5, 1.9]), st.sampled_from([2.0, 5.0]), st.sampled_from([0.1, 1.0, 10.0]))
def test_sing_fourpoint_trunc_holds(x, p, g, M):
    assert check_sing_fourpoint_trunc(*x, p, g, M).holds


@given(st.floats(0.1, 10), st.tuples(reals, reals, reals, reals), st.sampled_from([2.5, 4.0]),
       st.sampled_from([1.0, 5.0]))
def test_truncation_inactive_identity(M, x, p, g):
    a, b, c, d = x
    assume(abs(a - b) <= M and abs(c - d) <= M)
    full, trunc = check_deg_fourpoint(a, b, c, d, p, g), check_deg_fourpoint_trunc(a, b, c, d, p, g, M)
    assert (full.lhs, full.rhs) == (trunc.lhs, trunc.rhs)
    full, trunc = check_sing_fourpoint(a, b, c, d, 1.5, 2 * g), check_sing_fourpoint_trunc(a, b, c, d, 1.5, 2 * g, M)
    assert (full.lhs, full.rhs) == (trunc.lhs, trunc.rhs)


def test_slack_is_relative():
    from fracflow.pointwise import IneqVerdict

    v = IneqVerdict(1e20, 1e20 * (1 + 1e-13))
    assert v.holds
    assert not IneqVerdict(1.0, 1.0 + 1e-9).holds


# ---------------------------------------------------------------------------
# sweeps


def test_sweep_clean():
    rows = sweep(seed=1, count=2000)
    assert sum(r.violations for r in rows) == 0
    assert {r.inequality for r in rows} == {"deg_power", "deg_fourpoint", "deg_fourpoint_trunc", "jp_lipschitz",
                                       "sing_twopoint", "sing_fourpoint", "sing_fourpoint_trunc"}


def test_sweep_zero_tuple_only():
    rows = sweep(seed=0, count=1)
    assert all(r.min_gap == 0 and r.violations == 0 for r in rows)


def test_sweep_corrupted_constants_detected():
    rows = sweep(seed=0, count=500, corrupt=True)
    per = {}
    for r in rows:
        per[r.inequality] = per.get(r.inequality, 0) + r.violations
    assert all(v > 0 for v in per.values()), per


def test_sweep_reproducible():
    a = sweep(seed=3, count=200, regimes=("singular",))
    b = sweep(seed=3, count=200, regimes=("singular",))
    assert [r.min_gap for r in a] == [r.min_gap for r in b]
    with pytest.raises(ValueError):
        sweep(count=0)
