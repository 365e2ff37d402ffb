import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracflow.config import bump
from fracflow.mesh import Exterior, Field, Grid, build_grid, build_kernel, interior_weights, restrict_and_extend
from fracflow.operators import seminorm_p
from fracflow.pointwise import Exponents, RegimeError


def test_build_grid_examples():
    g = build_grid(0, 1, 8, 4)
    assert g.h == 0.125
    assert g.x[0] == 0.0625
    assert build_grid(-1, 1, 128, 8).h == 1 / 64
    with pytest.raises(ValueError):
        build_grid(0, 1, 3, 4)
    with pytest.raises(ValueError):
        build_grid(1, 0, 8, 4)
    with pytest.raises(ValueError):
        build_grid(0, 1, 8, 1.5)


@given(st.integers(4, 300), st.floats(-5, 5), st.floats(0.1, 10))
def test_nodes_inside(N, a, L):
    g = build_grid(a, a + L, N, 3 * L)
    assert np.all((g.x > g.a) & (g.x < g.b))
    assert np.allclose(np.diff(g.x), g.h)


def test_weight_example():
    # s = 0.5, p = 2: neighbouring cell weight 4/(3h)
    g = build_grid(0, 1, 16, 4)
    K = build_kernel(g, Exponents(2, 0.5))
    assert K.W[3, 4] == pytest.approx(4 / (3 * g.h), rel=1e-13)


@pytest.mark.parametrize("p,s", [(1.5, 0.3), (2, 0.5), (3, 0.7)])
def test_weight_structure(p, s):
    g = build_grid(-1, 1, 24, 4)
    W = build_kernel(g, Exponents(p, s)).W
    assert np.array_equal(W, W.T)
    assert W[2, 5] == W[5, 2]
    assert np.all(np.diag(W) == 0)
    assert np.all(W[~np.eye(24, dtype=bool)] > 0)
    row = W[0, 1:]
    assert np.all(np.diff(row) < 0)


def test_tail_closed_form():
    g = build_grid(-1, 1, 8, 4)
    e = Exponents(2, 0.5)
    K = build_kernel(g, e)
    x = g.x
    assert np.allclose(K.tail, (x + 4) ** -1.0 + (4 - x) ** -1.0, rtol=1e-14)
    # a node at the box centre sees twice the one-sided tail
    g2 = build_grid(-1, 1, 9, 4)
    K2 = build_kernel(g2, e)
    assert K2.tail[4] == pytest.approx(2 * 4.0 ** -1 / 1.0)


def test_tail_decreases_with_R():
    e = Exponents(3, 0.4)
    tails = [build_kernel(build_grid(-1, 1, 16, R), e).tail for R in (4, 8, 16, 32)]
    for t1, t2 in zip(tails, tails[1:]):
        assert np.all(t2 < t1)


def test_complement_mass_matches_kernel_parts():
    # exact exterior mass splits into the box cells plus the tails
    g = build_grid(-1, 1, 16, 4)
    K = build_kernel(g, Exponents(2.5, 0.4))
    cells, _ = K.box_cells
    assert np.allclose(cells.sum(axis=1) + K.tail, K.complement_mass, rtol=1e-12)


def test_row_sums_scale_like_h_power():
    for p, s in [(2, 0.5), (3, 0.3), (1.5, 0.7)]:
        e = Exponents(p, s)
        rs = [interior_weights(build_grid(-1, 1, N, 4), e.sp).sum(axis=1).max() for N in (128, 256)]
        assert rs[1] / rs[0] == pytest.approx(2 ** e.sp, rel=0.05)


@pytest.mark.parametrize("p,s", [(2, 0.5), (3, 0.3), (3, 0.7)])
def test_refinement_consistency(p, s):
    e = Exponents(p, s)

    def value(N):
        g = build_grid(-1, 1, N, 4)
        return seminorm_p(Field.from_function(g, lambda x: bump(2 * x)), build_kernel(g, e), e)

    ref = value(2048)
    err = [abs(value(N) - ref) for N in (64, 128, 256)]
    ratios = [err[0] / err[1], err[1] / err[2]]
    assert all(1.5 <= r <= 4.5 for r in ratios), ratios


def test_kernel_requires_one_dimension():
    with pytest.raises(RegimeError):
        build_kernel(build_grid(0, 1, 8, 4), Exponents(2, 0.5, n=2))


def test_restrict_and_extend():
    g = build_grid(-1, 1, 8, 4)
    f = Field(g, np.arange(8.0))
    assert restrict_and_extend(f, 100.0) == 0
    assert restrict_and_extend(f, g.x[3]) == 3.0
    c = Field(g, np.zeros(8), Exterior.constant(2))
    assert restrict_and_extend(c, -50) == 2
    sfield = Field(g, np.zeros(8), Exterior.sampled(lambda x: x**2))
    assert restrict_and_extend(sfield, 3.0) == 9.0


def test_field_validation():
    g = build_grid(0, 1, 8, 4)
    with pytest.raises(ValueError):
        Field(g, np.zeros(7))
    with pytest.raises(ValueError):
        Field(g, np.full(8, np.nan))
    assert Field(g, np.zeros(8)).exterior == Exterior.zero()


def test_exterior_terms_constant_vs_sampled():
    # a sampled constant and the constant descriptor give the same operator
    from fracflow.operators import DiscreteOperator

    g = build_grid(-1, 1, 16, 4)
    K = build_kernel(g, Exponents(2.5, 0.5))
    u = np.sin(g.x)
    a = DiscreteOperator(K, Exterior.constant(0.3)).evaluate(u)
    b = DiscreteOperator(K, Exterior.sampled(lambda x: 0.3 + 0 * x)).evaluate(u)
    assert np.allclose(a[0], b[0], rtol=1e-12)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


def test_exterior_descriptor():
    assert Exterior.constant(2).shifted(1) == Exterior.constant(3)
    assert Exterior.zero()(np.array([1.0, 2.0])).tolist() == [0, 0]
    with pytest.raises(ValueError):
        Exterior("sampled")
    with pytest.raises(ValueError):
        Exterior("weird")
