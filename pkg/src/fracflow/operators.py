"""Discrete fractional p-Laplacian, Gagliardo seminorm and gradient-flow energy.

The discrete operator is, at node ``i``,

    A(u)_i = 2 sum_{j != i} W_ij J_p(u_i - u_j) + 2 sum_k E_ik J_p(u_i - G_k)

and the discrete seminorm is

    S(u) = h sum_i [ sum_j W_ij |u_i - u_j|^p + 2 sum_k E_ik |u_i - G_k|^p ].

Interior/exterior pairs are counted twice as in the double integral over
R x R; the exterior/exterior part is constant in ``u`` and dropped. With
these definitions ``h * A(u)_i`` is exactly ``d(S/p)/du_i``.

Row sums use Neumaier-compensated summation in ascending column order, so
results do not depend on the number of worker threads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .mesh import Exterior, Field, KernelWeights
from .pointwise import Exponents

THREADS_ENV = "FRACFLOW_NUM_THREADS"
# the bundled TBB is too old for numba; skip it rather than warn
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def configure_threads(n: int | None = None) -> int:
    """Set the worker-thread count (default: $FRACFLOW_NUM_THREADS, else all cores)."""
    if n is None:
        n = int(os.environ.get(THREADS_ENV, 0)) or numba.config.NUMBA_DEFAULT_NUM_THREADS
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True, inline="always")
def _neumaier(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(parallel=True, cache=True)
def _rows(u, W, E, G, p, op_out, en_out):
    N = u.shape[0]
    K = G.shape[0]
    q = p - 1.0
    for i in prange(N):
        ui = u[i]
        s = 0.0
        c = 0.0
        se = 0.0
        ce = 0.0
        for j in range(N):
            if j == i:
                continue
            w = W[i, j]
            d = ui - u[j]
            a = abs(d)
            m = a**q
            t = w * m
            if d < 0.0:
                t = -t
            s, c = _neumaier(s, c, t)
            se, ce = _neumaier(se, ce, w * m * a)
        for k in range(K):
            w = E[i, k]
            d = ui - G[k]
            a = abs(d)
            m = a**q
            t = w * m
            if d < 0.0:
                t = -t
            s, c = _neumaier(s, c, t)
            se, ce = _neumaier(se, ce, 2.0 * w * m * a)
        op_out[i] = 2.0 * (s + c)
        en_out[i] = se + ce


@njit(cache=True)
def _compensated_sum(x):
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        s, c = _neumaier(s, c, x[i])
    return s + c


class DiscreteOperator:
    """The discrete operator bound to one kernel and one set of exterior data.

    Works on raw nodal arrays; this is what the time steppers call in their
    inner loops.
    """

    def __init__(self, K: KernelWeights, exterior: Exterior):
        self.K = K
        self.exterior = exterior
        self.p = float(K.exponents.p)
        self.h = K.grid.h
        self.N = K.grid.N
        E, G = K.exterior_terms(exterior)
        self.W = np.ascontiguousarray(K.W)
        self.E = np.ascontiguousarray(E)
        self.G = np.ascontiguousarray(G, dtype=float)
        self.n_evals = 0

    def evaluate(self, u):
        """Return ``(A(u), S(u))`` from a single pass over the kernel."""
        u = np.ascontiguousarray(u, dtype=float)
        op = np.empty(self.N)
        rows = np.empty(self.N)
        _rows(u, self.W, self.E, self.G, self.p, op, rows)
        self.n_evals += 1
        return op, self.h * _compensated_sum(rows)

    def apply(self, u):
        return self.evaluate(u)[0]

    def seminorm_p(self, u):
        return self.evaluate(u)[1]

    def energy(self, u, f=None):
        """``S(u)/p - h <f, u>`` and its L2_h-gradient ``A(u) - f``."""
        op, S = self.evaluate(u)
        if f is None:
            return S / self.p, op
        return S / self.p - self.h * _compensated_sum(np.ascontiguousarray(f * u)), op - f


def _operator_for(field: Field, K: KernelWeights, e: Exponents | None) -> DiscreteOperator:
    if e is not None and e != K.exponents:
        raise ValueError(f"kernel built for {K.exponents}, called with {e}")
    if not K.matches(field.grid, K.exponents):
        raise ValueError("field and kernel live on different grids")
    return DiscreteOperator(K, field.exterior)


def apply_operator(field: Field, K: KernelWeights, e: Exponents | None = None) -> Field:
    """Discrete (-Delta_p)^s of ``field``; the result carries the same exterior."""
    return field.with_values(_operator_for(field, K, e).apply(field.values))


def seminorm_p(field: Field, K: KernelWeights, e: Exponents | None = None) -> float:
    """Discrete [u]^p_{W^{s,p}}, up to the dropped exterior/exterior constant."""
    return _operator_for(field, K, e).seminorm_p(field.values)


def seminorm(field: Field, K: KernelWeights, e: Exponents | None = None) -> float:
    return seminorm_p(field, K, e) ** (1.0 / K.exponents.p)


@dataclass(frozen=True)
class EnergyBreakdown:
    seminorm_p: float
    source_term: float
    p: float

    @property
    def total(self) -> float:
        return self.seminorm_p / self.p - self.source_term


def energy(field: Field, K: KernelWeights, e: Exponents | None = None, f: Field | None = None) -> EnergyBreakdown:
    op = _operator_for(field, K, e)
    S = op.seminorm_p(field.values)
    src = 0.0
    if f is not None:
        if f.grid.N != field.grid.N:
            raise ValueError("source lives on a different grid")
        src = field.grid.h * float(_compensated_sum(np.ascontiguousarray(f.values * field.values)))
    return EnergyBreakdown(S, src, K.exponents.p)


def lp_norm(field, m: float, h: float | None = None) -> float:
    """``(h sum |u_i|^m)^(1/m)``; accepts a Field or a raw array with ``h``."""
    if not m >= 1:
        raise ValueError(f"need m >= 1, got {m}")
    values, h = _values_and_h(field, h)
    return float((h * np.sum(np.abs(values) ** m)) ** (1.0 / m))


def linf_norm(field) -> float:
    values = field.values if isinstance(field, Field) else np.asarray(field)
    return float(np.max(np.abs(values))) if values.size else 0.0


def _values_and_h(field, h):
    if isinstance(field, Field):
        return field.values, field.grid.h
    if h is None:
        raise ValueError("raw arrays need the grid spacing h")
    return np.asarray(field, dtype=float), h


def assemble_matrix(K: KernelWeights, exterior: Exterior | None = None) -> np.ndarray:
    """Dense matrix of the operator obtained by applying it to basis vectors (p = 2)."""
    op = DiscreteOperator(K, exterior or Exterior.zero())
    N = K.grid.N
    cols = [op.apply(np.eye(N)[k]) - op.apply(np.zeros(N)) for k in range(N)]
    return np.column_stack(cols)


configure_threads()
