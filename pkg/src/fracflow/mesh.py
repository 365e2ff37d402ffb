"""Uniform 1-D grids, exterior data, and singular-kernel quadrature weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .pointwise import Exponents, RegimeError


@dataclass(frozen=True)
class Exterior:
    """Data prescribed outside the domain: zero, a constant, or a sampled function."""

    kind: str = "zero"
    value: float = 0.0
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "sampled"):
            raise ValueError(f"unknown exterior kind {self.kind!r}")
        if self.kind == "sampled" and self.func is None:
            raise ValueError("sampled exterior needs a function")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, value):
        return cls("constant", float(value))

    @classmethod
    def sampled(cls, func):
        return cls("sampled", func=func)

    @property
    def is_constant(self) -> bool:
        return self.kind != "sampled"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "constant":
            out = np.full_like(x, self.value)
        else:
            out = np.asarray(self.func(x), dtype=float) * np.ones_like(x)
        return float(out) if out.ndim == 0 else out

    def shifted(self, c):
        """Exterior data plus a constant."""
        if self.kind == "sampled":
            f = self.func
            return Exterior.sampled(lambda x: f(x) + c)
        if c == 0:
            return self
        return Exterior.constant(self.value + c)

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant({self.value!r})"
        return self.kind


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform grid on (a, b) with a truncation box of half-width R.

    Interior nodes sit at ``a + (i + 1/2) h``. The truncation box is
    ``[c - R, c + R]`` with ``c`` the domain midpoint; exterior cells inside
    the box are only used for sampled exterior data.
    """

    a: float
    b: float
    N: int
    R: float
    exterior: Exterior = Exterior()

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"need at least 4 interior nodes, got N={self.N}")
        if not self.R >= 2 * (self.b - self.a):
            raise ValueError(f"need R >= 2(b - a) = {2 * (self.b - self.a)}, got R={self.R}")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def box(self) -> tuple[float, float]:
        return self.center - self.R, self.center + self.R

    @property
    def x(self) -> np.ndarray:
        return self.a + (np.arange(self.N) + 0.5) * self.h

    def exterior_cells(self):
        """Edges of the exterior cells inside the box, left side then right side.

        Each side is split into cells of width at most h. Returns
        ``(lo, hi)`` arrays of cell edges.
        """
        side = self.a - self.box[0]
        m = int(np.ceil(side / self.h - 1e-9))
        w = side / m
        left = self.a - w * np.arange(m, 0, -1)
        right = self.b + w * np.arange(m)
        lo = np.concatenate([left, right])
        return lo, lo + w

    def with_exterior(self, exterior: Exterior) -> "Grid":
        return Grid(self.a, self.b, self.N, self.R, exterior)


def build_grid(a, b, N, R, exterior_mode: Exterior | None = None) -> Grid:
    return Grid(float(a), float(b), int(N), float(R), exterior_mode or Exterior.zero())


@dataclass
class Field:
    """Nodal values on the interior nodes plus the exterior data."""

    grid: Grid
    values: np.ndarray
    exterior: Exterior | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if self.exterior is None:
            self.exterior = self.grid.exterior

    @classmethod
    def from_function(cls, grid, func, exterior=None):
        return cls(grid, func(grid.x), exterior)

    @classmethod
    def zeros(cls, grid, exterior=None):
        return cls(grid, np.zeros(grid.N), exterior)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.exterior)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.exterior)


def restrict_and_extend(field: Field, point: float) -> float:
    """Value of ``field`` at ``point``: nodal value inside the domain, exterior data outside.

    Inside, the point is mapped to the cell that contains it.
    """
    g = field.grid
    if g.a < point < g.b:
        i = min(int((point - g.a) / g.h), g.N - 1)
        return float(field.values[i])
    return float(field.exterior(point))


# ---------------------------------------------------------------------------
# quadrature


def _cell_integral(dist_near, dist_far, sp):
    """Integral of r^(-1-sp) from dist_near to dist_far."""
    return (dist_near ** (-sp) - dist_far ** (-sp)) / sp


@dataclass
class KernelWeights:
    """Quadrature weights for the kernel |x - y|^(-1-sp).

    ``W[i, j]`` is the exact integral of the kernel centred at ``x_i`` over
    interior cell ``j``; the self-cell weight is zero. ``tail`` is the kernel
    mass beyond the truncation box. How the exterior enters depends on the
    exterior data, see :meth:`exterior_terms`.
    """

    W: np.ndarray
    tail_left: np.ndarray
    tail_right: np.ndarray
    grid: Grid
    exponents: Exponents
    rule: str = "cell-averaged"

    @property
    def tail(self) -> np.ndarray:
        return self.tail_left + self.tail_right

    @property
    def meta(self) -> dict:
        return {"s": self.exponents.s, "p": self.exponents.p, "rule": self.rule}

    @cached_property
    def complement_mass(self) -> np.ndarray:
        """Exact kernel mass over R minus (a, b), per node."""
        g, sp = self.grid, self.exponents.sp
        x = g.x
        return ((x - g.a) ** (-sp) + (g.b - x) ** (-sp)) / sp

    @cached_property
    def box_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact kernel mass of each exterior box cell, and the cell midpoints."""
        g, sp = self.grid, self.exponents.sp
        lo, hi = g.exterior_cells()
        x = g.x[:, None]
        left = (np.arange(lo.size) < lo.size // 2)[None, :]
        near = np.where(left, x - hi[None, :], lo[None, :] - x)
        far = np.where(left, x - lo[None, :], hi[None, :] - x)
        return _cell_integral(near, far, sp), 0.5 * (lo + hi)

    def exterior_terms(self, exterior: Exterior) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``E`` (N x K) and exterior values ``G`` (K,) for the exterior sum.

        Constant data uses one column with the exact complement mass. Sampled
        data uses box cells at their midpoint values plus the two tails, where
        the data is frozen at the outermost sample.
        """
        if exterior.is_constant:
            return self.complement_mass[:, None], np.array([exterior(0.0)])
        cells, mid = self.box_cells
        E = np.hstack([cells, self.tail_left[:, None], self.tail_right[:, None]])
        vals = np.asarray(exterior(mid), dtype=float)
        G = np.concatenate([vals, [vals[0], vals[-1]]])
        return E, G

    def matches(self, grid: Grid, e: Exponents) -> bool:
        return grid.a == self.grid.a and grid.b == self.grid.b and grid.N == self.grid.N \
            and grid.R == self.grid.R and e == self.exponents


def interior_weights(grid: Grid, sp: float) -> np.ndarray:
    h = grid.h
    k = np.arange(grid.N)
    d = np.abs(k[:, None] - k[None, :]) * h
    W = np.zeros((grid.N, grid.N))
    off = d > 0
    W[off] = _cell_integral(d[off] - h / 2, d[off] + h / 2, sp)
    return W


def build_kernel(grid: Grid, e: Exponents) -> KernelWeights:
    if e.n != 1:
        raise RegimeError("the solver is one-dimensional (n = 1)")
    sp = e.sp
    lo, hi = grid.box
    x = grid.x
    return KernelWeights(
        W=interior_weights(grid, sp),
        tail_left=(x - lo) ** (-sp) / sp,
        tail_right=(hi - x) ** (-sp) / sp,
        grid=grid,
        exponents=e,
    )
