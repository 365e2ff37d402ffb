"""Scalar kernel algebra for the fractional p-Laplacian.

Contains the odd power map ``J_p(t) = |t|^(p-2) t``, the M-truncation, and
brute-force evaluators for the pointwise convexity inequalities that the
decay estimates are built on. Every ``check_*`` function evaluates both sides
of one inequality elementwise (scalars or broadcastable arrays) and returns
an :class:`IneqVerdict`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_RTOL = 1e-12


class RegimeError(ValueError):
    """Raised when exponents fall outside the regime an operation requires."""


@dataclass(frozen=True)
class Exponents:
    """The exponent triple ``(p, s, n)`` and the thresholds derived from it."""

    p: float
    s: float
    n: int = 1

    def __post_init__(self):
        if not self.p > 1:
            raise RegimeError(f"p must exceed 1, got {self.p}")
        if not 0 < self.s < 1:
            raise RegimeError(f"s must lie in (0, 1), got {self.s}")
        if int(self.n) != self.n or self.n < 1:
            raise RegimeError(f"n must be a positive integer, got {self.n}")

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def p_star(self) -> float | None:
        """Fractional Sobolev exponent np/(n - sp); None when sp >= n."""
        if self.sp >= self.n:
            return None
        return self.n * self.p / (self.n - self.sp)

    @property
    def singular_threshold(self) -> float:
        return max(1.0, 2 * self.n / (self.n + 2 * self.s))

    @property
    def is_degenerate(self) -> bool:
        return self.p > 2

    @property
    def is_singular(self) -> bool:
        return self.p < 2

    def require_degenerate(self):
        if not self.p > 2:
            raise RegimeError(f"power-decay regime needs p > 2, got p={self.p}")

    def require_singular(self):
        lo = self.singular_threshold
        if not lo < self.p < 2:
            raise RegimeError(
                f"exponential-decay regime needs {lo:g} < p < 2, got p={self.p}"
            )

    def default_aux_dimension(self) -> float:
        """Smallest integer N > sp, or a real N when no integer keeps nu below p.

        For p < 2, ``2N/(N+2s) < p`` needs ``N < 2ps/(2-p)``; the smallest
        integer above sp gives the smallest nu, so if it fails the midpoint of
        ``(sp, 2ps/(2-p))`` is used instead.
        """
        N = math.floor(self.sp) + 1
        if self.p < 2:
            cap = 2 * self.p * self.s / (2 - self.p)
            if not N < cap:
                return 0.5 * (self.sp + cap)
        return N

    def nu(self, aux_dimension: int | None = None) -> float:
        """Exponent nu: 2n/(n+2s) if n > sp, else 2N/(N+2s) for an auxiliary N > sp."""
        if self.n > self.sp:
            return 2 * self.n / (self.n + 2 * self.s)
        N = self.default_aux_dimension() if aux_dimension is None else aux_dimension
        if not N > self.sp:
            raise RegimeError(f"auxiliary dimension must exceed sp={self.sp}, got {N}")
        nu = 2 * N / (N + 2 * self.s)
        if self.p < 2 and not nu < self.p:
            raise RegimeError(f"auxiliary dimension {N} gives nu={nu:.6g} >= p={self.p}")
        return nu


@dataclass
class IneqVerdict:
    """Both sides of an inequality ``lhs >= rhs``, elementwise.

    ``holds`` is true where ``lhs - rhs >= -rtol * (|lhs| + |rhs| + 1)``.
    ``constant`` records a calibrated constant when the inequality has one.
    """

    lhs: np.ndarray | float
    rhs: np.ndarray | float
    rtol: float = DEFAULT_RTOL
    constant: float | None = None

    @property
    def gap(self):
        return self.lhs - self.rhs

    @property
    def slack(self):
        return self.rtol * (np.abs(self.lhs) + np.abs(self.rhs) + 1.0)

    @property
    def holds(self):
        ok = self.gap >= -self.slack
        return bool(ok) if np.ndim(ok) == 0 else ok

    @property
    def violations(self) -> int:
        return int(np.size(self.holds) - np.count_nonzero(self.holds))

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gap))


def _check_p(p):
    if not p > 1:
        raise RegimeError(f"J_p needs p > 1, got {p}")


def jp(t, p):
    """``|t|^(p-2) t``, with ``jp(0) = 0`` (no 0 * inf for p < 2)."""
    _check_p(p)
    t = np.asarray(t, dtype=float)
    out = np.copysign(np.abs(t) ** (p - 1), t)
    return float(out) if out.ndim == 0 else out


def truncate(x, M):
    """Clamp ``x`` to ``[-M, M]``."""
    if not M > 0:
        raise ValueError(f"truncation level must be positive, got {M}")
    out = np.clip(np.asarray(x, dtype=float), -M, M)
    return float(out) if out.ndim == 0 else out


def jp_truncated(t, p, M):
    return jp(truncate(t, M), p)


def _jp_any(t, p):
    # J_1 is the sign function; jp() itself insists on p > 1
    if p == 1:
        return np.sign(np.asarray(t, dtype=float))
    return jp(t, p)


def _signed_power(t, e):
    # |t|^e t, safe at t = 0 for e >= 0
    t = np.asarray(t, dtype=float)
    return np.abs(t) ** e * t


# ---------------------------------------------------------------------------
# degenerate regime, p >= 2


def check_deg_power(a, b, p, q, rtol=DEFAULT_RTOL, scale=1.0):
    """J_q(a-b)(J_p(a)-J_p(b)) >= (p-1)(q/(p-2+q))^q ||a|^((p-2)/q) a - |b|^((p-2)/q) b|^q."""
    if not (p >= 2 and q >= 1):
        raise RegimeError(f"needs p >= 2 and q >= 1, got p={p}, q={q}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = _jp_any(a - b, q) * (jp(a, p) - jp(b, p))
    C = scale * (p - 1) * (q / (p - 2 + q)) ** q
    e = (p - 2) / q
    rhs = C * np.abs(_signed_power(a, e) - _signed_power(b, e)) ** q
    return IneqVerdict(lhs, rhs, rtol)


def fourpoint_constant(p, gamma):
    return gamma / (3 * 2 ** (p - 1)) * (p / (gamma - 1 + p)) ** p


def check_deg_fourpoint(a, b, c, d, p, gamma, rtol=DEFAULT_RTOL, scale=1.0):
    """The degenerate four-point inequality with C(p, gamma) = gamma/(3 2^(p-1)) (p/(gamma-1+p))^p."""
    return _deg_fourpoint(a, b, c, d, p, gamma, None, rtol, scale)


def check_deg_fourpoint_trunc(a, b, c, d, p, gamma, M, rtol=DEFAULT_RTOL, scale=1.0):
    """Truncated four-point inequality: J^M_{gamma+1} on the left, (.)_M on the right.

    The right-hand side truncates the difference everywhere it appears,
    ``| |x_M|^((gamma-1)/p) x_M - |y_M|^((gamma-1)/p) y_M |^p``; keeping the
    power factor untruncated makes the inequality false for large |a-b|.
    """
    if not M > 0:
        raise ValueError(f"truncation level must be positive, got {M}")
    return _deg_fourpoint(a, b, c, d, p, gamma, M, rtol, scale)


def _deg_fourpoint(a, b, c, d, p, gamma, M, rtol, scale):
    if not (p >= 2 and gamma >= 1):
        raise RegimeError(f"needs p >= 2 and gamma >= 1, got p={p}, gamma={gamma}")
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    x, y = a - b, c - d
    if M is not None:
        x, y = truncate(x, M), truncate(y, M)
    lhs = (jp(a - c, p) - jp(b - d, p)) * (jp(x, gamma + 1) - jp(y, gamma + 1))
    e = (gamma - 1) / p
    rhs = scale * fourpoint_constant(p, gamma) * np.abs(_signed_power(x, e) - _signed_power(y, e)) ** p
    return IneqVerdict(lhs, rhs, rtol)


# ---------------------------------------------------------------------------
# Lipschitz-type bound for J_p, any p > 1


def _lipschitz_denominator(a, b, p):
    r = np.abs(b) + np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, r ** (p - 2) * np.abs(a - b), 0.0)


@lru_cache(maxsize=None)
def lipschitz_constant(p, n_grid=200, box=10.0, safety=1.05):
    """Witness for the constant c(p) in |J_p(a)-J_p(b)| <= c (|b|+|a-b|)^(p-2) |a-b|.

    Grid maximum of the ratio over (a, b) in [-box, box]^2 with a != b,
    times a safety factor.
    """
    _check_p(p)
    g = np.linspace(-box, box, n_grid)
    A, B = np.meshgrid(g, g, indexing="ij")
    mask = A != B
    num = np.abs(jp(A[mask], p) - jp(B[mask], p))
    den = _lipschitz_denominator(A[mask], B[mask], p)
    return safety * float(np.max(num / den))


def check_jp_lipschitz(a, b, p, rtol=DEFAULT_RTOL, scale=1.0, constant=None):
    """c(p) (|b|+|a-b|)^(p-2) |a-b| >= |J_p(a) - J_p(b)|, with c(p) calibrated."""
    _check_p(p)
    c = lipschitz_constant(p) if constant is None else constant
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = scale * c * _lipschitz_denominator(a, b, p)
    rhs = np.abs(jp(a, p) - jp(b, p))
    return IneqVerdict(lhs, rhs, rtol, constant=c)


# ---------------------------------------------------------------------------
# singular regime, 1 < p < 2


def _require_singular_p(p):
    if not 1 < p < 2:
        raise RegimeError(f"needs 1 < p < 2, got p={p}")


def check_sing_twopoint(a, b, p, rtol=DEFAULT_RTOL, scale=1.0):
    """(J_p(a)-J_p(b))(a-b) >= (p-1)|a-b|^2 / (|a|+|b|)^(2-p); rejects a = b = 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any((a == 0) & (b == 0)):
        raise ValueError("a = b = 0 makes the right-hand side 0/0")
    return _sing_twopoint(a, b, p, rtol, scale)


def _sing_twopoint(a, b, p, rtol, scale):
    _require_singular_p(p)
    lhs = (jp(a, p) - jp(b, p)) * (a - b)
    r = np.abs(a) + np.abs(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(r > 0, scale * (p - 1) * (a - b) ** 2 / r ** (2 - p), 0.0)
    return IneqVerdict(lhs, rhs, rtol)


def sing_fourpoint_constant(p, gamma):
    return 4 * (gamma - 1) * (p - 1) / gamma**2


def check_sing_fourpoint(a, b, c, d, p, gamma, rtol=DEFAULT_RTOL, scale=1.0):
    """The singular four-point inequality with constant 4(gamma-1)(p-1)/gamma^2.

    When |a-c| + |b-d| = 0 both sides vanish and the gap is 0.
    """
    return _sing_fourpoint(a, b, c, d, p, gamma, None, rtol, scale)


def check_sing_fourpoint_trunc(a, b, c, d, p, gamma, M, rtol=DEFAULT_RTOL, scale=1.0):
    """Truncated singular four-point inequality (J^M_gamma left, (.)_M right).

    As in :func:`check_deg_fourpoint_trunc` the power factor on the right
    uses the truncated difference.
    """
    if not M > 0:
        raise ValueError(f"truncation level must be positive, got {M}")
    return _sing_fourpoint(a, b, c, d, p, gamma, M, rtol, scale)


def _sing_fourpoint(a, b, c, d, p, gamma, M, rtol, scale):
    _require_singular_p(p)
    if not gamma >= 2:
        raise RegimeError(f"needs gamma >= 2, got {gamma}")
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    x, y = a - b, c - d
    if M is not None:
        x, y = truncate(x, M), truncate(y, M)
    lhs = (jp(x, gamma) - jp(y, gamma)) * (jp(a - c, p) - jp(b - d, p))
    e = (gamma - 2) / 2
    r = np.abs(a - c) + np.abs(b - d)
    K = scale * sing_fourpoint_constant(p, gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = np.where(r > 0, K * (_signed_power(x, e) - _signed_power(y, e)) ** 2 * r ** (p - 2), 0.0)
    return IneqVerdict(lhs, rhs, rtol)


# ---------------------------------------------------------------------------
# randomized sweeps

DEGENERATE_P = (2.5, 3.0, 4.0)
SINGULAR_P = (1.2, 1.5, 1.9)
GAMMAS = (1.0, 2.0, 5.0)
LEVELS = (0.1, 1.0, 10.0)
DISTRIBUTIONS = ("normal", "uniform", "cauchy")


def draw_tuples(rng: np.random.Generator, count: int, dist: str, width: int = 4) -> np.ndarray:
    """``count`` rows of ``width`` reals; row 0 is all zeros so every sweep hits the 0/0 corner."""
    if dist == "normal":
        x = rng.standard_normal((count, width))
    elif dist == "uniform":
        x = rng.uniform(-10, 10, (count, width))
    elif dist == "cauchy":
        x = np.clip(rng.standard_cauchy((count, width)), -1e3, 1e3)
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    x[0] = 0.0
    return x


@dataclass
class SweepRow:
    inequality: str
    p: float
    param: float | None
    M: float | None
    distribution: str
    count: int
    violations: int
    min_gap: float
    min_rel_gap: float


def _inequality_cases(regimes):
    # (name, regime, p values, parameter values, truncation levels, evaluator)
    deg = [
        ("deg_power", DEGENERATE_P, GAMMAS, (None,),
         lambda x, p, q, M, sc: check_deg_power(x[:, 0], x[:, 1], p, q, scale=sc)),
        ("deg_fourpoint", DEGENERATE_P, GAMMAS, (None,),
         lambda x, p, g, M, sc: check_deg_fourpoint(*x.T, p, g, scale=sc)),
        ("deg_fourpoint_trunc", DEGENERATE_P, GAMMAS, LEVELS,
         lambda x, p, g, M, sc: check_deg_fourpoint_trunc(*x.T, p, g, M, scale=sc)),
    ]
    sing = [
        ("sing_twopoint", SINGULAR_P, (None,), (None,),
         lambda x, p, _, M, sc: _sing_twopoint(x[:, 0], x[:, 1], p, DEFAULT_RTOL, sc)),
        ("sing_fourpoint", SINGULAR_P, tuple(g for g in GAMMAS if g >= 2), (None,),
         lambda x, p, g, M, sc: check_sing_fourpoint(*x.T, p, g, scale=sc)),
        ("sing_fourpoint_trunc", SINGULAR_P, tuple(g for g in GAMMAS if g >= 2), LEVELS,
         lambda x, p, g, M, sc: check_sing_fourpoint_trunc(*x.T, p, g, M, scale=sc)),
    ]
    cases = []
    if "degenerate" in regimes:
        cases += deg
    if "singular" in regimes:
        cases += sing
    lip_p = tuple(p for r, ps in (("singular", SINGULAR_P), ("degenerate", DEGENERATE_P)) if r in regimes for p in ps)
    if lip_p:
        cases.append(("jp_lipschitz", lip_p, (None,), (None,),
                      lambda x, p, _, M, sc: check_jp_lipschitz(x[:, 0], x[:, 1], p, scale=sc)))
    return cases


def sweep(seed: int = 0, count: int = 100_000, regimes=("degenerate", "singular"),
          corrupt: bool = False, distributions=DISTRIBUTIONS) -> list[SweepRow]:
    """Evaluate every inequality on ``count`` seeded random tuples per parameter set and distribution.

    With ``corrupt`` the lower-bound constants are multiplied by 10 and the
    Lipschitz constant by 0.1, which must produce violations.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    unknown = set(regimes) - {"degenerate", "singular"}
    if unknown:
        raise ValueError(f"unknown regimes {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    rows = []
    for name, ps, params, levels, evaluate in _inequality_cases(regimes):
        sc = (0.1 if name == "jp_lipschitz" else 10.0) if corrupt else 1.0
        for p in ps:
            for q in params:
                for M in levels:
                    for dist in distributions:
                        x = draw_tuples(rng, count, dist)
                        with np.errstate(over="ignore", invalid="ignore"):
                            v = evaluate(x, p, q, M, sc)
                        gap = np.atleast_1d(v.gap)
                        rel = gap / (np.abs(v.lhs) + np.abs(v.rhs) + 1.0)
                        rows.append(SweepRow(name, p, q, M, dist, count, v.violations,
                                             float(gap.min()), float(np.min(rel))))
    return rows
