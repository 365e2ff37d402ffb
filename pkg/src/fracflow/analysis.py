"""Quantitative verdicts on trajectories: decay fits, extinction, ordering, constants."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .flow import Trajectory, eigenprofile
from .mesh import Exterior, Field, Grid, KernelWeights
from .operators import DiscreteOperator, lp_norm
from .pointwise import Exponents

LAWS = ("power", "exponential", "extinction")
DEFAULT_POWER_TOL = 0.15
DEFAULT_R2 = 0.99
DEFAULT_EXTINCTION = 1e-8


class FitError(ValueError):
    """The requested fit window is unusable."""


@dataclass
class DecayReport:
    law: str
    fitted: float | None
    target: float | None
    window: tuple[float, float]
    residual: float
    verdict: bool
    r2: float | None = None
    tolerance: float | None = None
    points: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d

    def summary(self) -> str:
        fitted = "none" if self.fitted is None else f"{self.fitted:.6g}"
        target = "" if self.target is None else f" target={self.target:.6g}"
        r2 = "" if self.r2 is None else f" R2={self.r2:.6f}"
        status = "pass" if self.verdict else "fail"
        return (f"{self.law}: fitted={fitted}{target}{r2} window=[{self.window[0]:.4g}, "
                f"{self.window[1]:.4g}] -> {status}")


def _as_series(series) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, tuple) and len(series) == 2:
        t, v = series
    else:
        arr = np.asarray(series, dtype=float)
        t, v = arr[:, 0], arr[:, 1]
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise FitError("series needs matching 1-D time and value arrays")
    if t.size < 2:
        raise FitError("series needs at least two points")
    return t, v


def norm_series(traj: Trajectory, key: str = "linf") -> tuple[np.ndarray, np.ndarray]:
    """``(times, values)`` of one recorded norm; keys are ``linf``, ``l2``, ``l<m>``, ``seminorm``."""
    if key not in traj.series:
        raise KeyError(f"no series {key!r}; recorded: {sorted(traj.series)}")
    return traj.times, traj.series[key]


def monotone_violations(values, rel_slack: float = 1e-9, increasing: bool = False) -> np.ndarray:
    """Indices ``k`` where the step ``k -> k+1`` breaks monotonicity beyond relative slack."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    if increasing:
        d = -d
    tol = rel_slack * np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
    return np.flatnonzero(d > tol)


def is_monotone(values, rel_slack: float = 1e-9) -> bool:
    return monotone_violations(values, rel_slack).size == 0 or \
        monotone_violations(values, rel_slack, increasing=True).size == 0


def extinction_index(values, threshold: float) -> int | None:
    below = np.flatnonzero(np.asarray(values) < threshold)
    return int(below[0]) if below.size else None


def default_window(series, law: str, threshold: float = DEFAULT_EXTINCTION) -> tuple[float, float]:
    """Default fit window.

    Any extinction plateau is cut first. For power laws, and for exponential
    fits of series that never go extinct, the window is the last decade of
    time ``[t_hi / 10, t_hi]``. For series that do go extinct the exponential
    window is the first half of the lifetime, because the approach to
    extinction is faster than any exponential.
    """
    t, v = _as_series(series)
    k = extinction_index(v, threshold)
    t_hi = t[-1] if k is None else t[max(k - 1, 0)]
    if law == "exponential" and k is not None:
        return float(t[0]), float(t[0] + 0.5 * (t_hi - t[0]))
    return float(t_hi / 10.0), float(t_hi)


def _select(t, v, window, min_points=3):
    lo, hi = window
    if not lo < hi:
        raise FitError(f"empty fit window {window}")
    if lo < t[0] - 1e-12 * max(1.0, abs(t[0])) or hi > t[-1] + 1e-12 * max(1.0, abs(t[-1])):
        raise FitError(f"window {window} leaves the recorded range [{t[0]}, {t[-1]}]")
    eps = 1e-12 * max(abs(lo), abs(hi), 1.0)
    m = (t >= lo - eps) & (t <= hi + eps)
    if m.sum() < min_points:
        raise FitError(f"only {int(m.sum())} samples in window {window}")
    tw, vw = t[m], v[m]
    if np.any(vw <= 0):
        raise FitError("series must be positive on the fit window")
    if not is_monotone(vw):
        raise FitError("series is not monotone on the fit window (pre-asymptotic regime?)")
    return tw, vw


def linear_fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    ss_res = float(np.dot(res, res))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return float(slope), float(icpt), math.sqrt(ss_res / x.size), r2


def power_target(p: float) -> float:
    return -1.0 / (p - 2.0)


def fit_power(series, window=None, *, p: float | None = None, target: float | None = None,
              tolerance: float = DEFAULT_POWER_TOL) -> DecayReport:
    """Least-squares slope of ``log v`` against ``log t``.

    The target is ``-1/(p-2)`` when ``p`` is given. The window must span at
    least a decade of time.
    """
    t, v = _as_series(series)
    if window is None:
        window = default_window((t, v), "power")
    lo, hi = window
    if not lo > 0:
        raise FitError("power fits need a window with t > 0")
    if hi < 10 * lo * (1 - 1e-9):
        raise FitError(f"window [{lo}, {hi}] spans less than a decade")
    tw, vw = _select(t, v, window)
    slope, _, rms, r2 = linear_fit(np.log(tw), np.log(vw))
    if target is None and p is not None:
        target = power_target(p)
    verdict = target is not None and abs(slope - target) <= tolerance
    return DecayReport("power", slope, target, (float(lo), float(hi)), rms, bool(verdict), r2, tolerance, tw.size)


def fit_exponential(series, window=None, *, r2_min: float = DEFAULT_R2) -> DecayReport:
    """Least-squares slope of ``log v`` against ``t``; passes on R^2 >= r2_min with a negative rate."""
    t, v = _as_series(series)
    if window is None:
        window = default_window((t, v), "exponential")
    tw, vw = _select(t, v, window)
    rate, _, rms, r2 = linear_fit(tw, np.log(vw))
    verdict = r2 >= r2_min and rate < 0
    return DecayReport("exponential", rate, None, (float(window[0]), float(window[1])), rms, bool(verdict), r2,
                       r2_min, tw.size)


def detect_extinction(series, threshold: float = DEFAULT_EXTINCTION) -> DecayReport:
    """First time the series drops below ``threshold``; ``fitted`` is None if it never does."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    t, v = _as_series(series)
    k = extinction_index(v, threshold)
    te = None if k is None else float(t[k])
    return DecayReport("extinction", te, None, (float(t[0]), float(t[-1])), 0.0, te is not None,
                       tolerance=threshold, points=t.size)


# ---------------------------------------------------------------------------


@dataclass
class RateConstants:
    L: float | None
    nu: float
    aux_dimension: int | None
    sup_seminorm: float
    tau: float
    degenerate: bool

    def to_dict(self) -> dict:
        return asdict(self)


def theorem2_constants(traj_u: Trajectory, traj_v: Trajectory, e: Exponents, tau: float = 0.0,
                       aux_dimension: int | None = None) -> RateConstants:
    """``L = (sup_{t >= tau} [u(t)] + [v(t)])^(p-2)`` and the exponent nu.

    When both seminorms vanish on the whole range (both solutions equal the
    same constant) L is undefined and ``degenerate`` is set.
    """
    tu, su = norm_series(traj_u, "seminorm")
    tv, sv = norm_series(traj_v, "seminorm")
    if tu.shape != tv.shape or not np.allclose(tu, tv, rtol=1e-12, atol=0):
        raise ValueError("trajectories are recorded on different time grids")
    m = tu >= tau
    if not m.any():
        raise ValueError(f"no recorded times at or after tau={tau}")
    sup = float(np.max(su[m] + sv[m]))
    degenerate = not sup > 0
    L = None if degenerate else sup ** (e.p - 2)
    aux = None if e.n > e.sp else (aux_dimension or e.default_aux_dimension())
    return RateConstants(L, e.nu(aux), aux, sup, float(tau), degenerate)


# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    holds: bool
    slack: float
    max_violation: float
    first_time: float | None = None
    first_index: int | None = None
    first_x: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _snapshots(obj) -> list[tuple[float, Field]]:
    if isinstance(obj, Trajectory):
        return obj.snapshots
    return list(obj)


def comparison_verdict(traj_u, traj_v, slack: float = 0.0) -> ComparisonReport:
    """Check ``v <= u + slack`` nodewise at every recorded time.

    Either argument may be a Trajectory or a sequence of ``(t, Field)``.
    """
    su, sv = _snapshots(traj_u), _snapshots(traj_v)
    if len(su) != len(sv):
        raise ValueError(f"misaligned trajectories: {len(su)} vs {len(sv)} snapshots")
    worst = -math.inf
    first = None
    for (tu, fu), (tv, fv) in zip(su, sv):
        if abs(tu - tv) > 1e-12 * max(1.0, abs(tu)):
            raise ValueError(f"misaligned times {tu} and {tv}")
        excess = fv.values - fu.values
        i = int(np.argmax(excess))
        worst = max(worst, float(excess[i]))
        if first is None and excess[i] > slack:
            first = (float(tu), i, float(fu.grid.x[i]))
    if first is None:
        return ComparisonReport(True, slack, worst)
    return ComparisonReport(False, slack, worst, *first)


# ---------------------------------------------------------------------------


@dataclass
class EmbeddingProbe:
    constant: float
    eigen_ratio: float
    sample_ratios: np.ndarray = field(repr=False)
    argmax: str = "eigenprofile"


def _random_smooth(grid: Grid, rng: np.random.Generator, modes: int = 6) -> np.ndarray:
    # random sine series vanishing at the endpoints, with decaying spectrum
    xi = (grid.x - grid.a) / grid.length
    k = np.arange(1, modes + 1)
    c = rng.standard_normal(modes) / k
    return np.sin(np.pi * np.outer(xi, k)) @ c


def embedding_constant_probe(grid: Grid, K: KernelWeights, e: Exponents | None = None, m_samples: int = 64,
                             seed: int = 0, eigen_field: Field | None = None) -> EmbeddingProbe:
    """Empirical lower bound for C in ``|u|_p^p <= C |Omega|^(sp/n) [u]^p``.

    The ratio is maximized over ``m_samples`` smooth random fields with zero
    exterior, plus the minimizer of the seminorm on the L^p sphere. For
    p = 2 that is the eigenprofile; for other p the L^2 eigenprofile serves
    as a good candidate.
    """
    e = e or K.exponents
    op = DiscreteOperator(K, Exterior.zero())
    h, p = grid.h, e.p
    scale = grid.length ** (e.sp / e.n)

    def ratio(u):
        S = op.seminorm_p(u)
        if not S > 0:
            return math.nan
        return lp_norm(u, p, h) ** p / (scale * S)

    rng = np.random.default_rng(seed)
    samples = np.array([ratio(_random_smooth(grid, rng)) for _ in range(m_samples)])
    samples = samples[np.isfinite(samples)]
    if eigen_field is None:
        eigen_field = eigenprofile(grid, K, e).F_hat
    er = ratio(eigen_field.values)
    best = max(er, float(samples.max()) if samples.size else -math.inf)
    return EmbeddingProbe(best, er, samples, "eigenprofile" if best == er else "random sample")
