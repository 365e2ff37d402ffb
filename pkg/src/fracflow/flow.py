"""Time integration of v_t + (-Delta_p)^s v = f and the explicit example solutions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .descent import minimize
from .mesh import Exterior, Field, Grid, KernelWeights
from .operators import DiscreteOperator, linf_norm, lp_norm
from .pointwise import Exponents, RegimeError, lipschitz_constant

SCHEMES = ("explicit", "minimizing_movement")


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class SolverConfig:
    """Time-stepping parameters.

    ``dt_control`` is the adaptive safety factor. For the minimizing-movement
    scheme the step is ``max(dt_init, dt_control * t)``, so 0 gives uniform
    steps and a positive value gives geometric steps suited to power-law
    decay. For the explicit scheme the step is ``dt_init`` and is halved
    (and kept halved) whenever a step would raise the sup norm beyond
    ``(1 + dt_control) (|u|_inf + dt |f|_inf)``.
    """

    scheme: str = "minimizing_movement"
    dt_init: float = 1e-3
    t_end: float = 1.0
    dt_control: float = 0.0
    inner_tol: float = 1e-10
    inner_max_iter: int = 5000
    record_every: int = 1
    norms: tuple[float, ...] = (2.0, 4.0)
    extinction_threshold: float = 1e-12
    stop_at_extinction: bool = True

    def __post_init__(self):
        if self.scheme == "implicit":
            self.scheme = "minimizing_movement"
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt_init > 0:
            raise ValueError("dt_init must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.dt_control < 0:
            raise ValueError("dt_control must be nonnegative")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")
        if int(self.inner_max_iter) < 1:
            raise ValueError("inner_max_iter must be a positive integer")


@dataclass
class Trajectory:
    """Recorded times, per-step norm series, and snapshots every ``record_every`` steps."""

    grid: Grid
    times: np.ndarray
    series: dict[str, np.ndarray]
    snapshots: list[tuple[float, Field]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    nonconverged: int = 0
    extinction_time: float | None = None

    def __len__(self):
        return len(self.times)

    def pairs(self, key: str) -> tuple[np.ndarray, np.ndarray]:
        return self.times, self.series[key]

    @property
    def final(self) -> Field:
        return self.snapshots[-1][1]


@dataclass
class StepResult:
    field: Field
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    objective_before: float = math.nan
    objective_after: float = math.nan


# ---------------------------------------------------------------------------
# single steps


def _source_values(f, t, N):
    if f is None:
        return np.zeros(N)
    if callable(f) and not isinstance(f, Field):
        f = f(t)
    values = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    return np.broadcast_to(values, (N,)).astype(float)


def step_explicit(u: Field, dt: float, f: Field | None, K: KernelWeights, e: Exponents | None = None) -> Field:
    """Forward Euler: ``u - dt (A(u) - f)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    op = DiscreteOperator(K, u.exterior)
    fv = _source_values(f, 0.0, u.grid.N)
    return u.with_values(u.values - dt * (op.apply(u.values) - fv))


def _prox_step(op: DiscreteOperator, u, dt, fv, tol, max_iter):
    h, p = op.h, op.p

    def fun(z):
        A, S = op.evaluate(z)
        r = z - u
        val = np.dot(r, r) / (2 * dt) + S / (p * h) - np.dot(fv, z)
        return val, r / dt + A - fv

    scale = math.sqrt(h) * (np.linalg.norm(u) + dt * np.linalg.norm(fv))
    scale = max(scale, 1e-300)

    def stop(z, g, d):
        # size of the quasi-Newton correction relative to the data
        return math.sqrt(h) * np.linalg.norm(d) / scale

    return fun, minimize(fun, u, stop, tol, max_iter, init_step=dt, convex=True)


def step_implicit(u: Field, dt: float, f: Field | None, K: KernelWeights, e: Exponents | None = None,
                  cfg: SolverConfig | None = None) -> StepResult:
    """Minimizing-movement step.

    Minimizes ``|z - u|^2_{L2,h} / (2 dt) + S(z)/p - h <f, z>`` over nodal
    values with the exterior data of ``u`` held fixed, starting from ``u``.
    The minimizer solves ``z + dt (A(z) - f) = u``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    cfg = cfg or SolverConfig()
    op = DiscreteOperator(K, u.exterior)
    fv = _source_values(f, 0.0, u.grid.N)
    fun, res = _prox_step(op, u.values, dt, fv, cfg.inner_tol, cfg.inner_max_iter)
    before = fun(u.values)[0] * op.h
    return StepResult(u.with_values(res.x), res.converged, res.iterations, res.stop_value,
                      before, res.value * op.h)


# ---------------------------------------------------------------------------
# driver


class _Recorder:
    def __init__(self, grid, cfg, op):
        self.grid = grid
        self.cfg = cfg
        self.op = op
        self.times = []
        self.rows = []
        self.snapshots = []

    def record(self, t, values, exterior, step_index):
        h = self.grid.h
        row = {"linf": linf_norm(values)}
        for m in self.cfg.norms:
            row[f"l{m:g}"] = lp_norm(values, m, h)
        if self.op is not None:
            row["seminorm"] = max(self.op.seminorm_p(values), 0.0) ** (1.0 / self.op.p)
        self.times.append(t)
        self.rows.append(row)
        if step_index % self.cfg.record_every == 0:
            self.snapshots.append((t, Field(self.grid, values.copy(), exterior)))

    def finish(self, values, exterior, **kw) -> Trajectory:
        if not self.snapshots or self.snapshots[-1][0] != self.times[-1]:
            self.snapshots.append((self.times[-1], Field(self.grid, values.copy(), exterior)))
        keys = self.rows[0].keys()
        series = {k: np.array([r[k] for r in self.rows]) for k in keys}
        return Trajectory(self.grid, np.array(self.times), series, self.snapshots, **kw)


def _difference_exterior(gu: Exterior, gv: Exterior) -> Exterior:
    if gu.is_constant and gv.is_constant:
        c = gu(0.0) - gv(0.0)
        return Exterior.zero() if c == 0 else Exterior.constant(c)
    return Exterior.sampled(lambda x: gu(x) - gv(x))


def run_many(initial: Sequence[Field], f, cfg: SolverConfig, K: KernelWeights, e: Exponents | None = None,
             t0: float = 0.0, with_difference: bool = False) -> list[Trajectory]:
    """Advance several solutions in lockstep on one time grid.

    Returns one trajectory per solution, plus the trajectory of
    ``initial[0] - initial[1]`` when ``with_difference`` is set.
    """
    grid = K.grid
    ops = [DiscreteOperator(K, u.exterior) for u in initial]
    states = [u.values.copy() for u in initial]
    recs = [_Recorder(grid, cfg, op) for op in ops]
    w_rec = None
    if with_difference:
        w_ext = _difference_exterior(initial[0].exterior, initial[1].exterior)
        w_rec = _Recorder(grid, cfg, DiscreteOperator(K, w_ext))

    def record_all(t, k):
        for rec, z, u in zip(recs, states, initial):
            rec.record(t, z, u.exterior, k)
        if w_rec is not None:
            w_rec.record(t, states[0] - states[1], w_ext, k)

    t = t0
    k = 0
    record_all(t, k)
    dt = cfg.dt_init
    warn_msgs: list[str] = []
    nonconv = 0
    extinct_at = None
    tiny = 1e-12 * max(1.0, abs(cfg.t_end))
    while t < cfg.t_end - tiny:
        if cfg.scheme == "minimizing_movement":
            dt = max(cfg.dt_init, cfg.dt_control * t)
        dt = min(dt, cfg.t_end - t)
        if cfg.scheme == "explicit":
            fv = _source_values(f, t, grid.N)
            for _ in range(60):
                trial = [z - dt * (op.apply(z) - fv) for op, z in zip(ops, states)]
                bound = [(1 + cfg.dt_control) * (linf_norm(z) + dt * linf_norm(fv)) * (1 + 1e-12) + 1e-300
                         for z in states]
                if all(linf_norm(zn) <= b for zn, b in zip(trial, bound)):
                    break
                dt *= 0.5
            else:
                raise FloatingPointError("explicit step keeps growing the solution after 60 halvings")
            states = trial
        else:
            fv = _source_values(f, t + dt, grid.N)
            new = []
            for op, z in zip(ops, states):
                _, res = _prox_step(op, z, dt, fv, cfg.inner_tol, cfg.inner_max_iter)
                if not res.converged:
                    nonconv += 1
                    if len(warn_msgs) < 20:
                        warn_msgs.append(f"inner solve stopped at t={t + dt:.6g} with residual {res.stop_value:.3g}")
                new.append(res.x)
            states = new
        t += dt
        k += 1
        record_all(t, k)
        if extinct_at is None and all(linf_norm(z) < cfg.extinction_threshold for z in states):
            extinct_at = t
            if cfg.stop_at_extinction:
                break
    if nonconv:
        warnings.warn(f"{nonconv} inner solves did not reach inner_tol", ConvergenceWarning, stacklevel=2)
    out = [rec.finish(z, u.exterior, warnings=list(warn_msgs), nonconverged=nonconv, extinction_time=extinct_at)
           for rec, z, u in zip(recs, states, initial)]
    if w_rec is not None:
        out.append(w_rec.finish(states[0] - states[1], w_ext, warnings=list(warn_msgs), nonconverged=nonconv,
                                extinction_time=extinct_at))
    return out


def run(u0: Field, f, cfg: SolverConfig, K: KernelWeights, e: Exponents | None = None, t0: float = 0.0) -> Trajectory:
    """Advance one solution from ``t0`` to ``cfg.t_end``. ``f`` may be a Field, an array, or ``t -> Field``."""
    return run_many([u0], f, cfg, K, e, t0)[0]


def run_pair(u0: Field, v0: Field, f, cfg: SolverConfig, K: KernelWeights, e: Exponents | None = None,
             t0: float = 0.0) -> tuple[Trajectory, Trajectory, Trajectory]:
    """Two solutions sharing ``f``; returns ``(u, v, u - v)`` trajectories."""
    u, v, w = run_many([u0, v0], f, cfg, K, e, t0, with_difference=True)
    return u, v, w


# ---------------------------------------------------------------------------
# stationary profile and example solutions


@dataclass
class EigenResult:
    F: Field
    F_hat: Field
    lambda_h: float
    residual: float
    iterations: int
    converged: bool


def _initial_profile(grid: Grid, s: float) -> np.ndarray:
    xi = (grid.x - grid.center) / (0.5 * grid.length)
    return np.clip(1 - xi**2, 0, None) ** s


def eigenprofile(grid: Grid, K: KernelWeights, e: Exponents | None = None, tol: float = 1e-7,
                 max_iter: int = 20000, init: np.ndarray | None = None) -> EigenResult:
    """Minimizer of the discrete seminorm over unit-L2 fields with zero exterior.

    Projected descent on the sphere: each accepted step is renormalized to
    unit L2_h norm. At the minimizer ``A(F_hat) = lambda_h F_hat`` with
    ``lambda_h = <A(F_hat), F_hat>_h = S(F_hat)``. The returned ``F = c F_hat``
    uses ``c^(p-2) lambda_h = 1`` so that ``A(F) = F``; for p = 2 no such
    rescaling exists and ``F = F_hat``.
    """
    e = e or K.exponents
    op = DiscreteOperator(K, Exterior.zero())
    h, p = grid.h, op.p

    def norm(u):
        return math.sqrt(h) * np.linalg.norm(u)

    cache = {}

    def fun(u):
        A, S = op.evaluate(u)
        n = norm(u)
        Q = S / n**p
        cache["S"], cache["n"] = S, n
        return Q, p * (A - (S / n**2) * u) / n**p

    def stop(u, g, d):
        # relative residual |A(u) - S u|_h / S at unit norm
        return norm(g) * cache["n"] ** p / (p * max(cache["S"], 1e-300))

    u0 = _initial_profile(grid, e.s) if init is None else np.asarray(init, dtype=float)
    u0 = u0 / norm(u0)
    res = minimize(fun, u0, stop, tol, max_iter, init_step=1.0 / max(op.apply(u0).max(), 1e-300),
                   project=lambda u: u / norm(u))
    F_hat = res.x / norm(res.x)
    if F_hat.sum() < 0:
        F_hat = -F_hat
    A = op.apply(F_hat)
    lam = float(h * np.dot(A, F_hat))
    residual = norm(A - lam * F_hat) / lam
    if not res.converged:
        warnings.warn(f"eigenprofile stopped with relative residual {residual:.3g}", ConvergenceWarning, stacklevel=2)
    c = 1.0 if p == 2 else lam ** (-1.0 / (p - 2))
    return EigenResult(Field(grid, c * F_hat, Exterior.zero()), Field(grid, F_hat, Exterior.zero()), lam,
                       float(residual), res.iterations, res.converged)


def separated_amplitude(p: float) -> float:
    """Constant k with U = k t^(-1/(p-2)) F solving U_t + A(U) = 0 when A(F) = F.

    Substituting the ansatz gives k^(p-2) = 1/(p-2).
    """
    return (p - 2) ** (-1.0 / (p - 2))


def separated_solution(F: Field, e: Exponents, t: float) -> Field:
    """Self-similar solution ``((p-2) t)^(-1/(p-2)) F`` for a profile with A(F) = F."""
    e.require_degenerate()
    if not t > 0:
        raise ValueError("t must be positive")
    return F.with_values(separated_amplitude(e.p) * t ** (-1.0 / (e.p - 2)) * F.values)


def default_subsolution_rate(p: float) -> float:
    return 2.0 * lipschitz_constant(p)


def exponential_subsolution(u_star: Field, lam: float, t: float) -> Field:
    """``(1 + exp(-lam t)) u_star``."""
    return u_star.with_values((1.0 + math.exp(-lam * t)) * u_star.values)


def subsolution_residual(u_star: Field, lam: float, t: float, K: KernelWeights) -> np.ndarray:
    """Nodal ``w_t + A(w) - u_star`` for ``w = (1 + exp(-lam t)) u_star``; nonpositive for a subsolution."""
    w = exponential_subsolution(u_star, lam, t)
    op = DiscreteOperator(K, u_star.exterior)
    return -lam * math.exp(-lam * t) * u_star.values + op.apply(w.values) - u_star.values
