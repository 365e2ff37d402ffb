"""Preset experiments: the decay, tracking, comparison and cross-validation runs.

Each function builds its own grid and kernel, runs the flow and returns a
small result object; the scripts in ``scripts/`` and the acceptance tests
both call these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    DecayReport,
    ComparisonReport,
    RateConstants,
    comparison_verdict,
    detect_extinction,
    fit_exponential,
    fit_power,
    monotone_violations,
    theorem2_constants,
    linear_fit,
)
from .config import bump
from .flow import (
    EigenResult,
    SolverConfig,
    Trajectory,
    default_subsolution_rate,
    eigenprofile,
    exponential_subsolution,
    run,
    run_pair,
    separated_solution,
)
from .mesh import Field, build_grid, build_kernel
from .pointwise import Exponents

DOMAIN = (-1.0, 1.0)
BOX_RADIUS = 4.0


def setup(p: float, s: float = 0.5, N: int = 256):
    e = Exponents(p, s)
    grid = build_grid(*DOMAIN, N, BOX_RADIUS)
    return e, grid, build_kernel(grid, e)


def monotone_report(traj: Trajectory, keys=("l2", "l4"), rel_slack: float = 1e-9) -> dict[str, int]:
    """Number of steps at which each norm of the difference grows beyond ``rel_slack``."""
    return {k: int(monotone_violations(traj.series[k], rel_slack).size) for k in keys}


@dataclass
class PowerDecay:
    e: Exponents
    u: Trajectory
    v: Trajectory
    w: Trajectory
    report: DecayReport
    monotone: dict
    seconds: float


def power_decay(p: float = 3.0, s: float = 0.5, N: int = 256, t_end: float = 100.0, dt_init: float = 1e-3,
                dt_control: float = 0.02, inner_tol: float = 1e-10, tolerance: float = 0.15) -> PowerDecay:
    """Zero solution against a bump: sup-norm exponent of the difference over the last decade."""
    t0 = time.perf_counter()
    e, grid, K = setup(p, s, N)
    e.require_degenerate()
    cfg = SolverConfig(dt_init=dt_init, t_end=t_end, dt_control=dt_control, inner_tol=inner_tol,
                       record_every=10**9)
    u, v, w = run_pair(Field.zeros(grid), Field.from_function(grid, bump), None, cfg, K, e)
    rep = fit_power((w.times, w.series["linf"]), p=p, tolerance=tolerance)
    return PowerDecay(e, u, v, w, rep, monotone_report(w), time.perf_counter() - t0)


@dataclass
class Extinction:
    e: Exponents
    u: Trajectory
    v: Trajectory
    w: Trajectory
    exponential: DecayReport
    extinction: DecayReport
    full_window_r2: float
    constants: RateConstants
    monotone: dict
    seconds: float


def extinction(p: float = 1.5, s: float = 0.5, N: int = 256, t_end: float = 1.0, dt_init: float = 1e-3,
               inner_tol: float = 1e-9, threshold: float = 1e-8) -> Extinction:
    """Zero solution against a bump in the singular regime.

    Fits the L2 norm of the difference exponentially over the default window
    (first half of the lifetime) and records the R^2 over the whole
    pre-extinction range as well.
    """
    t0 = time.perf_counter()
    e, grid, K = setup(p, s, N)
    e.require_singular()
    cfg = SolverConfig(dt_init=dt_init, t_end=t_end, inner_tol=inner_tol, record_every=10**9)
    u, v, w = run_pair(Field.zeros(grid), Field.from_function(grid, bump), None, cfg, K, e)
    l2 = (w.times, w.series["l2"])
    exp_rep = fit_exponential(l2)
    ext = detect_extinction((w.times, w.series["linf"]), threshold)
    # log-linearity over everything before extinction, for the record
    alive = w.series["l2"] > threshold
    _, _, _, r2_full = linear_fit(w.times[alive], np.log(w.series["l2"][alive]))
    consts = theorem2_constants(u, v, e, tau=0.0)
    return Extinction(e, u, v, w, exp_rep, ext, r2_full, consts, monotone_report(w), time.perf_counter() - t0)


@dataclass
class SelfSimilar:
    e: Exponents
    profile: EigenResult
    trajectory: Trajectory
    times: np.ndarray
    deviation: np.ndarray
    seconds: float

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())


def self_similar(p: float = 3.0, s: float = 0.5, N: int = 256, t0: float = 1.0, t_end: float = 10.0,
                 dt_init: float = 1e-3, dt_control: float = 0.01, inner_tol: float = 1e-10) -> SelfSimilar:
    """Start the flow at the separated solution U(., t0); return |v - U|_inf / |U|_inf over time."""
    started = time.perf_counter()
    e, grid, K = setup(p, s, N)
    prof = eigenprofile(grid, K, e)
    cfg = SolverConfig(dt_init=dt_init, t_end=t_end, dt_control=dt_control, inner_tol=inner_tol)
    traj = run(separated_solution(prof.F, e, t0), None, cfg, K, e, t0=t0)
    dev = []
    for t, fld in traj.snapshots:
        U = separated_solution(prof.F, e, t).values
        dev.append(np.abs(fld.values - U).max() / np.abs(U).max())
    times = np.array([t for t, _ in traj.snapshots])
    return SelfSimilar(e, prof, traj, times, np.array(dev), time.perf_counter() - started)


@dataclass
class SubsolutionWitness:
    e: Exponents
    lam: float
    profile: EigenResult
    trajectory: Trajectory
    comparison: ComparisonReport
    window: tuple[float, float]
    min_ratio: float
    seconds: float


def subsolution_witness(p: float = 1.5, s: float = 0.5, N: int = 256, t_end: float = 5.0, dt_init: float = 5e-3,
                        dt_control: float = 0.02, inner_tol: float = 1e-9, slack: float = 1e-6,
                        lam: float | None = None) -> SubsolutionWitness:
    """Solution from 2 u* with source u* against the subsolution (1 + e^(-lam t)) u*.

    ``u*`` is the profile with A(u*) = u*. Returns the ordering verdict and
    the smallest value of |v - u*|_inf / (e^(-lam t) |u*|_inf) over the run.
    """
    started = time.perf_counter()
    e, grid, K = setup(p, s, N)
    prof = eigenprofile(grid, K, e)
    us = prof.F
    lam = default_subsolution_rate(p) if lam is None else lam
    cfg = SolverConfig(dt_init=dt_init, t_end=t_end, dt_control=dt_control, inner_tol=inner_tol)
    traj = run(us.with_values(2 * us.values), us, cfg, K, e)
    lower = [(t, exponential_subsolution(us, lam, t)) for t, _ in traj.snapshots]
    rep = comparison_verdict(traj, lower, slack)
    peak = np.abs(us.values).max()
    ratios = [np.abs(f.values - us.values).max() / (math.exp(-lam * t) * peak) for t, f in traj.snapshots]
    return SubsolutionWitness(e, lam, prof, traj, rep, (float(traj.times[0]), float(traj.times[-1])),
                              float(min(ratios)), time.perf_counter() - started)


@dataclass
class CrossValidation:
    p: float
    dts: list[float]
    errors: list[float]
    ratios: list[float] = field(default_factory=list)


def cross_validation(p: float, s: float = 0.5, N: int = 32, t_end: float = 0.02,
                     dts=(2e-4, 1e-4, 5e-5), inner_tol: float = 1e-12) -> CrossValidation:
    """Sup-norm gap between explicit and implicit solutions at ``t_end`` for a sequence of steps."""
    e, grid, K = setup(p, s, N)
    u0 = Field.from_function(grid, bump)
    errs = []
    for dt in dts:
        a = run(u0, None, SolverConfig("explicit", dt_init=dt, t_end=t_end), K, e).final.values
        b = run(u0, None, SolverConfig("minimizing_movement", dt_init=dt, t_end=t_end, inner_tol=inner_tol),
                K, e).final.values
        errs.append(float(np.abs(a - b).max()))
    return CrossValidation(p, list(dts), errs, [errs[i] / errs[i + 1] for i in range(len(errs) - 1)])
