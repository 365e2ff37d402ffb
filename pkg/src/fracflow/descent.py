"""Gradient-only descent with backtracking line search.

Directions come from the limited-memory two-loop recursion, so only gradient
evaluations are needed; no derivative of J_p is ever formed. That matters
here because J_p' vanishes (p > 2) or blows up (p < 2) at zero differences.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class DescentResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    iterations: int
    converged: bool
    stop_value: float


def _two_loop(g, pairs, gamma):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    r = gamma * q
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, r)
        r += (a - b) * s
    return -r


def minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    stop: Callable[[np.ndarray, np.ndarray, np.ndarray], float],
    tol: float,
    max_iter: int,
    init_step: float = 1.0,
    memory: int = 10,
    convex: bool = False,
    c1: float = 1e-4,
    max_backtracks: int = 60,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
) -> DescentResult:
    """Minimize ``fun`` from ``x0`` until ``stop(x, g, d) < tol`` or ``max_iter``.

    ``d`` is the search direction about to be used; before any curvature
    pairs are stored it is ``-init_step * g``.

    With ``convex=True`` the sufficient-decrease test is evaluated through
    the directional derivative: for a convex function,
    ``g(x + a d) . d <= c1 g(x) . d`` implies the Armijo condition, and it
    stays reliable when function differences sink below rounding error.
    Otherwise the usual value-based Armijo test is used. ``project`` is
    applied to every accepted iterate (e.g. renormalization).
    """
    x = np.array(x0, dtype=float)
    fx, g = fun(x)
    pairs: deque = deque(maxlen=memory)
    gamma = init_step
    it = 0
    stalled = 0
    best = math.inf
    decreased = True
    while True:
        d = _two_loop(g, pairs, gamma) if pairs else -init_step * g
        slope = float(np.dot(g, d))
        if not slope < 0:
            pairs.clear()
            d = -init_step * g
            slope = float(np.dot(g, d))
        crit = stop(x, g, d)
        if crit < tol or it >= max_iter or not slope < 0:
            break
        # neither the value nor the stopping measure moves: rounding floor
        if crit < 0.999 * best:
            best, stalled = crit, 0
        elif not decreased:
            stalled += 1
            if stalled >= 50:
                break
        it += 1
        alpha = 1.0
        accepted = False
        for _ in range(max_backtracks):
            xn = x + alpha * d
            fn, gn = fun(xn)
            if convex:
                ok = np.dot(gn, d) <= c1 * slope and fn <= fx + 1e-14 * abs(fx)
            else:
                ok = fn <= fx + c1 * alpha * slope
            if ok:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # a failed steepest-descent search means we are at rounding level
            if not pairs:
                break
            pairs.clear()
            continue
        if project is not None:
            xn = project(xn)
            fn, gn = fun(xn)
        s = xn - x
        y = gn - g
        sy = float(np.dot(s, y))
        if sy > 0:
            pairs.append((s, y, 1.0 / sy))
            gamma = sy / float(np.dot(y, y))
        decreased = fx - fn > 1e-15 * abs(fx)
        x, fx, g = xn, fn, gn
    return DescentResult(x, fx, g, it, bool(crit < tol), float(crit))
