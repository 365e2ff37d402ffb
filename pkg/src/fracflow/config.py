"""Experiment configuration files.

INI-style text with sections ``[exponents]``, ``[grid]``, ``[solver]`` and
``[run]``, plus an optional ``[data]`` section for initial data, source and
the second solution of a comparison run. Example::

    [exponents]
    p = 3
    s = 0.5

    [grid]
    a = -1
    b = 1
    N = 256
    R = 4
    exterior = zero

    [solver]
    scheme = minimizing_movement
    t_end = 100
    dt_control = 0.02

    [run]
    law = power

    [data]
    u0 = bump(x)

Function-valued entries (``u0``, ``v0``, ``f``, ``sampled(...)`` exterior
data) are arithmetic expressions in ``x`` (and ``t`` for ``f``) over a small
whitelist of numpy functions.
"""

from __future__ import annotations

import ast
import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import DEFAULT_POWER_TOL, LAWS
from .flow import SCHEMES, SolverConfig
from .mesh import Exterior, Grid
from .pointwise import Exponents, RegimeError

SECTIONS = {
    "exponents": ("p", "s", "n"),
    "grid": ("a", "b", "N", "R", "exterior"),
    "solver": ("scheme", "dt_init", "t_end", "dt_control", "inner_tol", "inner_max_iter", "record_every"),
    "run": ("law", "fit_window", "tolerance", "seed", "N_embedding"),
    "data": ("u0", "v0", "f", "exterior_v", "order", "snapshots"),
}
REQUIRED = {"exponents": ("p", "s"), "grid": ("a", "b", "N", "R")}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending section and key."""


# ---------------------------------------------------------------------------
# expressions


def bump(x):
    """Smooth bump ``exp(1 - 1/(1 - x^2))`` on (-1, 1), height 1 at 0, zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


_FUNCS = {
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh, "cosh": np.cosh, "sinh": np.sinh,
    "minimum": np.minimum, "maximum": np.maximum, "where": np.where, "clip": np.clip, "sign": np.sign,
    "bump": bump,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power}
_CMPOPS = {ast.Lt: np.less, ast.LtE: np.less_equal, ast.Gt: np.greater, ast.GtE: np.greater_equal}


class Expression:
    """A parsed arithmetic expression in the variables ``x`` and ``t``."""

    def __init__(self, text: str, variables=("x",)):
        self.text = text.strip()
        self.variables = tuple(variables)
        try:
            self.tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None
        self._names = set()
        self._check(self.tree.body)

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ValueError(f"only numeric literals allowed in {self.text!r}")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ValueError(f"unknown name {node.id!r} in {self.text!r}")
            self._names.add(node.id)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand)
        elif isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _CMPOPS:
            self._check(node.left)
            self._check(node.comparators[0])
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS \
                and not node.keywords:
            for a in node.args:
                self._check(a)
        else:
            raise ValueError(f"unsupported construct {type(node).__name__} in {self.text!r}")

    def uses(self, name: str) -> bool:
        return name in self._names

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Compare):
            return _CMPOPS[type(node.ops[0])](self._eval(node.left, env), self._eval(node.comparators[0], env))
        return _FUNCS[node.func.id](*(self._eval(a, env) for a in node.args))

    def __call__(self, x, t: float = 0.0):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = self._eval(self.tree.body, {"x": x, "t": t})
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    def __repr__(self):
        return f"Expression({self.text!r})"


_EXTERIOR = re.compile(r"^\s*(zero|constant|sampled)\s*(?:\((.*)\))?\s*$", re.S)


def parse_exterior(text: str) -> Exterior:
    """``zero``, ``constant(<value>)`` or ``sampled(<expression in x>)``."""
    m = _EXTERIOR.match(text)
    if not m:
        raise ValueError(f"exterior must be zero, constant(<value>) or sampled(<expr>), got {text!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "zero":
        if arg not in (None, ""):
            raise ValueError("zero exterior takes no argument")
        return Exterior.zero()
    if arg is None or not arg.strip():
        raise ValueError(f"{kind} exterior needs an argument")
    if kind == "constant":
        return Exterior.constant(float(arg))
    expr = Expression(arg)
    return Exterior.sampled(lambda x: expr(x))


# ---------------------------------------------------------------------------
# configuration objects


@dataclass
class DataConfig:
    u0: str = "0"
    v0: str | None = None
    f: str = "0"
    exterior_v: str | None = None
    order: str | None = None
    snapshots: bool = True

    def __post_init__(self):
        if self.order not in (None, "v<=u"):
            raise ValueError(f"order must be 'v<=u' when given, got {self.order!r}")

    def source(self):
        """Nodal source: None for zero, else a function of (x, t)."""
        expr = Expression(self.f, ("x", "t"))
        return expr


@dataclass
class RunConfig:
    exponents: Exponents
    grid: Grid
    solver: SolverConfig
    law: tuple[str, ...] = ()
    fit_window: tuple[float, float] | None = None
    tolerance: float = DEFAULT_POWER_TOL
    seed: int = 0
    N_embedding: int | None = None
    data: DataConfig = field(default_factory=DataConfig)
    raw: dict = field(default_factory=dict)
    path: str | None = None

    def check_regimes(self):
        """Reject verdict requests outside the regime of the corresponding decay law."""
        e = self.exponents
        for law in self.law:
            if law == "power":
                e.require_degenerate()
            elif law == "exponential":
                e.require_singular()
            elif law == "extinction" and not e.p < 2:
                raise RegimeError(f"finite-time extinction needs p < 2, got p={e.p}")

    def echo(self) -> dict:
        """Every parameter after defaults, section by section."""
        e, g, s, d = self.exponents, self.grid, self.solver, self.data
        return {
            "exponents": {"p": e.p, "s": e.s, "n": e.n},
            "grid": {"a": g.a, "b": g.b, "N": g.N, "R": g.R, "exterior": self.raw.get("grid", {}).get(
                "exterior", "zero")},
            "solver": {"scheme": s.scheme, "dt_init": s.dt_init, "t_end": s.t_end, "dt_control": s.dt_control,
                       "inner_tol": s.inner_tol, "inner_max_iter": s.inner_max_iter,
                       "record_every": s.record_every},
            "run": {"law": list(self.law), "fit_window": None if self.fit_window is None else list(self.fit_window),
                    "tolerance": self.tolerance, "seed": self.seed, "N_embedding": self.N_embedding},
            "data": {"u0": d.u0, "v0": d.v0, "f": d.f, "exterior_v": d.exterior_v, "order": d.order,
                     "snapshots": d.snapshots},
        }


def _get(raw, section, key, conv, default=None, what="a number"):
    text = raw.get(section, {}).get(key)
    if text is None:
        if default is None and key in REQUIRED.get(section, ()):
            raise ConfigError(f"[{section}] {key}: missing required key")
        return default
    try:
        return conv(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: expected {what}, got {text!r} ({exc})") from None


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _laws(text):
    laws = tuple(w.strip() for w in text.split(",") if w.strip() and w.strip() != "none")
    bad = [w for w in laws if w not in LAWS]
    if bad:
        raise ValueError(f"unknown law(s) {bad}; choose from {LAWS} or none")
    return laws


def _window(text):
    if text.strip().lower() in ("auto", ""):
        return None
    parts = [float(v) for v in text.replace(";", ",").split(",")]
    if len(parts) != 2 or not parts[0] < parts[1]:
        raise ValueError("need 'lo, hi' with lo < hi")
    return parts[0], parts[1]


def _read_raw(text: str) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keys are case sensitive (N vs n)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    raw = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]; expected one of {list(SECTIONS)}")
        for key in cp[sec]:
            if key not in SECTIONS[sec]:
                raise ConfigError(f"[{sec}] {key}: unknown key; allowed: {', '.join(SECTIONS[sec])}")
        raw[sec] = dict(cp[sec])
    for sec in REQUIRED:
        if sec not in raw:
            raise ConfigError(f"missing section [{sec}]")
    return raw


def parse_config(text: str, path: str | None = None) -> RunConfig:
    raw = _read_raw(text)
    try:
        e = Exponents(_get(raw, "exponents", "p", float), _get(raw, "exponents", "s", float),
                      _get(raw, "exponents", "n", _int, 1, "an integer"))
    except RegimeError as exc:
        raise ConfigError(f"[exponents] {exc}") from None
    try:
        ext = parse_exterior(raw["grid"].get("exterior", "zero"))
    except ValueError as exc:
        raise ConfigError(f"[grid] exterior: {exc}") from None
    try:
        grid = Grid(_get(raw, "grid", "a", float), _get(raw, "grid", "b", float),
                    _get(raw, "grid", "N", _int, None, "an integer"), _get(raw, "grid", "R", float), ext)
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    sv = {}
    for key, conv in (("scheme", str), ("dt_init", float), ("t_end", float), ("dt_control", float),
                      ("inner_tol", float), ("inner_max_iter", _int), ("record_every", _int)):
        val = _get(raw, "solver", key, conv)
        if val is not None:
            sv[key] = val.strip() if isinstance(val, str) else val
    if "scheme" in sv and sv["scheme"] not in SCHEMES + ("implicit",):
        raise ConfigError(f"[solver] scheme: must be one of {SCHEMES}, got {sv['scheme']!r}")
    try:
        solver = SolverConfig(**sv)
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None
    dd = {}
    for key in ("u0", "v0", "f", "exterior_v", "order"):
        if key in raw.get("data", {}):
            dd[key] = raw["data"][key].strip()
    snaps = _get(raw, "data", "snapshots", _bool, None, "a boolean")
    if snaps is not None:
        dd["snapshots"] = snaps
    try:
        data = DataConfig(**dd)
        for key in ("u0", "v0"):
            if dd.get(key):
                Expression(dd[key])
        Expression(data.f, ("x", "t"))
        if data.exterior_v:
            parse_exterior(data.exterior_v)
    except ValueError as exc:
        raise ConfigError(f"[data] {exc}") from None
    cfg = RunConfig(
        exponents=e,
        grid=grid,
        solver=solver,
        law=_get(raw, "run", "law", _laws, (), "a law list"),
        fit_window=_get(raw, "run", "fit_window", _window, None, "'lo, hi' or auto"),
        tolerance=_get(raw, "run", "tolerance", float, DEFAULT_POWER_TOL),
        seed=_get(raw, "run", "seed", _int, 0, "an integer"),
        N_embedding=_get(raw, "run", "N_embedding", _int, None, "an integer"),
        data=data,
        raw=raw,
        path=path,
    )
    if not cfg.tolerance > 0:
        raise ConfigError("[run] tolerance: must be positive")
    try:
        cfg.check_regimes()
    except RegimeError as exc:
        raise ConfigError(f"[run] law: {exc}") from None
    if cfg.N_embedding is not None and e.n <= e.sp:
        try:
            e.nu(cfg.N_embedding)
        except RegimeError as exc:
            raise ConfigError(f"[run] N_embedding: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
