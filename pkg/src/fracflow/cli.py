"""Command-line entry point: ``fracflow <subcommand> ...``.

Subcommands write CSV series and a JSON manifest into ``--out`` and exit
with 0 (all verdicts pass), 1 (a verdict failed), 2 (invalid configuration)
or 3 (an inner solve or the profile iteration did not converge).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_EXTINCTION,
    FitError,
    comparison_verdict,
    detect_extinction,
    fit_exponential,
    fit_power,
    norm_series,
    theorem2_constants,
)
from .config import ConfigError, Expression, RunConfig, load_config, parse_exterior
from .flow import ConvergenceWarning, Trajectory, eigenprofile, run, run_pair
from .mesh import Field, build_kernel
from .operators import THREADS_ENV, assemble_matrix, configure_threads
from .pointwise import DISTRIBUTIONS, sweep

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 1, 2, 3
LAW_SERIES = {"power": "linf", "exponential": "l2", "extinction": "linf"}
EIGEN_RESIDUAL_TOL = 1e-3

log = logging.getLogger("fracflow")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_series(path: Path, traj: Trajectory) -> None:
    keys = list(traj.series)
    rows = zip(traj.times, *(traj.series[k] for k in keys))
    write_csv(path, ["t"] + keys, rows)


def write_snapshots(path: Path, trajs: dict[str, Trajectory]) -> None:
    names = list(trajs)
    first = trajs[names[0]]
    rows = []
    for k, (t, fld) in enumerate(first.snapshots):
        cols = [trajs[n].snapshots[k][1].values for n in names]
        rows.extend([t, x, *vals] for x, *vals in zip(fld.grid.x, *cols))
    write_csv(path, ["t", "x"] + names, rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_manifest(path: Path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _derived(cfg: RunConfig) -> dict:
    e = cfg.exponents
    aux = None if e.n > e.sp else (cfg.N_embedding or e.default_aux_dimension())
    return {"sp": e.sp, "p_star": e.p_star, "nu": e.nu(aux), "nu_aux_dimension": aux,
            "singular_threshold": e.singular_threshold}


def _domain(cfg: RunConfig) -> dict:
    g = cfg.grid
    return {"a": g.a, "b": g.b, "N": g.N, "h": g.h, "R": g.R, "truncation_box": list(g.box),
            "exterior": g.exterior.describe()}


def _base_manifest(command: str, cfg: RunConfig | None, threads: int) -> dict:
    m = {"command": command, "version": __version__}
    if cfg is not None:
        m["config_file"] = cfg.path
        m["config"] = cfg.echo()
        m["derived"] = _derived(cfg)
        m["domain"] = _domain(cfg)
    m["threads"] = {"env": THREADS_ENV, "count": threads}
    return m


def _finish(out: Path, manifest: dict, started: float, code: int, files: list[str]) -> int:
    manifest["status"] = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_NONCONVERGED: "nonconverged"}[code]
    manifest["exit_code"] = code
    manifest["files"] = files + ["manifest.json"]
    manifest["wall_clock_seconds"] = time.perf_counter() - started
    write_manifest(out / "manifest.json", manifest)
    print(f"status: {manifest['status']} (exit {code}); outputs in {out}")
    return code


# ---------------------------------------------------------------------------
# shared pieces


def _field(cfg: RunConfig, expr_text: str, exterior=None) -> Field:
    expr = Expression(expr_text)
    return Field(cfg.grid, expr(cfg.grid.x), exterior)


def _source(cfg: RunConfig):
    expr = Expression(cfg.data.f, ("x", "t"))
    x = cfg.grid.x
    if expr.uses("t"):
        return lambda t: expr(x, t)
    values = expr(x)
    return None if not np.any(values) else values


def _reports(cfg: RunConfig, traj: Trajectory) -> list:
    out = []
    for law in cfg.law:
        series = norm_series(traj, LAW_SERIES[law])
        try:
            if law == "power":
                rep = fit_power(series, cfg.fit_window, p=cfg.exponents.p, tolerance=cfg.tolerance)
            elif law == "exponential":
                rep = fit_exponential(series, cfg.fit_window)
            else:
                rep = detect_extinction(series, DEFAULT_EXTINCTION)
            d = rep.to_dict()
            d["series"] = LAW_SERIES[law]
            print(rep.summary())
        except FitError as exc:
            d = {"law": law, "series": LAW_SERIES[law], "verdict": False, "error": str(exc)}
            print(f"{law}: fit rejected: {exc}")
        out.append(d)
    return out


def _run_summary(traj: Trajectory) -> dict:
    return {"steps": len(traj) - 1, "final_time": float(traj.times[-1]), "nonconverged": traj.nonconverged,
            "extinction_time": traj.extinction_time, "warnings": traj.warnings}


def _code(verdicts_ok: bool, nonconverged: int) -> int:
    if nonconverged:
        return EXIT_NONCONVERGED
    return EXIT_PASS if verdicts_ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: RunConfig, out: Path, threads: int) -> int:
    started = time.perf_counter()
    manifest = _base_manifest("simulate", cfg, threads)
    K = build_kernel(cfg.grid, cfg.exponents)
    u0 = _field(cfg, cfg.data.u0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        traj = run(u0, _source(cfg), cfg.solver, K, cfg.exponents)
    files = ["series.csv"]
    write_series(out / "series.csv", traj)
    if cfg.data.snapshots:
        write_snapshots(out / "snapshots.csv", {"u": traj})
        files.append("snapshots.csv")
    manifest["run"] = _run_summary(traj)
    manifest["verdicts"] = _reports(cfg, traj)
    ok = all(v["verdict"] for v in manifest["verdicts"])
    return _finish(out, manifest, started, _code(ok, traj.nonconverged), files)


def cmd_compare(cfg: RunConfig, out: Path, threads: int) -> int:
    started = time.perf_counter()
    if cfg.data.v0 is None:
        raise ConfigError("[data] v0: compare needs the second initial datum")
    manifest = _base_manifest("compare", cfg, threads)
    K = build_kernel(cfg.grid, cfg.exponents)
    u0 = _field(cfg, cfg.data.u0)
    ext_v = parse_exterior(cfg.data.exterior_v) if cfg.data.exterior_v else None
    v0 = _field(cfg, cfg.data.v0, ext_v)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        tu, tv, tw = run_pair(u0, v0, _source(cfg), cfg.solver, K, cfg.exponents)
    files = ["difference.csv", "series_u.csv", "series_v.csv"]
    write_series(out / "difference.csv", tw)
    write_series(out / "series_u.csv", tu)
    write_series(out / "series_v.csv", tv)
    if cfg.data.snapshots:
        write_snapshots(out / "snapshots.csv", {"u": tu, "v": tv})
        files.append("snapshots.csv")
    manifest["run"] = _run_summary(tw)
    manifest["verdicts"] = _reports(cfg, tw)
    ok = all(v["verdict"] for v in manifest["verdicts"])
    if cfg.data.order == "v<=u":
        rep = comparison_verdict(tu, tv, 1e-8)
        manifest["comparison"] = rep.to_dict()
        print(f"comparison v <= u: {'pass' if rep.holds else 'fail'} (max excess {rep.max_violation:.3g})")
        ok = ok and rep.holds
    if cfg.exponents.is_singular:
        tau = cfg.fit_window[0] if cfg.fit_window else 0.0
        c = theorem2_constants(tu, tv, cfg.exponents, tau, cfg.N_embedding)
        manifest["derived"]["L"] = c.L
        manifest["derived"]["L_tau"] = c.tau
        manifest["derived"]["L_degenerate"] = c.degenerate
    return _finish(out, manifest, started, _code(ok, tw.nonconverged), files)


def cmd_eigenprofile(cfg: RunConfig, out: Path, threads: int) -> int:
    started = time.perf_counter()
    if cfg.grid.exterior.kind != "zero":
        raise ConfigError("[grid] exterior: the eigenprofile needs zero exterior data")
    manifest = _base_manifest("eigenprofile", cfg, threads)
    K = build_kernel(cfg.grid, cfg.exponents)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        res = eigenprofile(cfg.grid, K, cfg.exponents)
    write_csv(out / "profile.csv", ["x", "F_hat", "F"], zip(cfg.grid.x, res.F_hat.values, res.F.values))
    report = {"lambda_h": res.lambda_h, "residual": res.residual, "iterations": res.iterations,
              "converged": res.converged, "residual_tolerance": EIGEN_RESIDUAL_TOL,
              "verdict": bool(res.residual < EIGEN_RESIDUAL_TOL)}
    if cfg.exponents.p == 2:
        w, V = np.linalg.eigh(assemble_matrix(K))
        ref = V[:, 0] / (math.sqrt(cfg.grid.h) * np.linalg.norm(V[:, 0]))
        ref = ref if ref.sum() > 0 else -ref
        report["dense_lambda"] = float(w[0])
        report["dense_profile_error_l2"] = float(math.sqrt(cfg.grid.h) * np.linalg.norm(ref - res.F_hat.values))
    manifest["eigenprofile"] = report
    print(f"lambda_h={res.lambda_h:.12g} residual={res.residual:.3g} iterations={res.iterations}")
    code = EXIT_NONCONVERGED if not res.converged else (EXIT_PASS if report["verdict"] else EXIT_FAIL)
    return _finish(out, manifest, started, code, ["profile.csv"])


def cmd_verify_inequalities(seed: int, count: int, regimes, corrupt: bool, out: Path, threads: int,
                            cfg: RunConfig | None = None) -> int:
    started = time.perf_counter()
    manifest = _base_manifest("verify-inequalities", cfg, threads)
    manifest["sweep"] = {"seed": seed, "count": count, "regimes": list(regimes), "corrupt": corrupt,
                         "distributions": list(DISTRIBUTIONS), "rtol": 1e-12}
    rows = sweep(seed, count, tuple(regimes), corrupt)
    header = ["inequality", "p", "param", "M", "distribution", "count", "violations", "min_gap", "min_rel_gap"]
    write_csv(out / "inequalities.csv", header,
              ([r.inequality, r.p, r.param, r.M, r.distribution, r.count, r.violations, r.min_gap, r.min_rel_gap]
               for r in rows))
    table = {}
    for r in rows:
        t = table.setdefault(r.inequality, {"cases": 0, "tuples": 0, "violations": 0, "min_gap": math.inf})
        t["cases"] += 1
        t["tuples"] += r.count
        t["violations"] += r.violations
        t["min_gap"] = min(t["min_gap"], r.min_gap)
    print(f"{'inequality':<22}{'tuples':>10}{'violations':>12}{'min gap':>14}")
    for name, t in table.items():
        print(f"{name:<22}{t['tuples']:>10}{t['violations']:>12}{t['min_gap']:>14.4g}")
    manifest["verdicts"] = [{"inequality": k, **v, "verdict": v["violations"] == 0} for k, v in table.items()]
    ok = all(v["violations"] == 0 for v in table.values())
    return _finish(out, manifest, started, EXIT_PASS if ok else EXIT_FAIL, ["inequalities.csv"])


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fracflow {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "run one solution and fit its decay"),
                        ("compare", "run two solutions with a shared source; fit their difference"),
                        ("eigenprofile", "compute the stationary profile and its residual")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="experiment config file")
        p.add_argument("--out", default=None, help="output directory (default: <config stem>_out)")
    p = sub.add_parser("verify-inequalities", help="randomized sweep of the pointwise inequalities")
    p.add_argument("--config", default=None, help="optional config; its [run] seed is the default seed")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--count", type=int, default=100_000, help="tuples per inequality, parameter set and distribution")
    p.add_argument("--regimes", default="degenerate,singular")
    p.add_argument("--corrupt", action="store_true", help="inflate the constants to self-test the harness")
    p.add_argument("--out", default="inequalities_out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        threads = configure_threads()
    except ValueError:
        print(f"config error: {THREADS_ENV} must be an integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = None
        if args.command == "verify-inequalities":
            if args.config:
                cfg = load_config(args.config)
            seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
            if args.count < 1:
                raise ConfigError(f"--count must be at least 1, got {args.count}")
            regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
            bad = set(regimes) - {"degenerate", "singular"}
            if bad or not regimes:
                raise ConfigError(f"--regimes: choose from degenerate, singular; got {args.regimes!r}")
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            return cmd_verify_inequalities(seed, args.count, regimes, args.corrupt, out, threads, cfg)
        cfg = load_config(args.config)
        out = Path(args.out) if args.out else Path(args.config).with_suffix("").with_name(
            Path(args.config).stem + "_out")
        out.mkdir(parents=True, exist_ok=True)
        handler = {"simulate": cmd_simulate, "compare": cmd_compare, "eigenprofile": cmd_eigenprofile}
        return handler[args.command](cfg, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
