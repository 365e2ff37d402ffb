import csv
import json
import textwrap

import numpy as np
import pytest

from fracflow.cli import main
from fracflow.config import ConfigError, Expression, load_config, parse_config, parse_exterior
from fracflow.mesh import Exterior

BASE = """
[exponents]
p = {p}
s = 0.5

[grid]
a = -1
b = 1
N = {N}
R = 4
exterior = zero

[solver]
dt_init = {dt}
t_end = {t_end}
{solver}

[run]
law = {law}

[data]
{data}
"""


def cfg_text(p=3, N=16, dt=0.01, t_end=0.05, solver="", law="none", data="u0 = 0"):
    return BASE.format(p=p, N=N, dt=dt, t_end=t_end, solver=solver, law=law, data=data)


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


def manifest(out):
    return json.loads((out / "manifest.json").read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# config parsing


def test_parse_defaults():
    cfg = parse_config(cfg_text())
    assert cfg.exponents.p == 3 and cfg.exponents.n == 1
    assert cfg.grid.N == 16 and cfg.grid.exterior == Exterior.zero()
    assert cfg.solver.scheme == "minimizing_movement"
    assert cfg.law == () and cfg.fit_window is None and cfg.tolerance == 0.15
    assert cfg.data.u0 == "0" and cfg.data.f == "0" and cfg.data.snapshots
    echo = cfg.echo()
    assert set(echo) >= {"exponents", "grid", "solver", "run", "data"}


def test_parse_laws_and_window():
    cfg = parse_config(cfg_text(p=1.5, law="exponential, extinction").replace("[run]", "[run]\nfit_window = 0.1, 0.5"))
    assert cfg.law == ("exponential", "extinction")
    assert cfg.fit_window == (0.1, 0.5)


@pytest.mark.parametrize("text,where", [
    (cfg_text().replace("N = 16", "N = 2"), "[grid]"),
    (cfg_text().replace("N = 16", "N = many"), "[grid] N"),
    (cfg_text().replace("p = 3", "p = 1"), "[exponents]"),
    (cfg_text(solver="scheme = rk4"), "[solver] scheme"),
    (cfg_text(solver="dt_init = -1").replace("dt_init = 0.01\n", ""), "[solver]"),
    (cfg_text(solver="colour = red"), "[solver] colour"),
    (cfg_text() + "\n[extra]\nk = 1\n", "[extra]"),
    (cfg_text(law="power").replace("p = 3", "p = 1.5"), "[run] law"),
    (cfg_text(law="exponential").replace("p = 3", "p = 2.5"), "[run] law"),
    (cfg_text(law="sideways"), "[run] law"),
    (cfg_text(data="u0 = __import__('os')"), "[data]"),
    (cfg_text(data="u0 = x.real"), "[data]"),
    (cfg_text(data="u0 = bump(x)\norder = u<=v"), "[data]"),
    (cfg_text().replace("exterior = zero", "exterior = constant()"), "[grid] exterior"),
    (cfg_text().replace("[grid]", "[grid]\nR = 8\n"), "malformed"),
    (cfg_text().replace("s = 0.5", ""), "[exponents] s"),
])
def test_field_level_errors(text, where):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert where in str(exc.value)


def test_aux_dimension_check():
    text = cfg_text(p=1.2).replace("s = 0.5", "s = 0.9").replace("[run]", "[run]\nN_embedding = 3")
    with pytest.raises(ConfigError, match=r"\[run\] N_embedding"):
        parse_config(text)
    assert parse_config(text.replace("N_embedding = 3", "N_embedding = 2")).N_embedding == 2


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.ini")


def test_expressions():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(Expression("2*x + 1")(x), 2 * x + 1)
    assert np.allclose(Expression("sin(pi*x)**2")(x), np.sin(np.pi * x) ** 2)
    assert Expression("3")(x).shape == x.shape
    f = Expression("x*t", ("x", "t"))
    assert f.uses("t") and np.allclose(f(x, 2.0), 2 * x)
    for bad in ("os.system('ls')", "[1, 2]", "lambda: 0", "'text'", "y + 1"):
        with pytest.raises(ValueError):
            Expression(bad)


def test_parse_exterior():
    assert parse_exterior("zero") == Exterior.zero()
    assert parse_exterior("constant(0.25)") == Exterior.constant(0.25)
    ext = parse_exterior("sampled(x**2)")
    assert ext.kind == "sampled" and np.allclose(ext(np.array([2.0, 3.0])), [4, 9])
    with pytest.raises(ValueError):
        parse_exterior("periodic")


# ---------------------------------------------------------------------------
# CLI


def test_zero_data_run(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", write(tmp_path, cfg_text()), "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(open(out / "series.csv", encoding="utf-8")))
    assert rows[0] == ["t", "linf", "l2", "l4", "seminorm"]
    assert all(float(v) == 0 for r in rows[1:] for v in r[1:])
    m = manifest(out)
    assert m["status"] == "pass" and m["exit_code"] == 0
    for key in ("command", "version", "config_file", "config", "derived", "domain", "threads", "run",
                "verdicts", "files", "wall_clock_seconds"):
        assert key in m
    assert m["domain"]["truncation_box"] == [-4.0, 4.0]
    assert m["files"] == ["series.csv", "snapshots.csv", "manifest.json"]


def test_default_output_directory(tmp_path):
    path = write(tmp_path, cfg_text(), "zero.ini")
    assert main(["simulate", path]) == 0
    assert (tmp_path / "zero_out" / "manifest.json").exists()


def test_csv_format(tmp_path):
    out = tmp_path / "out"
    main(["simulate", write(tmp_path, cfg_text(data="u0 = bump(x) / 3")), "--out", str(out)])
    raw = (out / "series.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    rows = list(csv.reader(raw.decode().splitlines()))
    v = rows[2][1]
    assert float(v) != 0 and f"{float(v):.17g}" == v
    snap = list(csv.reader(open(out / "snapshots.csv", encoding="utf-8")))
    assert snap[0] == ["t", "x", "u"] and len(snap) == 1 + 16 * 6


def test_exit_config_error(tmp_path, capsys):
    assert main(["simulate", write(tmp_path, cfg_text().replace("N = 16", "N = 2"))]) == 2
    assert "[grid]" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.ini")]) == 2
    assert main(["compare", write(tmp_path, cfg_text())]) == 2           # no v0
    assert main(["eigenprofile", write(tmp_path, cfg_text().replace("exterior = zero", "exterior = constant(1)"))]) == 2


def test_exit_fail_on_comparison(tmp_path):
    out = tmp_path / "out"
    text = cfg_text(data="u0 = bump(x)\nv0 = bump(x) + 0.5\norder = v<=u")
    assert main(["compare", write(tmp_path, text), "--out", str(out)]) == 1
    m = manifest(out)
    assert m["status"] == "fail" and not m["comparison"]["holds"]
    assert m["files"][:3] == ["difference.csv", "series_u.csv", "series_v.csv"]
    ok = cfg_text(data="u0 = bump(x)\nv0 = bump(x) - 0.5\norder = v<=u")
    assert main(["compare", write(tmp_path, ok), "--out", str(out)]) == 0


def test_exit_nonconverged_takes_precedence(tmp_path):
    out = tmp_path / "out"
    text = cfg_text(solver="inner_max_iter = 1\ninner_tol = 1e-14",
                    data="u0 = bump(x)\nv0 = bump(x) + 0.5\norder = v<=u")
    assert main(["compare", write(tmp_path, text), "--out", str(out)]) == 3
    m = manifest(out)
    assert m["status"] == "nonconverged" and m["run"]["nonconverged"] > 0


def test_compare_singular_reports_rate_constants(tmp_path):
    out = tmp_path / "out"
    text = cfg_text(p=1.5, solver="inner_tol = 1e-9", data="u0 = bump(x)\nv0 = 0")
    assert main(["compare", write(tmp_path, text), "--out", str(out)]) == 0
    d = manifest(out)["derived"]
    assert d["nu"] == pytest.approx(1.0) and d["L"] > 0 and d["p_star"] == pytest.approx(6.0)


def test_eigenprofile_command(tmp_path):
    out = tmp_path / "out"
    assert main(["eigenprofile", write(tmp_path, cfg_text(p=2, N=64)), "--out", str(out)]) == 0
    rep = manifest(out)["eigenprofile"]
    assert rep["dense_profile_error_l2"] < 1e-6
    assert rep["lambda_h"] == pytest.approx(rep["dense_lambda"], rel=1e-10)
    prof = np.loadtxt(out / "profile.csv", delimiter=",", skiprows=1)
    assert prof.shape == (64, 3) and np.all(prof[:, 1] > 0)


def test_verify_inequalities(tmp_path, capsys):
    out = tmp_path / "ineq"
    assert main(["verify-inequalities", "--count", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "inequalities.csv", encoding="utf-8")))
    assert rows and all(r["violations"] == "0" and float(r["min_gap"]) == 0 for r in rows)
    assert "violations" in capsys.readouterr().out
    assert main(["verify-inequalities", "--count", "300", "--corrupt", "--out", str(out)]) == 1
    assert main(["verify-inequalities", "--regimes", "sideways", "--out", str(out)]) == 2
    assert main(["verify-inequalities", "--count", "0", "--out", str(out)]) == 2


def test_thread_variable(tmp_path, monkeypatch):
    out = tmp_path / "out"
    path = write(tmp_path, cfg_text())
    monkeypatch.setenv("FRACFLOW_NUM_THREADS", "1")
    assert main(["simulate", path, "--out", str(out)]) == 0
    m = manifest(out)
    assert m["threads"] == {"env": "FRACFLOW_NUM_THREADS", "count": 1}
    monkeypatch.setenv("FRACFLOW_NUM_THREADS", "lots")
    assert main(["simulate", path, "--out", str(out)]) == 2
    monkeypatch.delenv("FRACFLOW_NUM_THREADS")
    main(["simulate", path, "--out", str(out)])


def test_preset_configs_parse():
    from pathlib import Path

    presets = sorted((Path(__file__).parent.parent / "scripts" / "configs").glob("*.ini"))
    assert len(presets) >= 4
    for path in presets:
        cfg = load_config(path)
        assert cfg.grid.N == 256
