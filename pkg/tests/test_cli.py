import csv

import numpy as np
import pytest

from rstshell import acceptance
from rstshell.acceptance import CriterionResult
from rstshell.bench1d import cst_case1_closed_form
from rstshell.cli import load_config, main
from rstshell.errors import ConfigError, ValidationError
from rstshell.shell2d import CylinderProblem
from rstshell.studies import convergence_ladder, theory_section

BASE = """
[study]
theory = {theory}
theories = {theories}

[geometry]
R = {R}
case = {case}

[material]
nu = 0.3

[load]
p = 1.0

[discretization]
element = {element}
n2 = {n2}
levels = {levels}
ring_n_theta = 32
samples = 41
"""


def write_config(tmp_path, name="cfg.ini", **kw):
    values = dict(theory="rst2d", theories="", R=10.0, case=1, element="q9", n2=8, levels=3)
    values.update(kw)
    path = tmp_path / name
    path.write_text(BASE.format(**values))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], float)


def test_load_config(tmp_path):
    cfg = load_config(write_config(tmp_path, case=2, theories="rst2d, ring2d"))
    assert cfg["geometry"]["R"] == 10.0 and cfg["geometry"]["case"] == 2
    assert cfg["study"]["theories"] == ["rst2d", "ring2d"]
    assert cfg["discretization"]["n2"] == 8 and cfg["discretization"]["bvp_points"] == 2048


def test_physical_inputs_are_rescaled(tmp_path):
    path = tmp_path / "phys.ini"
    path.write_text("[geometry]\nR_phys = 2.0\nL_phys = 1.0\nh = 0.2\ncase = 1\n[material]\nnu = 0.3\n"
                    "[load]\np_phys = 50.0\nmu = 10.0\n")
    cfg = load_config(path)
    assert cfg["geometry"]["R"] == pytest.approx(10.0)
    assert cfg["geometry"]["L"] == pytest.approx(5.0)
    assert cfg["load"]["p"] == pytest.approx(1.0)


def test_bad_configs(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[geometry]\ncase = 1\n[material]\nnu = 0.3\n[load]\np = 1\n")
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "geometry.R missing" in capsys.readouterr().err
    path.write_text("[geometry]\nR = abc\n[material]\nnu = 0.3\n[load]\np = 1\n")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_run_case1(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path)), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    u_max = float(text.split("u_max = ")[1].split()[0])
    assert u_max == pytest.approx(34.0, abs=1e-6)
    header, data = read_csv(out / "rst2d_section.csv")
    assert header[0] == "x2 [rescaled]"
    assert (out / "rst2d_section.png").stat().st_size > 0


def test_run_cst_case1_matches_closed_form(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path, theory="cst1d")), "--out", str(out)]) == 0
    header, data = read_csv(out / "cst1d_section.csv")
    x2 = data[:, header.index("x2 [rescaled]")]
    u, u2 = cst_case1_closed_form(10.0, 0.3, 1.0, x2)
    assert np.allclose(data[:, header.index("u [rescaled]")], u, rtol=1e-14)
    assert np.allclose(data[:, header.index("u2 [rescaled]")], u2, rtol=1e-14, atol=1e-12)


def test_run_rst1d_and_ring(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_config(tmp_path, theory="rst1d", case=2)), "--out", str(out)]) == 0
    assert (out / "rst1d_bvp.csv").exists()
    assert main(["run", "--config", str(write_config(tmp_path, theory="ring2d", case=2)), "--out", str(out)]) == 0
    header, _ = read_csv(out / "ring2d_section_theta.csv")
    assert header[0] == "theta [rescaled]"


def test_run_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, case=2)
    for name in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / name), "--threads", "2"]) == 0
    assert (tmp_path / "a" / "rst2d_section.csv").read_bytes() == (tmp_path / "b" / "rst2d_section.csv").read_bytes()


def test_physical_and_rescaled_configs_agree(tmp_path):
    rescaled = write_config(tmp_path, case=2)
    phys = tmp_path / "phys.ini"
    phys.write_text(rescaled.read_text().replace("R = 10.0", "R_phys = 0.5\nL_phys = 0.5\nh = 0.05")
                    .replace("p = 1.0", "p_phys = 200.0\nmu = 10.0"))
    main(["run", "--config", str(rescaled), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(phys), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "rst2d_section.csv").read_bytes() == (tmp_path / "b" / "rst2d_section.csv").read_bytes()


def test_convergence_command(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, case=2, element="q4", n2=16)
    assert main(["convergence", "--config", str(cfg), "--out", str(out)]) == 0
    header, data = read_csv(out / "convergence.csv")
    assert data.shape == (3, 5)
    assert np.all(np.diff(data[:, header.index("l2_error [rescaled]")]) < 0)
    assert (out / "convergence.png").exists()
    assert main(["convergence", "--config", str(write_config(tmp_path, levels=1)), "--out", str(out)]) == 2


def test_convergence_ladder_requires_three_levels():
    with pytest.raises(ValidationError):
        convergence_ladder(CylinderProblem(10.0, 0.3, 1.0, 2, element="q4", n1=1, n2=4), 2)


def test_compare_command(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path, case=2, theories="rst2d, rst1d, cst1d, ring2d", element="nurbs-cubic", n2=64)
    assert main(["compare", "--config", str(cfg), "--out", str(out)]) == 0
    header, data = read_csv(out / "compare.csv")
    a = data[:, header.index("u_rst2d [rescaled]")]
    b = data[:, header.index("u_rst1d [rescaled]")]
    assert np.max(np.abs(a - b)) < 1e-3 * np.max(np.abs(b))
    assert main(["compare", "--config", str(write_config(tmp_path, theories="rst2d")), "--out", str(out)]) == 2
    assert main(["compare", "--config", str(write_config(tmp_path, theories="rst2d, beam")), "--out", str(out)]) == 2


def test_theory_section_unknown():
    cfg = {"geometry": {"R": 10.0, "case": 1, "L": 10.0, "side": "sliding"}, "material": {"nu": 0.3},
           "load": {"p": 1.0}, "discretization": {}}
    with pytest.raises(ValidationError):
        theory_section("plate", cfg, np.zeros(3))


def test_bench_exit_codes(tmp_path, monkeypatch):
    def fake(ok):
        def run_all(numbers=None, threads=1, seed=0, report=print):
            return [CriterionResult(n, "fake", ok, {"x": 1.0}, 0.0, None) for n in numbers or (1,)]
        return run_all

    monkeypatch.setattr(acceptance, "run_all", fake(True))
    assert main(["bench", "--criteria", "1", "--out", str(tmp_path)]) == 0
    monkeypatch.setattr(acceptance, "run_all", fake(False))
    assert main(["bench", "--criteria", "1", "--out", str(tmp_path)]) == 4
    assert (tmp_path / "acceptance.csv").exists()
    monkeypatch.undo()
    assert main(["bench", "--criteria", "42", "--out", str(tmp_path)]) == 2
    assert main(["run", "--config", "x.ini", "--threads", "0", "--out", str(tmp_path)]) == 2
