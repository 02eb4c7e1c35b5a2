import subprocess
import sys
from fractions import Fraction as F

import pytest

from fbplab.cli import (
    ConfigError,
    Cell,
    compute_tables,
    convergence_rows,
    main,
    parse_config,
    stability_rows,
)
from fbplab.fbp_solver import RunConfig
from fbplab.interface_model import format_matrix_text
from fbplab.porous_case import build_porous_system


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_defaults():
    cfg = parse_config("")
    assert cfg.builtin and cfg.q is None and cfg.mode.dimension == 2
    assert cfg.run.N == 10 and cfg.run.residual_choice == "dirichlet"


def test_parse_full_config(tmp_path):
    cfg = parse_config(
        """
[system]
matrix = porous
K_plus = 3/2
K_minus = 1/3
[analysis]
mode = 3d
q = 1, -1/2, 11
velocities = e1; e5; 1,0,0,0,1
[solver]
N = 12
dt = 0.1
residual_choice = neumann
stop_tolerance = 1e-9
[output]
directory = out
formats = csv
""",
        tmp_path,
    )
    assert cfg.params.K_plus == F(3, 2) and cfg.params.K_minus == F(1, 3)
    assert cfg.q == (1, F(-1, 2), 11)
    assert [v.label for v in cfg.velocities] == ["e1", "e5", "(1,0,0,0,1)"]
    assert cfg.mode.dimension == 3
    assert (cfg.run.N, cfg.run.dt, cfg.run.residual_choice) == (12, 0.1, "neumann")
    assert cfg.out_dir == tmp_path / "out" and cfg.formats == ("csv",)


@pytest.mark.parametrize(
    "text",
    [
        "[system]\nbogus = 1\n",
        "[nosuch]\nx = 1\n",
        "[analysis]\nq = 1, 2\n",
        "[analysis]\nmode = 4d\n",
        "[analysis]\nvelocities = e9\n",
        "[system]\nK_plus = 0.5x\n",
        "[solver]\ndt = -1\n",
        "[output]\nformats = pdf\n",
        "not an ini file",
    ],
)
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_analyze_builtin(capsys, tmp_path):
    code = main(["analyze", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "class: C~" in out
    assert "well-posedness form: -4*s" in out
    assert "best velocity: e1, lambda(s) = -2" in out
    assert (tmp_path / "analysis.txt").exists()
    assert (tmp_path / "ranking.csv").read_text().splitlines()[1].startswith("e1,stable-bounded")


def test_analyze_ill_posed(tmp_path, capsys):
    cfg = write(tmp_path, "q3.ini", "[analysis]\nq = 0, 0, 1\n")
    assert main(["analyze", "--config", str(cfg)]) == 2


def test_analyze_no_stable_velocity(tmp_path, capsys):
    # e4 alone is unstable for the flat state
    cfg = write(tmp_path, "e4.ini", "[analysis]\nvelocities = e4\n")
    assert main(["analyze", "--config", str(cfg)]) == 3


def test_analyze_all_degenerate(tmp_path, capsys):
    cfg = write(tmp_path, "deg.ini", "[analysis]\nvelocities = 0,0,0,1,1\n")
    assert main(["analyze", "--config", str(cfg)]) == 3


def test_analyze_matrix_file(tmp_path, capsys):
    write(tmp_path, "g.txt", format_matrix_text(build_porous_system()))
    cfg = write(tmp_path, "m.ini", "[system]\nmatrix = g.txt\n[analysis]\nq = 1, 1, 0\n")
    assert main(["analyze", "--config", str(cfg)]) == 0
    assert "class: C~" in capsys.readouterr().out


def test_analyze_matrix_file_needs_explicit_q(tmp_path, capsys):
    write(tmp_path, "g.txt", format_matrix_text(build_porous_system()))
    cfg = write(tmp_path, "m.ini", "[system]\nmatrix = g.txt\n")
    assert main(["analyze", "--config", str(cfg)]) == 1


def test_analyze_malformed_matrix(tmp_path, capsys):
    write(tmp_path, "bad.txt", "1 2 3\n")
    cfg = write(tmp_path, "b.ini", "[system]\nmatrix = bad.txt\n[analysis]\nq = 1,1,1\n")
    assert main(["analyze", "--config", str(cfg)]) == 1
    assert "error" in capsys.readouterr().err


def test_analyze_rank_deficient(tmp_path, capsys):
    write(tmp_path, "z.txt", "\n".join(["0 0 0 0 0 0 0 0"] * 5 + ["0 0 0 0 0"]))
    cfg = write(tmp_path, "z.ini", "[system]\nmatrix = z.txt\n[analysis]\nq = 1,1,1\n")
    assert main(["analyze", "--config", str(cfg)]) == 3


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["analyze", "--config", "/nonexistent/run.ini"]) == 1


def test_solve_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "s.ini", "[solver]\nN = 8\nt_end = 2\n")
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 0
    line = capsys.readouterr().out
    assert line.startswith("N=8 dt=0.2 residual=dirichlet") and "errInf=" in line
    trace = (tmp_path / "o" / "trace.csv").read_text().splitlines()
    assert trace[0] == "step,t,max_residual,err_inf" and len(trace) == 12


def test_solve_csv_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, "s.ini", "[solver]\nN = 8\nt_end = 1\n")
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["solve", "--config", str(cfg), "--out", str(tmp_path / "b")])
    for name in ("trace.csv", "report.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_diverged_exit(tmp_path, capsys):
    cfg = write(tmp_path, "d.ini", "[solver]\nN = 20\ndt = 0.12\nresidual_choice = neumann\n")
    assert main(["solve", "--config", str(cfg)]) == 1
    assert "status=diverged" in capsys.readouterr().out


def test_solve_rejects_matrix_file(tmp_path, capsys):
    write(tmp_path, "g.txt", format_matrix_text(build_porous_system()))
    cfg = write(tmp_path, "m.ini", "[system]\nmatrix = g.txt\n")
    assert main(["solve", "--config", str(cfg)]) == 1


def test_table_rows_formatting():
    cells = [Cell(10, 0.2, "dirichlet", "converged", 4e-3, 1e-2, 3.2e-5),
             Cell(20, 0.2, "dirichlet", "converged", 1e-3, 2.5e-3, 8e-6)]
    rows = convergence_rows(cells)
    assert rows[0] == ["10x10", "0.004", "***", "0.01", "***", "3.20000e-05", "***"]
    assert rows[1][2] == "4.000"
    bad = Cell(20, 0.08, "neumann", "diverged")
    assert stability_rows([bad])[0] == ["20x20", "0.08", "VN", "diverged", "diverged", "diverged", "diverged"]
    assert convergence_rows([cells[0], bad])[1][2] == "***"


def test_tables_quick_small(monkeypatch):
    # shrink the grids so the plumbing is exercised quickly
    import fbplab.cli as cli

    monkeypatch.setattr(cli, "TABLE1", [(10, 0.1, "neumann")])
    monkeypatch.setattr(cli, "TABLE2", [(10, 0.2, "dirichlet")])
    monkeypatch.setattr(cli, "TABLE3", [(10, 0.2, "dirichlet"), (10, 0.5, "neumann")])
    tables = compute_tables(RunConfig(t_end=2.0), quick=True)
    assert tables["table2"][0] is tables["table3"][0]  # shared cell computed once
    assert tables["table3"][1].status in ("diverged", "not-converged", "error")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fbplab", "analyze"], capture_output=True, text=True)
    assert res.returncode == 0 and "class: C~" in res.stdout
