import math
import subprocess
import sys

import pytest

from condfrag import __version__
from condfrag.cli import EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, main
from condfrag.fileio import read_record, read_wavefunction

HARMONIC = """\
[grid]
n_points = 512
x_max = 10.0
[condensate]
N = {N}
g = {g}
[trap]
barrier_height = {b}
[groundstate]
mode = {mode}
"""

RELEASED = """\
[grid]
n_points = 1024
x_max = 10.0
[trap]
barrier_height = 20
barrier_width = 0.5
[condensate]
N = 200
g = 0.025
[interference]
mode = {mode}
n_runs = {runs}
M = {M}
write_positions = {pos}
"""


def run_cli(tmp_path, command, text, *extra, name="run"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    return main([command, "--config", str(cfg), "--out", str(out), *extra]), out


def test_noninteracting_harmonic_energy(tmp_path):
    code, out = run_cli(tmp_path, "groundstate", HARMONIC.format(N=10, g=0.0, b=0.0, mode="single"))
    assert code == EXIT_OK
    rec = read_record(out / "report_single.txt")
    assert float(rec["E_per_N"]) == pytest.approx(0.5, abs=1e-6)
    assert rec["converged"] == "true"
    phi = read_wavefunction(out / "phi_single.wf")
    assert phi.grid.n_points == 512
    header, *rows = (out / "energy.csv").read_text().splitlines()[1:]
    assert header.startswith("state,single_particle") and rows[0].startswith("single,")


def test_both_modes_and_hard_wall(tmp_path):
    code, out = run_cli(tmp_path, "groundstate", HARMONIC.format(N=4, g=0.0, b="inf", mode="both"))
    assert code == EXIT_OK
    assert float(read_record(out / "report_single.txt")["E_per_N"]) == pytest.approx(1.5, abs=1e-6)
    assert float(read_record(out / "report_dual.txt")["E_per_N"]) == pytest.approx(1.5, abs=1e-6)
    for name in ("phi_dual_1.wf", "phi_dual_2.wf", "history_dual.csv"):
        assert (out / name).exists()


def test_every_output_has_provenance(tmp_path):
    code, out = run_cli(tmp_path, "groundstate", HARMONIC.format(N=4, g=0.1, b=2.0, mode="both"))
    assert code == EXIT_OK
    for f in out.iterdir():
        lines = f.read_text().splitlines()
        prov = [l for l in lines[:2] if l.startswith("# condfrag ")]
        assert prov and f"# condfrag {__version__} config=" in prov[0], f.name


def test_odd_n_dual_is_a_config_error(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "groundstate", HARMONIC.format(N=7, g=0.1, b=0.0, mode="dual"))
    assert code == EXIT_CONFIG
    assert "even particle number" in capsys.readouterr().err


def test_config_errors_exit_one(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "groundstate", "[grid]\nn_points = 512\nbogus = 1\n")
    assert code == EXIT_CONFIG
    assert "run.ini:3:" in capsys.readouterr().err
    assert main(["groundstate", "--config", str(tmp_path / "nope.ini")]) == EXIT_CONFIG
    assert main(["explode", "--config", "x.ini"]) == EXIT_CONFIG
    assert main(["groundstate"]) == EXIT_CONFIG
    assert main(["groundstate", "--config", "x.ini", "--threads", "0"]) == EXIT_CONFIG


def test_nonconvergence_exits_two(tmp_path, capsys):
    text = HARMONIC.format(N=100, g=0.5, b=0.0, mode="single") + "[solver]\nmax_iters = 3\n"
    code, out = run_cli(tmp_path, "groundstate", text)
    assert code == EXIT_NONCONVERGED
    assert read_record(out / "report_single.txt")["converged"] == "false"


def test_reruns_are_byte_identical(tmp_path):
    text = HARMONIC.format(N=6, g=0.3, b=3.0, mode="both")
    run_cli(tmp_path, "groundstate", text, name="a")
    run_cli(tmp_path, "groundstate", text, name="b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


SWEEP = """\
[grid]
n_points = 512
[condensate]
N = {N}
g = {g}
[sweep]
b_min = 0
b_max = {bmax}
b_step = {step}
hard_wall = {wall}
[crossover]
tol = 0.05
"""


def _delta_rows(path):
    rows = []
    for line in path.read_text().splitlines():
        if not line.startswith("#"):
            b, d = line.split()
            rows.append((float(b), float(d)))
    return rows


def test_sweep_with_crossover(tmp_path):
    code, out = run_cli(tmp_path, "sweep", SWEEP.format(N=40, g=0.5, bmax=20, step=4, wall="true"))
    assert code == EXIT_OK
    rows = _delta_rows(out / "delta.dat")
    assert rows[0][1] < 0 and math.isinf(rows[-1][0]) and rows[-1][1] > 0
    rec = read_record(out / "crossover.txt")
    assert 0.0 < float(rec["b_star"]) < 20.0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[1] == "b,E_s,E_d,delta,overlap,converged_s,converged_d" and len(lines) == 2 + len(rows)


def test_sweep_without_sign_change(tmp_path, capsys):
    # Below the crossover everywhere: no record, exit 0, and a stale file is removed.
    (tmp_path / "run").mkdir()
    (tmp_path / "run" / "crossover.txt").write_text("stale\n")
    code, out = run_cli(tmp_path, "sweep", SWEEP.format(N=40, g=0.5, bmax=2, step=1, wall="false"))
    assert code == EXIT_OK
    assert not (out / "crossover.txt").exists()
    assert "does not change sign" in capsys.readouterr().out


def test_noninteracting_sweep_never_crosses(tmp_path):
    code, out = run_cli(tmp_path, "sweep", SWEEP.format(N=10, g=0.0, bmax=10, step=5, wall="true"))
    assert code == EXIT_OK
    assert all(d <= 1e-9 for _, d in _delta_rows(out / "delta.dat"))


def test_crossover_command(tmp_path):
    text = SWEEP.format(N=40, g=0.5, bmax=2, step=1, wall="false") + "b_lo = 2\nb_hi = 20\n"
    code, out = run_cli(tmp_path, "crossover", text)
    assert code == EXIT_OK
    rec = read_record(out / "crossover.txt")
    lo, hi = float(rec["b_lo"]), float(rec["b_hi"])
    assert hi - lo <= 0.05
    bad = SWEEP.format(N=10, g=0.0, bmax=2, step=1, wall="false") + "b_lo = 0\nb_hi = 5\n"
    assert run_cli(tmp_path, "crossover", bad, name="none")[0] == EXIT_CONFIG


def test_interfere_single_is_concentrated(tmp_path):
    code, out = run_cli(tmp_path, "interfere", RELEASED.format(mode="single", runs=50, M=100, pos="false"), "--seed", "4")
    assert code == EXIT_OK
    rec = read_record(out / "summary.txt")
    assert rec["verdict"] == "concentrated" and float(rec["R"]) > 0.9
    assert "single NLSE" in rec["orbital_source"]


def test_interfere_dual_is_uniform(tmp_path):
    code, out = run_cli(tmp_path, "interfere", RELEASED.format(mode="dual", runs=200, M=100, pos="true"), "--threads", "3")
    assert code == EXIT_OK
    rec = read_record(out / "summary.txt")
    assert rec["verdict"] == "uniform" and float(rec["rayleigh_p"]) > 0.01
    runs = (out / "runs.csv").read_text().splitlines()
    assert runs[1] == "run_id,seed,mode,M,theta,R_contrib" and len(runs) == 202
    theta = [float(r.split(",")[4]) for r in runs[2:]]
    assert all(-math.pi < t <= math.pi for t in theta)
    assert len((out / "run_7.csv").read_text().splitlines()) == 101


def test_interfere_edge_cases(tmp_path):
    code, out = run_cli(tmp_path, "interfere", RELEASED.format(mode="dual", runs=1, M=20, pos="false"))
    assert code == EXIT_OK
    assert read_record(out / "summary.txt")["verdict"] == "insufficient-runs"
    too_many = RELEASED.format(mode="dual", runs=2, M=201, pos="false")
    assert run_cli(tmp_path, "interfere", too_many, name="big")[0] == EXIT_CONFIG


def test_seed_override_changes_runs_and_hash(tmp_path):
    text = RELEASED.format(mode="dual", runs=3, M=20, pos="false")
    run_cli(tmp_path, "interfere", text, "--seed", "1", name="a")
    run_cli(tmp_path, "interfere", text, "--seed", "2", name="b")
    a, b = ((tmp_path / n / "runs.csv").read_text() for n in "ab")
    assert a != b and a.splitlines()[0] != b.splitlines()[0]


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(HARMONIC.format(N=2, g=0.0, b=0.0, mode="single"))
    res = subprocess.run(
        [sys.executable, "-m", "condfrag.cli", "groundstate", "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
