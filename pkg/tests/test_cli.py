import os
import subprocess
import sys

import pytest

SCENE = """channel 0 coeff 1.0 0.0 interval -1.0 0.0
channel 0 coeff 2.0 0.0 interval 1.0 2.0
channel 1 coeff -1.0 0.0 interval -1.0 0.0
channel 1 coeff 2.0 0.0 interval 1.0 2.0
"""
MASK_REGION = """channel 0 coeff 1.0 0.0 interval -1.0 1.0
"""


def _run(args, cwd, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run([sys.executable, "-m", "pwsis.cli"] + args,
                          cwd=cwd, env=full_env, capture_output=True, text=True)


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "scene.txt").write_text(SCENE)
    (tmp_path / "lat.txt").write_text("1.0\n")
    (tmp_path / "offs.txt").write_text("-1\n0\n1\n")
    res = _run(["synth", "--scene", "scene.txt", "--lattice", "lat.txt",
                "--resolution", "2", "--offsets", "offs.txt",
                "--out", "data.txt"], tmp_path)
    assert res.returncode == 0, res.stderr
    assert "channels 2" in res.stdout and "energy 10" in res.stdout
    # a mask file for the inner band [-1, 1)
    (tmp_path / "band.txt").write_text(MASK_REGION)
    res = _run(["synth", "--scene", "band.txt", "--lattice", "lat.txt",
                "--resolution", "2", "--offsets", "offs.txt",
                "--out", "bandset.txt"], tmp_path)
    assert res.returncode == 0
    res = _run(["omega-opt", "--data", "bandset.txt", "--measure", "2.0",
                "--out", "mask.txt"], tmp_path)
    assert res.returncode == 0, res.stderr
    return tmp_path


def test_solve_reports_optimum(workdir):
    res = _run(["solve", "--data", "data.txt", "--ell", "1"], workdir)
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert "length 1" in lines
    assert "total error 2" in lines
    assert "channel 0 error 1" in lines and "channel 1 error 1" in lines


def test_solve_ell_zero_gives_total_energy(workdir):
    res = _run(["solve", "--data", "data.txt", "--ell", "0"], workdir)
    assert res.returncode == 0
    assert "total error 10" in res.stdout


def test_solve_with_mask_splits_error(workdir):
    res = _run(["solve", "--data", "data.txt", "--ell", "1",
                "--mask", "mask.txt"], workdir)
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert "total error 8" in lines
    assert "inside-band error 0" in lines
    assert "outside-band energy 8" in lines


def test_solve_dump_gramian(workdir):
    res = _run(["solve", "--data", "data.txt", "--ell", "1",
                "--dump-gramian", "gram.txt"], workdir)
    assert res.returncode == 0
    first = (workdir / "gram.txt").read_text().splitlines()[0]
    assert first == "pwsis-gramian v1"


def test_project_and_pipeline(workdir):
    res = _run(["project", "--data", "data.txt", "--mask", "mask.txt",
                "--out", "proj.txt"], workdir)
    assert res.returncode == 0
    assert "inside-band energy 2" in res.stdout
    assert "outside-band energy 8" in res.stdout
    res = _run(["pipeline", "--data", "data.txt", "--mask", "mask.txt",
                "--ell", "1"], workdir)
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert "project-then-solve 8" in lines
    assert "solve-then-project 10" in lines
    assert "gap 2" in lines


def test_omega_opt_output(workdir):
    res = _run(["omega-opt", "--data", "data.txt", "--measure", "1.0",
                "--out", "band1.txt"], workdir)
    assert res.returncode == 0
    lines = res.stdout.splitlines()
    assert "measure 1" in lines
    assert "captured 8" in lines and "residual 2" in lines
    res = _run(["omega-opt", "--data", "data.txt", "--measure", "0.3",
                "--out", "bad.txt"], workdir)
    assert res.returncode == 2
    assert "not grid-representable" in res.stderr


def test_compare_lattices(workdir):
    (workdir / "lats.txt").write_text("1.0\n0.5\n2.0\n")
    res = _run(["compare-lattices", "--data", "data.txt",
                "--lattices", "lats.txt", "--ell", "1"], workdir)
    assert res.returncode == 0
    assert res.stdout.splitlines() == ["lattice 0 error 2 length 2",
                                       "lattice 1 error 2 length 2",
                                       "lattice 2 error 2 length 2"]


def test_examples_verb(workdir):
    res = _run(["examples", "--id", "3.6"], workdir)
    assert res.returncode == 0
    assert "3.6: PASS" in res.stdout
    assert "examples: 1/1 passed" in res.stdout
    res = _run(["examples", "--id", "9.9"], workdir)
    assert res.returncode == 2
    assert "unknown example id" in res.stderr


def test_check_verb_and_mutation_hook(workdir):
    res = _run(["check", "--suite", "lattice", "--seed", "0"], workdir)
    assert res.returncode == 0
    assert "suite lattice: 60/60 passed" in res.stdout
    res = _run(["check", "--suite", "covariance", "--seed", "0"], workdir,
               env={"PWSIS_BUG_GRAMIAN_NO_CONJ": "1"})
    assert res.returncode == 1
    assert "replay:" in res.stdout


def test_stdout_is_byte_identical_across_runs(workdir):
    a = _run(["solve", "--data", "data.txt", "--ell", "1"], workdir)
    b = _run(["solve", "--data", "data.txt", "--ell", "1"], workdir)
    assert a.stdout == b.stdout and a.returncode == b.returncode == 0


def test_thread_cap_env(workdir):
    res = _run(["solve", "--data", "data.txt", "--ell", "1"], workdir,
               env={"PWSIS_THREADS": "1"})
    assert res.returncode == 0
    res = _run(["solve", "--data", "data.txt", "--ell", "1"], workdir,
               env={"PWSIS_THREADS": "abc"})
    assert res.returncode == 2


def test_usage_errors_exit_two(workdir):
    assert _run(["solve", "--data", "data.txt"], workdir).returncode == 2
    assert _run(["frobnicate"], workdir).returncode == 2
    res = _run(["solve", "--data", "missing.txt", "--ell", "1"], workdir)
    assert res.returncode == 2
    assert "error:" in res.stderr
