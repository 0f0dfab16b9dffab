import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from phasewig.cli import load_schema, main
from phasewig.fieldio import read_binary, read_csv_values
from phasewig.render import read_pnm

SCHEMA = load_schema()

GRID = """[grid]
q_min = -10.0
q_max = 10.0
n_q = {n}
p_min = -10.0
p_max = 10.0
n_p = {n}
hbar = 1.0
"""


def scenario(tmp_path, body, n=128, name="s.cfg"):
    path = tmp_path / name
    path.write_text(GRID.format(n=n) + "\n" + body)
    return path


def summary(d):
    s = json.loads((d / "summary.json").read_text())
    jsonschema.validate(s, SCHEMA)
    return s


@pytest.mark.parametrize("task", ["wigner-direct", "wigner-tegmen", "wigner-covariant"])
def test_wigner_tasks(task, tmp_path):
    gen = '[generator]\nexpr = "p*q"\n\n' if task == "wigner-covariant" else ""
    path = scenario(
        tmp_path,
        f'[state]\nkind = "oscillator"\nn = 1\n\n{gen}[task]\nname = "{task}"\n',
    )
    out = tmp_path / "out"
    assert main(["run", str(path), "--output-dir", str(out)]) == 0
    s = summary(out)
    assert s["status"] == "ok" and s["exit_code"] == 0
    assert abs(s["results"]["normalization"] - 1) < 1e-6
    assert abs(s["results"]["min_value"] + 1 / np.pi) < 1e-6
    files = {o["file"] for o in s["outputs"]}
    assert {"W.csv", "W.bin", "W.bin.json", "W.pgm", "W.ppm", "summary.json"} <= files
    W = read_binary(out / "W.bin")
    assert np.array_equal(read_csv_values(out / "W.csv"), W.values)
    assert read_pnm(out / "W.ppm").shape == (128, 128, 3)
    assert s["render"]["W.ppm"]["mode"] == "diverging"


def test_covariant_with_half_generator_fails_normalization_gate(tmp_path):
    # f = pq/2 under the default convention yields twice the Wigner function
    body = '[state]\nkind = "oscillator"\nn = 0\n\n[generator]\npreset = "canonical"\n\n[task]\nname = "wigner-covariant"\n'
    path = scenario(tmp_path, body)
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 2
    s = summary(tmp_path / "o")
    assert s["status"] == "failed" and abs(s["results"]["normalization"] - 2) < 1e-6


def test_spectrum_task(tmp_path):
    path = scenario(
        tmp_path,
        '[potential]\ncoefficients = [0, 0, 0.5]\n\n[task]\nname = "spectrum"\nk = 4\n',
    )
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 0
    s = summary(tmp_path / "o")
    assert np.allclose(s["results"]["energies"], [0.5, 1.5, 2.5, 3.5], rtol=1e-8)
    assert (tmp_path / "o" / "eigenstates.csv").read_text().startswith("q,psi_0,psi_1")


def test_sweep_task_records_bad_cell(tmp_path):
    body = '[potential]\ncoefficients = [0, 0, 0.5]\n\n[task]\nname = "equivalence-sweep"\nk = 2\nf_list = ["canonical", "1/q"]\n'
    path = scenario(tmp_path, body)
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == 2
    s = summary(tmp_path / "o")
    assert s["results"]["n_errors"] == 2 and s["status"] == "failed"
    assert len((tmp_path / "o" / "sweep.csv").read_text().splitlines()) == 5


def test_output_dir_precedence(tmp_path, monkeypatch):
    body = '[state]\nkind = "oscillator"\nn = 0\n\n[task]\nname = "wigner-direct"\n\n[output]\ndirectory = "rel"\nformats = ["csv"]\n'
    path = scenario(tmp_path, body)
    monkeypatch.delenv("PHASEWIG_OUTPUT_DIR", raising=False)
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "rel" / "summary.json").exists()
    monkeypatch.setenv("PHASEWIG_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "env" / "W.csv").exists() and not (tmp_path / "env" / "W.bin").exists()
    assert main(["run", str(path), "--output-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "summary.json").exists()


@pytest.mark.parametrize(
    "body,code",
    [
        ('[task]\nname = "wigner-direct"\n', 1),  # no state
        (
            '[state]\nkind = "oscillator"\nn = 0\n\n[task]\nname = "wigner-direct"\nbogus = 1\n',
            1,
        ),
        ('[potential]\ncoefficients = [0, 0, -1]\n\n[task]\nname = "spectrum"\n', 1),
        (
            '[state]\nkind = "oscillator"\nn = 0\n\n[generator]\nexpr = "p*q +"\n\n[task]\nname = "wigner-covariant"\n',
            1,
        ),
        (
            '[state]\nkind = "gaussian"\nq0 = 9.5\np0 = 0\nsigma = 1\n\n[task]\nname = "wigner-direct"\n',
            2,
        ),
        (
            '[state]\nkind = "oscillator"\nn = 0\n\n[generator]\nexpr = "1/q"\n\n[task]\nname = "wigner-covariant"\n',
            2,
        ),
    ],
)
def test_exit_codes(body, code, tmp_path, capsys):
    path = scenario(tmp_path, body)
    assert main(["run", str(path), "--output-dir", str(tmp_path / "o")]) == code
    assert "phasewig:" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path):
    assert main(["run", str(tmp_path / "none.cfg")]) == 1


def test_state_from_file(tmp_path):
    first = scenario(
        tmp_path,
        '[potential]\ncoefficients = [0, 0, 0.5]\n\n[task]\nname = "spectrum"\nk = 1\n',
        name="a.cfg",
    )
    main(["run", str(first), "--output-dir", str(tmp_path / "spec")])
    body = '[state]\nkind = "file"\npath = "spec/eigenstates.csv"\n\n[task]\nname = "wigner-direct"\n'
    second = scenario(tmp_path, body, name="b.cfg")
    assert main(["run", str(second), "--output-dir", str(tmp_path / "w")]) == 0
    assert abs(summary(tmp_path / "w")["results"]["min_value"]) < 1e-6


def test_verify_small_grid_reports_failures_deterministically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--grid", "64", "--output-dir", str(a)]) == 2
    assert main(["verify", "--grid", "64", "--output-dir", str(b)]) == 2
    sa, sb = summary(a), summary(b)
    assert sa["results"] == sb["results"]
    assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()
    assert sa["results"]["n_failed"] > 0


def test_verify_rejects_tiny_grid(tmp_path):
    assert main(["verify", "--grid", "8", "--output-dir", str(tmp_path)]) == 1


def test_print_schema_and_module_entry():
    out = subprocess.run(
        [sys.executable, "-m", "phasewig.cli", "print-schema"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert json.loads(out.stdout) == SCHEMA
