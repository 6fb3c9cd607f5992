import csv
import json
import subprocess
import sys

import pytest

from thermoscatter.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_SCIENCE, EXIT_VALIDATION, main

SMALL_RUN = [
    "--set", "grid.N=1024",
    "--set", "packet.eps=0.05",
    "--set", "ensemble.M=16",
    "--set", "ensemble.chunk=8",
    "--set", "wigner.enabled=false",
]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_coeffs_velocity_flip(tmp_path):
    out = tmp_path / "c"
    assert main(["coeffs", "--out", str(out), "--set", "thermostat.mu=0.5"]) == EXIT_OK
    res = read_json(out / "coeffs.json")["results"]
    assert res["p_abs"] == 0.0
    assert abs(res["p_sc_integral"] - 1.0) <= 1e-8
    man = read_json(out / "manifest.json")
    assert {"coeffs.csv", "coeffs.json"} <= set(man["files"])


def test_coeffs_transparent(tmp_path):
    out = tmp_path / "c"
    assert main(["coeffs", "--out", str(out), "--set", "thermostat.gamma=1e-8"]) == EXIT_OK
    rows = read_csv(out / "coeffs.csv")
    assert len(rows) > 100
    assert max(abs(float(r["p_plus"]) - 1.0) for r in rows) <= 1e-5


def test_coeffs_byte_identical(tmp_path):
    out = tmp_path / "c"
    assert main(["coeffs", "--out", str(out)]) == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert main(["coeffs", "--out", str(out)]) == EXIT_OK
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_identities_default_matrix(tmp_path):
    out = tmp_path / "i"
    assert main(["identities", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out / "identities.csv")
    assert len(rows) >= 12


def test_identities_detect_perturbed_gamma(tmp_path):
    assert main(["identities", "--out", str(tmp_path / "i"), "--perturb-gamma", "1e-4"]) == EXIT_SCIENCE


@pytest.mark.parametrize("bad", [
    ["--set", "thermostat.mu=0.4"],
    ["--set", "grid.N=1000"],
    ["--set", "thermostat.nonsense=1"],
    ["--set", "packet.k0=0.7"],
    ["--config", "/nonexistent/file.toml"],
])
def test_validation_exit_code(tmp_path, bad):
    assert main(["coeffs", "--out", str(tmp_path / "c"), *bad]) == EXIT_VALIDATION


def test_config_file(tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('kind = "coeffs"\n[thermostat]\ngamma = 2.0\nmu = 10.0\n[dispersion]\nomega_min = 1.0\n')
    out = tmp_path / "c"
    assert main(["coeffs", "--config", str(cfg), "--out", str(out), "--set", "thermostat.mu=2.0"]) == EXIT_OK
    doc = read_json(out / "coeffs.json")
    assert doc["config"]["thermostat"] == {"gamma": 2.0, "mu": 2.0, "T": 0.0}
    assert doc["config"]["dispersion"]["omega_min"] == 1.0


def test_simulate_transparent(tmp_path):
    out = tmp_path / "s"
    assert main(["simulate", "--out", str(out), "--set", "thermostat.gamma=0.0", *SMALL_RUN]) == EXIT_OK
    frac = {r["quantity"]: float(r["value"]) for r in read_csv(out / "fractions.csv")}
    assert frac["transmitted"] == pytest.approx(1.0, abs=1e-6)
    assert abs(frac["absorbed"]) <= 1e-12


def test_simulate_independent_of_workers(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--out", str(a), "--workers", "1", *SMALL_RUN]) == EXIT_OK
    assert main(["simulate", "--out", str(b), "--workers", "2", *SMALL_RUN]) == EXIT_OK
    for name in ("fractions.csv", "spectrum.csv", "energy_series.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_compare_transparent_smoke(tmp_path):
    out = tmp_path / "g"
    code = main(["compare", "--out", str(out), "--set", "thermostat.gamma=0.0", *SMALL_RUN])
    assert code == EXIT_OK
    rows = read_csv(out / "comparison.csv")
    assert all(r["passed"] == "true" for r in rows)
    assert all(abs(float(r["z"])) <= 1e-2 for r in rows if r["quantity"] in ("reflected", "absorbed"))


def test_numerical_exit_code(tmp_path):
    # the packet has not cleared the interface at this time
    code = main(["compare", "--out", str(tmp_path / "n"), "--set", "ensemble.t_end=7.0", *SMALL_RUN])
    assert code == EXIT_NUMERICAL
    # the scattered field would wrap around the periodic box
    code = main(["simulate", "--out", str(tmp_path / "w"), "--set", "ensemble.t_end=100.0", *SMALL_RUN])
    assert code == EXIT_NUMERICAL


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "thermoscatter.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.strip()


def test_compare_langevin_direction(tmp_path):
    out = tmp_path / "l"
    small = [a.replace("ensemble.M=16", "ensemble.M=8") for a in SMALL_RUN]
    assert main(["compare", "--out", str(out), "--set", "thermostat.mu=1000", *small]) == EXIT_OK
    rows = {r["quantity"]: r for r in read_csv(out / "comparison.csv")}
    assert float(rows["scattered"]["theory"]) <= 1e-3
    assert abs(float(rows["scattered"]["empirical"])) <= 1e-3
