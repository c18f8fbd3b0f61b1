import csv
import filecmp
import os
import subprocess
import sys

import numpy as np
import pytest

from piezomzm import __version__
from piezomzm.cli import EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_OK, lag1_autocorrelation, main
from piezomzm.config import PRESETS, ConfigError, ScenarioConfig


def _run(tmp_path, command, text="", preset="ideal", out="out", seed=None):
    cfg = tmp_path / f"{out}.ini"
    cfg.write_text(text)
    argv = [command, "--config", str(cfg), "--out", str(tmp_path / out), "--preset", preset]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return main(argv), tmp_path / out


def _csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# ------------------------------------------------------------------ config

def test_defaults_and_presets_resolve():
    for name in PRESETS:
        cfg = ScenarioConfig.load(preset=name)
        assert cfg.preset == name
    assert ScenarioConfig.load(preset="mzm")["gst"]["extinction_db"] == 25.8


def test_layering_order():
    cfg = ScenarioConfig.load(preset="mzm", text="[gst]\nshots = 50\n[run]\nseed = 3\n",
                              overrides={("run", "seed"): 9, ("run", "out"): None})
    assert cfg["gst"]["shots"] == 50 and cfg["gst"]["dtheta"] == -0.0301
    assert cfg["run"]["seed"] == 9


@pytest.mark.parametrize("text", [
    "[gst]\nshotz = 5\n",
    "[nope]\na = 1\n",
    "[gst]\nshots = many\n",
    "[gst]\nshots = 0\n",
    "[map]\nv_min = 5\nv_max = -5\n",
    "[device]\nsplit1_in = 1.5\n",
    "not an ini file",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        ScenarioConfig.load(text=text)


def test_echo_round_trips():
    cfg = ScenarioConfig.load(preset="mzm", text="[map]\ncontour_levels = 0.2, 0.7\n")
    again = ScenarioConfig.load(preset="ideal", text=cfg.to_ini())
    for section in cfg.values:
        for key, value in cfg[section].items():
            if (section, key) != ("run", "out"):
                assert again[section][key] == value


# --------------------------------------------------------------- exit codes

def test_exit_code_config_errors(tmp_path, capsys):
    assert _run(tmp_path, "map", "[map]\nbogus = 1\n")[0] == EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err
    assert main(["map", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["map", "--preset", "nonexistent"])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_exit_code_numeric_failure(tmp_path, capsys):
    code, _ = _run(tmp_path, "rabi", "[rabi]\nt_pi_on_us = 1e-320\n")
    assert code == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err


def test_exit_code_non_convergence(tmp_path, capsys):
    code, _ = _run(tmp_path, "gst", "[gst]\nmax_iter = 2\nfit = physical\nmax_power = 1\n", preset="mzm")
    assert code == EXIT_NOT_CONVERGED
    err = capsys.readouterr().err
    assert "did not converge" in err and "nit:" in err


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "piezomzm", "rabi", "--out", str(tmp_path / "r")],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "pi_time_ratio" in res.stdout


# ---------------------------------------------------------------------- map

def test_map_single_point_is_unity(tmp_path):
    code, out = _run(tmp_path, "map", "[map]\npoints = 1\nv_min = 3\nv_max = 3\n")
    assert code == EXIT_OK
    rows = _csv(out / "transmission_map.csv")
    assert float(rows[1][-1]) == 1.0
    assert "v_on" not in (out / "summary.txt").read_text()


def test_map_perfect_device_reaches_zero(tmp_path):
    code, out = _run(tmp_path, "map", "[map]\npoints = 193\nv_min = -24\nv_max = 24\n", preset="perfect")
    assert code == EXIT_OK
    summary = (out / "summary.txt").read_text()
    assert float(summary.split("min_normalized: ")[1].split()[0]) <= 1e-10
    assert len(_csv(out / "contours.csv")) > 10
    assert (out / "rabi_map.csv").exists()


def test_map_4060_preset_is_deformed(tmp_path):
    _, ideal = _run(tmp_path, "map", "[map]\npoints = 49\n", out="a")
    _, dev = _run(tmp_path, "map", "[map]\npoints = 49\n", preset="4060", out="b")

    def power(out):
        rows = _csv(out / "transmission_map.csv")
        return np.array([[float(x) for x in r[1:]] for r in rows[1:]])

    a, b = power(ideal), power(dev)
    assert a.shape == b.shape
    assert np.max(np.abs(a - b)) > 0.05
    # compensation still yields a deep off state
    summary = (dev / "summary.txt").read_text()
    assert float(summary.split("extinction_db: ")[1].split()[0]) >= 60


# --------------------------------------------------------------------- rabi

def test_rabi_pi_time_ratio(tmp_path):
    code, out = _run(tmp_path, "rabi", "", preset="mzm")
    assert code == EXIT_OK
    text = (out / "summary.txt").read_text()
    ratio = float(text.split("pi_time_ratio: ")[1].split()[0])
    assert ratio == pytest.approx(86.1, abs=0.1)


def test_rabi_infinite_extinction_and_peak(tmp_path):
    code, out = _run(tmp_path, "rabi", "[rabi]\nextinction_db = inf\npoints = 101\n")
    assert code == EXIT_OK
    rows = np.array([[float(x) for x in r] for r in _csv(out / "rabi.csv")[1:]])
    assert np.all(rows[:, 2] == 0.0)
    at_pi = rows[np.isclose(rows[:, 0], 21.95), 1]
    assert at_pi.size == 1 and at_pi[0] == pytest.approx(1.0, abs=1e-15)


# --------------------------------------------------------------------- hist

def test_hist_outputs(tmp_path):
    code, out = _run(tmp_path, "hist", "", preset="mzm", seed=5)
    assert code == EXIT_OK
    lines = (out / "pulse_energies.csv").read_text().splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    assert len(data) == 1001
    summary = (out / "summary.txt").read_text()
    assert 0.005 <= float(summary.split("\nstd: ")[1].split()[0]) <= 0.007


def test_lag1_autocorrelation():
    assert lag1_autocorrelation([1.0, 1.0, 1.0]) == 0.0
    assert lag1_autocorrelation([1.0, 2.0]) == 0.0
    assert lag1_autocorrelation(np.arange(100.0)) > 0.9
    assert lag1_autocorrelation(np.tile([1.0, -1.0], 50)) < -0.9


# ---------------------------------------------------------------------- gst

QUIET_MZM = ("[noise]\nenergy_jitter_rel = 0\ndrift = false\n"
             "[gst]\ninfinite = true\nfit = physical\nintervals = false\n")


def test_gst_mzm_noise_free_reproduces_table_row(tmp_path):
    code, out = _run(tmp_path, "gst", QUIET_MZM, preset="mzm")
    assert code == EXIT_OK
    rows = {r[0]: r for r in _csv(out / "physical_metrics.csv")[1:]}
    assert float(rows["Gx/Gy"][1]) == pytest.approx(0.23e-3, rel=0.02)
    assert float(rows["Gi"][1]) == pytest.approx(1.62e-3, rel=0.02)
    assert "infinite_shot: True" in (out / "physical_report.txt").read_text()


def test_gst_ideal_preset_all_zero(tmp_path):
    code, out = _run(tmp_path, "gst", "[gst]\ninfinite = true\nintervals = false\n")
    assert code == EXIT_OK
    for name in ("standard_metrics.csv", "physical_metrics.csv"):
        for row in _csv(out / name)[1:]:
            assert float(row[1]) < 1e-9
            assert float(row[3]) < 1e-4


def test_gst_no_fit_writes_dataset_only(tmp_path):
    code, out = _run(tmp_path, "gst", "[gst]\nfit = none\nmax_power = 1\n")
    assert code == EXIT_OK
    assert (out / "dataset.txt").exists()
    assert not (out / "physical_report.txt").exists()


# --------------------------------------------------------- reproducibility

@pytest.mark.parametrize("command,text", [
    ("map", "[map]\npoints = 25\n"),
    ("rabi", "[rabi]\npoints = 201\n"),
    ("hist", "[noise]\ndrift = true\nenergy_jitter_rel = 0.006\n"),
    ("gst", "[gst]\nmax_power = 2\nshots = 100\nintervals = false\n[noise]\nenergy_jitter_rel = 0.006\n"),
])
def test_seeded_runs_byte_identical(tmp_path, command, text):
    _, a = _run(tmp_path, command, text, seed=11, out="a")
    _, b = _run(tmp_path, command, text, seed=11, out="b")
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert "config.ini" in names and "VERSION" in names
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []
    assert (a / "VERSION").read_text() == f"piezomzm {__version__}\n"


def test_different_seeds_differ(tmp_path):
    text = "[noise]\nenergy_jitter_rel = 0.006\n"
    _, a = _run(tmp_path, "hist", text, seed=1, out="a")
    _, b = _run(tmp_path, "hist", text, seed=2, out="b")
    assert (a / "pulse_energies.csv").read_text() != (b / "pulse_energies.csv").read_text()


def test_config_echo_is_resolved(tmp_path):
    _, out = _run(tmp_path, "rabi", "[rabi]\npoints = 11\n", preset="mzm", seed=4)
    echo = ScenarioConfig.load(out / "config.ini")
    assert echo["rabi"]["points"] == 11 and echo["run"]["seed"] == 4
    assert echo["gst"]["extinction_db"] == 25.8
