"""Command-line scenarios: ``map``, ``rabi``, ``hist`` and ``gst``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 fit
non-convergence. Every run writes ``config.ini`` (the resolved scenario) and
``VERSION`` into its output directory.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, ScenarioConfig
from .dynamics import pulse_energy_histogram, rabi_flop, write_histogram_csv
from .photonics import ExtinctionNotConverged, optimize_extinction, transmission_map

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NOT_CONVERGED = 4


def _write_common(cfg: ScenarioConfig, out: str) -> None:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.ini"), "w") as fh:
        fh.write(cfg.to_ini())
    with open(os.path.join(out, "VERSION"), "w") as fh:
        fh.write(f"piezomzm {__version__}\n")


def _require_finite(name: str, values) -> None:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"{name} contains non-finite values")


# ------------------------------------------------------------------ commands

def cmd_map(cfg: ScenarioConfig, out: str) -> dict:
    """Normalized transmission and Rabi-rate maps, contours and the extinction optimum."""
    m = cfg["map"]
    grid = np.linspace(m["v_min"], m["v_max"], m["points"])
    dev = cfg.device()
    tm = transmission_map(dev, grid, grid)
    _require_finite("transmission map", tm.power)
    tm.to_csv(os.path.join(out, "transmission_map.csv"), values="power")
    tm.to_csv(os.path.join(out, "rabi_map.csv"), values="rabi")
    _write_contours(os.path.join(out, "contours.csv"), tm, m["contour_levels"])
    summary = {"peak_power": tm.peak_power, "min_normalized": float(tm.power.min())}
    if m["points"] > 1:
        ext = optimize_extinction(dev, (m["v_min"], m["v_max"]), grid_points=m["extinction_grid"])
        summary.update(v_on=ext.v_on, v_off=ext.v_off, extinction_db=ext.extinction_db)
    _write_summary(os.path.join(out, "summary.txt"), summary)
    return summary


def _write_contours(path, tm, levels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "segment", "v1", "v2"])
        if tm.power.shape[0] < 2 or tm.power.shape[1] < 2:
            return
        import contourpy

        # x runs along columns (v2), y along rows (v1)
        gen = contourpy.contour_generator(tm.v2, tm.v1, tm.power, line_type=contourpy.LineType.Separate)
        for level in levels:
            for k, line in enumerate(gen.lines(level)):
                for v2, v1 in line:
                    w.writerow([f"{level:.9g}", k, f"{v1:.9g}", f"{v2:.9g}"])


def cmd_rabi(cfg: ScenarioConfig, out: str) -> dict:
    """On and off Rabi flopping on a time grid that contains the on-state pi-time."""
    r = cfg["rabi"]
    omega_on = np.pi / r["t_pi_on_us"]
    omega_off = omega_on * 10.0 ** (-r["extinction_db"] / 20.0)
    t = np.union1d(np.linspace(0.0, r["t_max_us"], r["points"]), [r["t_pi_on_us"]])
    p_on = rabi_flop(omega_on, t)
    p_off = rabi_flop(omega_off, t)
    _require_finite("rabi curves", np.concatenate([p_on, p_off]))
    with open(os.path.join(out, "rabi.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us", "p_on", "p_off"])
        for row in zip(t, p_on, p_off):
            w.writerow([f"{x:.12g}" for x in row])
    t_pi_off = np.pi / omega_off if omega_off > 0 else float("inf")
    summary = {"t_pi_on_us": r["t_pi_on_us"], "t_pi_off_us": t_pi_off,
               "pi_time_ratio": t_pi_off / r["t_pi_on_us"], "extinction_db": r["extinction_db"]}
    _write_summary(os.path.join(out, "summary.txt"), summary)
    return summary


def cmd_hist(cfg: ScenarioConfig, out: str) -> dict:
    """Relative energies of consecutive pulses."""
    seed = cfg["run"]["seed"]
    noise, pulse = cfg.noise(), cfg.pulse()
    samples = pulse_energy_histogram(cfg["hist"]["pulses"], pulse, noise, np.random.default_rng(seed))
    _require_finite("pulse energies", samples)
    write_histogram_csv(os.path.join(out, "pulse_energies.csv"), samples, seed=seed, noise=noise, pulse=pulse)
    summary = {"pulses": len(samples), "mean": float(np.mean(samples)),
               "std": float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0,
               "lag1_autocorrelation": lag1_autocorrelation(samples)}
    _write_summary(os.path.join(out, "summary.txt"), summary)
    return summary


def lag1_autocorrelation(x) -> float:
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return 0.0
    d = x - x.mean()
    den = float(d @ d)
    return float(d[:-1] @ d[1:] / den) if den > 0 else 0.0


def cmd_gst(cfg: ScenarioConfig, out: str) -> dict:
    """Simulate a GST experiment and fit it."""
    from .tomography import (OpticalTruth, fit_physical_gst, fit_standard_gst, make_design,
                             report_metrics, simulate_dataset)

    g = cfg["gst"]
    truth = OpticalTruth.build(g["dtheta"], g["extinction_db"], cfg.noise(), duration=cfg.pulse().duration)
    data = simulate_dataset(make_design(g["max_power"]), truth, shots=g["shots"], rng=cfg["run"]["seed"],
                            infinite=g["infinite"], realizations=g["realizations"],
                            metadata={"preset": cfg.preset})
    data.write(os.path.join(out, "dataset.txt"))
    summary = {"circuits": len(data)}
    lines = []
    if g["fit"] in ("both", "standard"):
        rep = fit_standard_gst(data, fit_spam=g["fit_spam"], max_iter=g["max_iter"])
        rep.write(os.path.join(out, "standard_report.txt"), os.path.join(out, "standard_metrics.csv"))
        lines += ["standard GST"] + [str(r) for r in report_metrics(rep)]
        summary["standard_neg_loglik"] = rep.neg_loglik
    if g["fit"] in ("both", "physical"):
        rep = fit_physical_gst(data, intervals=g["intervals"], max_iter=g["max_iter"])
        rep.write(os.path.join(out, "physical_report.txt"), os.path.join(out, "physical_metrics.csv"))
        lines += ["physical GST"] + [str(r) for r in report_metrics(rep)]
        summary["physical_neg_loglik"] = rep.neg_loglik
    _write_summary(os.path.join(out, "summary.txt"), summary, lines)
    return summary


def _write_summary(path, summary: dict, lines=()) -> None:
    with open(path, "w") as fh:
        for key, value in summary.items():
            fh.write(f"{key}: {float(value)!r}\n" if isinstance(value, float) else f"{key}: {value}\n")
        for line in lines:
            fh.write(line + "\n")


COMMANDS = {"map": cmd_map, "rabi": cmd_rabi, "hist": cmd_hist, "gst": cmd_gst}


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="piezomzm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"piezomzm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        p.add_argument("--config", help="INI scenario file")
        p.add_argument("--seed", type=int, help="master seed (overrides [run] seed)")
        p.add_argument("--out", help="output directory (overrides [run] out)")
        p.add_argument("--preset", default="ideal", choices=sorted(PRESETS), help="base scenario")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .tomography.validation import ConvergenceError, IllConditionedError

    try:
        cfg = ScenarioConfig.load(args.config, preset=args.preset,
                                  overrides={("run", "seed"): args.seed, ("run", "out"): args.out})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = cfg["run"]["out"]
    try:
        _write_common(cfg, out)
        summary = COMMANDS[args.command](cfg, out)
    except ConvergenceError as exc:
        print(f"fit did not converge: {exc}", file=sys.stderr)
        for key, value in sorted(exc.diagnostics.items()):
            print(f"  {key}: {value}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, IllConditionedError, ExtinctionNotConverged, np.linalg.LinAlgError,
            ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for key, value in summary.items():
        print(f"{key}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
