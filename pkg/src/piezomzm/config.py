"""Scenario configuration: INI files layered over named presets.

Resolution order is schema defaults, then the preset, then the file, then
command-line overrides. Unknown sections and keys are rejected.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

from .dynamics import DriftModel, NoiseModel, PulseShape
from .photonics import ArmSpec, CouplerSpec, DeviceSpec, MziSpec


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float(text: str) -> float:
    return float(text)


def _opt_float(text: str):
    """Float, or ``None`` written as ``none``/``random``."""
    return None if text.strip().lower() in ("none", "random") else float(text)


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _choice(*options):
    def conv(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {t!r}")
        return t

    return conv


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


SCHEMA = {
    "run": {
        "seed": (int, 1),
        "out": (str, "out"),
    },
    "device": {
        "split1_in": (_float, 0.5),
        "split1_out": (_float, 0.5),
        "split2_in": (_float, 0.5),
        "split2_out": (_float, 0.5),
        "coupler_loss_db": (_float, 0.0),
        "vpi": (_float, 24.0),
        "bias1": (_float, 0.0),
        "bias2": (_float, 0.0),
        "arm_loss_db": (_float, 0.0),
        "routing": (_choice("straight", "crossed"), "straight"),
        "input_port": (int, 0),
        "designated_output": (int, 0),
    },
    "map": {
        "v_min": (_float, -48.0),
        "v_max": (_float, 48.0),
        "points": (int, 97),
        "contour_levels": (_floats, (0.01, 0.1, 0.5, 0.9)),
        "extinction_grid": (int, 101),
    },
    "rabi": {
        "t_pi_on_us": (_float, 21.95),
        "extinction_db": (_float, 38.7),
        "t_max_us": (_float, 4000.0),
        "points": (int, 4001),
    },
    "pulse": {
        "rise_us": (_float, 0.3),
        "fall_us": (_float, 0.5),
        "plateau_us": (_float, 21.15),
    },
    "noise": {
        "energy_jitter_rel": (_float, 0.0),
        "drift": (_bool, False),
        "reversion_time_s": (_float, 3600.0),
        "extinction_std_db": (_float, 1.5),
        "power_std_rel": (_float, 0.01),
        "leakage_phase": (_opt_float, 0.0),
        "leakage_phase_walk": (_float, 0.0),
        "t2_us": (_float, 600.0),
        "dephasing": (_bool, False),
        "gap_us": (_float, 5.0),
        "sequence_interval_s": (_float, 1.0),
        "pulse_interval_s": (_float, 0.1),
    },
    "hist": {
        "pulses": (int, 1000),
    },
    "gst": {
        "dtheta": (_float, 0.0),
        "extinction_db": (_float, math.inf),
        "max_power": (int, 4),
        "shots": (int, 1000),
        "infinite": (_bool, False),
        "realizations": (int, 32),
        "fit": (_choice("both", "standard", "physical", "none"), "both"),
        "fit_spam": (_bool, True),
        "intervals": (_bool, True),
        "max_iter": (int, 4000),
    },
}

# values that differ from the schema defaults
PRESETS = {
    "ideal": {},
    "perfect": {},
    "4060": {
        "device": {"split1_in": 0.4, "split1_out": 0.4, "split2_in": 0.4, "split2_out": 0.4},
    },
    "mzm": {
        "device": {"split1_in": 0.4, "split1_out": 0.4, "split2_in": 0.4, "split2_out": 0.4},
        "rabi": {"extinction_db": 38.7},
        "noise": {"energy_jitter_rel": 0.006, "drift": True, "leakage_phase": 3.16},
        "gst": {"dtheta": -0.0301, "extinction_db": 25.8},
    },
    "aom": {
        "rabi": {"extinction_db": 115.0},
        # output-stabilized: on-power locked, no extinction drift
        "noise": {"energy_jitter_rel": 0.006, "drift": False, "leakage_phase": 0.0},
        "gst": {"dtheta": 0.0, "extinction_db": 115.0},
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario; ``values[section][key]`` holds typed values."""

    preset: str
    values: dict

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    # ------------------------------------------------------------ loading

    @classmethod
    def load(cls, path=None, *, preset: str = "ideal", text: str | None = None,
             overrides: dict | None = None) -> "ScenarioConfig":
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(sorted(PRESETS))}")
        values = {s: {k: default for k, (_, default) in keys.items()} for s, keys in SCHEMA.items()}
        for section, keys in PRESETS[preset].items():
            values[section].update(keys)
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            if path is not None:
                with open(path) as fh:
                    parser.read_file(fh)
            if text is not None:
                parser.read_string(text)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                values[section][key] = _convert(section, key, raw)
        for (section, key), value in (overrides or {}).items():
            if value is not None:
                values[section][key] = _convert(section, key, value) if isinstance(value, str) else value
        cfg = cls(preset, values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        """Range checks by building every object the config describes."""
        m, r, g = self["map"], self["rabi"], self["gst"]
        if m["points"] < 1 or m["v_max"] < m["v_min"] or (m["points"] > 1 and m["v_max"] == m["v_min"]):
            raise ConfigError("map needs points >= 1 and v_min <= v_max")
        if r["t_pi_on_us"] <= 0 or r["t_max_us"] <= 0 or r["points"] < 2 or r["extinction_db"] < 0:
            raise ConfigError("rabi needs positive times, points >= 2 and extinction_db >= 0")
        if self["hist"]["pulses"] < 1:
            raise ConfigError("hist.pulses must be >= 1")
        if g["shots"] < 1 or g["realizations"] < 1 or not 0 <= g["max_power"] <= 4 or g["extinction_db"] < 0 \
                or g["max_iter"] < 1:
            raise ConfigError("gst needs shots >= 1, realizations >= 1, 0 <= max_power <= 4, extinction_db >= 0, "
                              "max_iter >= 1")
        try:
            self.device()
            self.noise()
            self.pulse()
        except (ValueError, NotImplementedError) as exc:
            raise ConfigError(str(exc)) from exc

    # ----------------------------------------------------------- builders

    def device(self) -> DeviceSpec:
        d = self["device"]

        def mzi(split_in, split_out, bias):
            c_in = CouplerSpec(d[split_in], d["coupler_loss_db"])
            c_out = CouplerSpec(d[split_out], d["coupler_loss_db"])
            return MziSpec(c_in, c_out, ArmSpec(d["vpi"], d[bias], d["arm_loss_db"]))

        return DeviceSpec(mzi("split1_in", "split1_out", "bias1"), mzi("split2_in", "split2_out", "bias2"),
                          routing=d["routing"], input_port=d["input_port"],
                          designated_output=d["designated_output"])

    def noise(self) -> NoiseModel:
        n = self["noise"]
        drift = (DriftModel(n["reversion_time_s"], n["extinction_std_db"], n["power_std_rel"])
                 if n["drift"] else None)
        return NoiseModel(energy_jitter_rel=n["energy_jitter_rel"], drift=drift,
                          leakage_phase=n["leakage_phase"], leakage_phase_walk=n["leakage_phase_walk"],
                          t2=n["t2_us"], dephasing=n["dephasing"], gap=n["gap_us"],
                          sequence_interval_s=n["sequence_interval_s"], pulse_interval_s=n["pulse_interval_s"])

    def pulse(self) -> PulseShape:
        p = self["pulse"]
        return PulseShape(p["rise_us"], p["fall_us"], p["plateau_us"])

    # --------------------------------------------------------------- echo

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for section in SCHEMA:
            # the output directory is where the echo lives; leaving it out keeps
            # runs that differ only in --out byte-identical
            parser[section] = {k: _fmt(self.values[section][k]) for k in SCHEMA[section]
                               if (section, k) != ("run", "out")}
        buf = io.StringIO()
        buf.write(f"# resolved scenario, preset = {self.preset}\n")
        parser.write(buf)
        return buf.getvalue()


def _convert(section: str, key: str, raw: str):
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    conv = SCHEMA[section][key][0]
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from exc
