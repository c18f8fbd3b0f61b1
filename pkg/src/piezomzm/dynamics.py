"""From optical pulses to realized qubit rotations.

The optical transition's Rabi rate goes as the square root of the optical
power, so a relative power error ``e`` becomes a relative angle error of
about ``e / 2`` and an extinction ratio ``ER`` leaves a residual rotation of
``(pi/2) 10**(-ER/20)`` during an identity gate of the same duration.

Times are in microseconds and rates in rad/us unless a name says otherwise.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate

from . import qchan
from ._validation import check_nonnegative, check_positive, check_rng

__all__ = [
    "GATE_LABELS",
    "PulseShape",
    "DriftModel",
    "NoiseModel",
    "OpticalGateSpec",
    "SequenceContext",
    "OrnsteinUhlenbeck",
    "rabi_rate_from_power",
    "rabi_flop",
    "pi_time",
    "theta_from_extinction",
    "extinction_from_theta",
    "extinction_from_pi_times",
    "power_profile",
    "effective_angle",
    "riemann_angle",
    "calibrate_peak_rate",
    "realize_gate",
    "realize_angles",
    "gate_channel",
    "pulse_energy_histogram",
    "write_histogram_csv",
    "spawn_rngs",
]

GATE_LABELS = ("Gx", "Gy", "Gi")
_AXIS = {"Gx": 0.0, "Gy": 0.5 * np.pi}
_ALIASES = {"sqrtx": "Gx", "√x": "Gx", "x": "Gx", "gx": "Gx",
            "sqrty": "Gy", "√y": "Gy", "y": "Gy", "gy": "Gy",
            "i": "Gi", "gi": "Gi", "idle": "Gi"}


def _gate_label(gate_id: str) -> str:
    if gate_id in GATE_LABELS:
        return gate_id
    try:
        return _ALIASES[gate_id.lower()]
    except KeyError:
        raise ValueError(f"unknown gate {gate_id!r}; expected one of {GATE_LABELS}") from None


# ---------------------------------------------------------------- Rabi basics

def rabi_rate_from_power(p_rel: float, omega_ref: float) -> float:
    if p_rel < 0:
        raise ValueError(f"relative power must be >= 0, got {p_rel}")
    return float(omega_ref * np.sqrt(p_rel))


def rabi_flop(omega: float, durations) -> np.ndarray:
    """Excited-state population ``sin^2(omega t / 2)`` of a resonant drive."""
    check_nonnegative(omega, "omega")
    t = np.asarray(durations, dtype=float)
    return np.sin(0.5 * omega * t) ** 2


def pi_time(omega: float) -> float:
    return float(np.pi / omega) if omega > 0 else float("inf")


def theta_from_extinction(extinction_db: float, theta_on: float = 0.5 * np.pi) -> float:
    """Rotation left over when a ``theta_on`` pulse is attenuated by ``extinction_db``."""
    return float(theta_on * 10.0 ** (-extinction_db / 20.0))


def extinction_from_theta(theta: float, theta_on: float = 0.5 * np.pi) -> float:
    return float(20.0 * np.log10(theta_on / theta))


def extinction_from_pi_times(t_pi_on: float, t_pi_off: float) -> float:
    """Power extinction implied by the on/off Rabi rates (Rabi ~ sqrt(P))."""
    return float(20.0 * np.log10(t_pi_off / t_pi_on))


# -------------------------------------------------------------------- pulses

@dataclass(frozen=True)
class PulseShape:
    """Trapezoid in optical power.

    ``rise_time`` and ``fall_time`` are 10-90 % times; the ramps are linear in
    power so the full 0-100 % ramp lasts ``1.25`` times longer.
    """

    rise_time: float = 0.3
    fall_time: float = 0.5
    plateau: float = 21.15

    def __post_init__(self):
        for name in ("rise_time", "fall_time", "plateau"):
            check_nonnegative(getattr(self, name), name)

    @property
    def ramp_up(self) -> float:
        return self.rise_time / 0.8

    @property
    def ramp_down(self) -> float:
        return self.fall_time / 0.8

    @property
    def duration(self) -> float:
        return self.ramp_up + self.plateau + self.ramp_down

    @property
    def area(self) -> float:
        """Integrated relative power (pulse energy in units of P_on * us)."""
        return self.plateau + 0.5 * (self.ramp_up + self.ramp_down)

    def breakpoints(self) -> tuple[float, float, float, float]:
        a = self.ramp_up
        b = a + self.plateau
        return 0.0, a, b, b + self.ramp_down


def power_profile(pulse: PulseShape, t) -> np.ndarray:
    """Relative power ``P(t)`` in ``[0, 1]``."""
    t = np.asarray(t, dtype=float)
    t0, a, b, c = pulse.breakpoints()
    p = np.zeros_like(t)
    if pulse.ramp_up > 0:
        m = (t >= t0) & (t < a)
        p[m] = (t[m] - t0) / pulse.ramp_up
    p[(t >= a) & (t <= b)] = 1.0
    if pulse.ramp_down > 0:
        m = (t > b) & (t <= c)
        p[m] = (c - t[m]) / pulse.ramp_down
    return p


def effective_angle(pulse: PulseShape, omega_peak: float) -> float:
    """Rotation angle ``int omega_peak sqrt(P(t)) dt`` by adaptive quadrature."""
    t0, a, b, c = pulse.breakpoints()
    total = omega_peak * pulse.plateau
    for lo, hi in ((t0, a), (b, c)):
        if hi > lo:
            # integrate on the unit interval so tiny ramps stay well scaled;
            # sqrt singularity at the foot of each ramp
            span = hi - lo
            val, _ = integrate.quad(lambda s: np.sqrt(power_profile(pulse, lo + span * s)), 0.0, 1.0,
                                    epsabs=0.0, epsrel=1e-12, limit=200)
            total += omega_peak * span * val
    return float(total)


def riemann_angle(pulse: PulseShape, omega_peak: float, steps: int = 1_000_000) -> float:
    """Midpoint Riemann sum of the same integral; an independent check."""
    dur = pulse.duration
    if dur == 0.0:
        return 0.0
    h = dur / steps
    t = (np.arange(steps) + 0.5) * h
    return float(omega_peak * np.sqrt(power_profile(pulse, t)).sum() * h)


def calibrate_peak_rate(pulse: PulseShape, target_angle: float = 0.5 * np.pi) -> float:
    """Peak Rabi rate that makes ``pulse`` rotate by ``target_angle``."""
    unit = effective_angle(pulse, 1.0)
    if unit == 0.0:
        raise ValueError("zero-duration pulse cannot be calibrated")
    return target_angle / unit


# --------------------------------------------------------------------- noise

@dataclass(frozen=True)
class DriftModel:
    """Stationary Ornstein-Uhlenbeck drift of extinction ratio and on-power.

    ``reversion_time_s`` is the correlation time in seconds; the standard
    deviations are those of the stationary distribution.
    """

    reversion_time_s: float = 3600.0
    extinction_std_db: float = 1.5
    power_std_rel: float = 0.01

    def __post_init__(self):
        check_positive(self.reversion_time_s, "reversion_time_s")
        check_nonnegative(self.extinction_std_db, "extinction_std_db")
        check_nonnegative(self.power_std_rel, "power_std_rel")


class OrnsteinUhlenbeck:
    """Exact discretization of a zero-mean OU process."""

    def __init__(self, reversion_time: float, std: float, rng: np.random.Generator, x0: float | None = None):
        self.tau = reversion_time
        self.std = std
        self.rng = rng
        self.x = std * rng.standard_normal() if x0 is None else float(x0)

    def step(self, dt: float) -> float:
        decay = np.exp(-dt / self.tau)
        self.x = self.x * decay + self.std * np.sqrt(1.0 - decay * decay) * self.rng.standard_normal()
        return self.x


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic imperfections of the optical switch.

    ``leakage_phase`` fixes the I-gate rotation axis; ``None`` draws it
    uniformly once per experiment. ``leakage_phase_walk`` (rad per sequence)
    lets it wander between sequences. Dephasing with ``t2`` only enters
    channel-level outputs and is off unless ``dephasing`` is set.
    """

    energy_jitter_rel: float = 0.006
    drift: DriftModel | None = None
    leakage_phase: float | None = None
    leakage_phase_walk: float = 0.0
    t2: float | None = 600.0
    dephasing: bool = False
    gap: float = 5.0
    sequence_interval_s: float = 1.0
    pulse_interval_s: float = 0.1

    def __post_init__(self):
        check_nonnegative(self.energy_jitter_rel, "energy_jitter_rel")
        check_nonnegative(self.leakage_phase_walk, "leakage_phase_walk")
        check_nonnegative(self.gap, "gap")
        if self.t2 is not None:
            check_positive(self.t2, "t2")
        if self.dephasing and self.t2 is None:
            raise ValueError("dephasing requires t2")

    @classmethod
    def quiet(cls, **kw) -> "NoiseModel":
        """No jitter, no drift, no dephasing."""
        kw.setdefault("energy_jitter_rel", 0.0)
        return cls(**kw)

    @property
    def is_deterministic(self) -> bool:
        return (self.energy_jitter_rel == 0.0 and self.drift is None
                and self.leakage_phase is not None and self.leakage_phase_walk == 0.0)


@dataclass(frozen=True)
class OpticalGateSpec:
    """One of the three gates as produced by the optical switch.

    ``on_power_rel`` is the delivered on-state power relative to the value
    that gives an exact pi/2; ``extinction_db`` sets the leakage of the I gate.
    """

    gate_id: str
    duration: float = 22.0
    on_power_rel: float = 1.0
    extinction_db: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "gate_id", _gate_label(self.gate_id))
        check_positive(self.duration, "duration")
        check_nonnegative(self.on_power_rel, "on_power_rel")
        check_nonnegative(self.extinction_db, "extinction_db")

    @classmethod
    def from_angle_error(cls, gate_id: str, dtheta: float, **kw) -> "OpticalGateSpec":
        """Spec whose nominal pi/2 rotation is off by ``dtheta``."""
        return cls(gate_id, on_power_rel=((0.5 * np.pi + dtheta) / (0.5 * np.pi)) ** 2, **kw)


@dataclass(frozen=True)
class SequenceContext:
    """State frozen for the duration of one gate sequence."""

    leakage_phase: float = 0.0
    extinction_offset_db: float = 0.0
    power_offset_rel: float = 0.0


def realize_angles(spec: OpticalGateSpec, noise: NoiseModel, ctx: SequenceContext, rng, size=None):
    """Rotation angle(s) and axis for ``size`` independent pulses of ``spec``."""
    jitter = noise.energy_jitter_rel
    energy = 1.0 + ctx.power_offset_rel
    if jitter > 0.0:
        energy = energy * (1.0 + jitter * rng.standard_normal(size))
    else:
        energy = energy * np.ones(size) if size is not None else energy
    j = np.sqrt(np.maximum(energy, 0.0))
    if spec.gate_id == "Gi":
        ext = spec.extinction_db + ctx.extinction_offset_db
        theta = theta_from_extinction(ext) * j if np.isfinite(ext) else 0.0 * j
        phi = ctx.leakage_phase
    else:
        theta = 0.5 * np.pi * np.sqrt(spec.on_power_rel) * j
        phi = _AXIS[spec.gate_id]
    return theta, phi


def realize_gate(spec: OpticalGateSpec, noise: NoiseModel, ctx: SequenceContext | None = None,
                 rng=None) -> np.ndarray:
    """Unitary of a single pulse of ``spec`` under ``noise``.

    The jitter draw needs ``rng`` only when ``noise.energy_jitter_rel > 0``.
    """
    ctx = SequenceContext() if ctx is None else ctx
    if noise.energy_jitter_rel > 0.0:
        rng = check_rng(rng)
    theta, phi = realize_angles(spec, noise, ctx, rng)
    return qchan.unitary_from_angles(float(theta), float(phi))


def gate_channel(u, noise: NoiseModel, duration: float) -> np.ndarray:
    """PTM of a realized gate, with white dephasing over gate plus gap if enabled."""
    ptm = qchan.ptm_from_unitary(u)
    if noise.dephasing:
        ptm = qchan.dephasing_ptm(np.exp(-(duration + noise.gap) / noise.t2)) @ ptm
    return ptm


# ----------------------------------------------------------------- histograms

def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Independent child streams derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def pulse_energy_histogram(n: int, pulse: PulseShape, noise: NoiseModel, rng) -> np.ndarray:
    """Energies of ``n`` consecutive pulses relative to the nominal area.

    Each pulse is scaled by an independent jitter factor and by the on-power
    drift sampled at the pulse time (pulses ``pulse_interval_s`` apart).
    """
    if n < 1:
        raise ValueError("need at least one pulse")
    rng = check_rng(rng)
    jitter = 1.0 + noise.energy_jitter_rel * rng.standard_normal(n)
    drift = np.ones(n)
    if noise.drift is not None and noise.drift.power_std_rel > 0:
        ou = OrnsteinUhlenbeck(noise.drift.reversion_time_s, noise.drift.power_std_rel, rng)
        drift[0] += ou.x
        for k in range(1, n):
            drift[k] += ou.step(noise.pulse_interval_s)
    return jitter * drift


def write_histogram_csv(path, samples, *, seed, noise: NoiseModel, pulse: PulseShape) -> None:
    """One sample per line after ``#`` metadata lines."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed: {seed}\n")
        fh.write(f"# pulse: rise={pulse.rise_time!r} fall={pulse.fall_time!r} plateau={pulse.plateau!r} "
                 f"area={pulse.area!r}\n")
        fh.write(f"# energy_jitter_rel: {noise.energy_jitter_rel!r}\n")
        if noise.drift is None:
            fh.write("# drift: none\n")
        else:
            d = noise.drift
            fh.write(f"# drift: reversion_time_s={d.reversion_time_s!r} power_std_rel={d.power_std_rel!r} "
                     f"extinction_std_db={d.extinction_std_db!r}\n")
        fh.write(f"# pulse_interval_s: {noise.pulse_interval_s!r}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["energy_rel"])
        for x in samples:
            writer.writerow([f"{x:.12g}"])


def with_noise(noise: NoiseModel, **changes) -> NoiseModel:
    return replace(noise, **changes)
