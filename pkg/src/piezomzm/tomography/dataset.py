"""Circuit count data: simulation and the line-oriented file format.

Each data line is ``<circuit> <shots> <dark_counts>`` where ``dark_counts``
counts S outcomes, so a circuit that ends in D with certainty records zero.
In memory the complementary D counts are kept, since the model predicts
``P(D)``. Lines starting with ``#`` carry ``key: value`` metadata.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .. import qchan
from ..dynamics import (
    NoiseModel,
    OpticalGateSpec,
    OrnsteinUhlenbeck,
    SequenceContext,
    realize_angles,
)
from .circuits import Circuit, format_circuit, parse_circuit
from .design import GstDesign
from .likelihood import neg_loglik
from .models import EFFECT_D, RHO_S, BlockEvaluator, GateSet, physical_gateset

FORMAT_TAG = "piezomzm-gst-dataset 1"


@dataclass(frozen=True)
class PhysicalParams:
    """Shared pi/2 angle error and the leaky identity's rotation."""

    dtheta: float = 0.0
    theta_i: float = 0.0
    phi_i: float = 0.0

    def __post_init__(self):
        theta, phi = float(self.theta_i), float(self.phi_i)
        if theta < 0.0:
            theta, phi = -theta, phi + np.pi
        object.__setattr__(self, "dtheta", float(self.dtheta))
        object.__setattr__(self, "theta_i", theta)
        object.__setattr__(self, "phi_i", phi % (2.0 * np.pi))

    def as_array(self) -> np.ndarray:
        return np.array([self.dtheta, self.theta_i, self.phi_i])

    def gateset(self) -> GateSet:
        return physical_gateset(self.dtheta, self.theta_i, self.phi_i)


@dataclass(frozen=True)
class OpticalTruth:
    """Gates as produced by the switch, realized pulse by pulse."""

    gates: dict
    noise: NoiseModel = field(default_factory=NoiseModel.quiet)

    @classmethod
    def build(cls, dtheta=0.0, extinction_db=float("inf"), noise: NoiseModel | None = None,
              duration: float = 22.0) -> "OpticalTruth":
        gates = {
            "Gx": OpticalGateSpec.from_angle_error("Gx", dtheta, duration=duration),
            "Gy": OpticalGateSpec.from_angle_error("Gy", dtheta, duration=duration),
            "Gi": OpticalGateSpec("Gi", duration=duration, extinction_db=extinction_db),
        }
        return cls(gates, NoiseModel.quiet() if noise is None else noise)


@dataclass
class GstDataset:
    """Per-circuit shots and D-outcome counts ``d_counts``."""

    circuits: tuple
    shots: np.ndarray
    d_counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.circuits = tuple(self.circuits)
        self.shots = np.asarray(self.shots, dtype=float)
        self.d_counts = np.asarray(self.d_counts, dtype=float)
        n = len(self.circuits)
        if self.shots.shape != (n,) or self.d_counts.shape != (n,):
            raise ValueError("shots and counts must have one entry per circuit")
        if np.any(self.shots <= 0):
            raise ValueError("every circuit needs at least one shot")
        if np.any(self.d_counts < 0) or np.any(self.d_counts > self.shots):
            raise ValueError("counts must lie in [0, shots]")
        self._index = None

    def __len__(self):
        return len(self.circuits)

    @property
    def dark_counts(self) -> np.ndarray:
        """S-outcome counts, the file's third column."""
        return self.shots - self.d_counts

    @property
    def frequencies(self) -> np.ndarray:
        """Observed ``P(D)`` per circuit."""
        return self.d_counts / self.shots

    def frequency(self, gates) -> float:
        """Observed P(D) of the circuit with this gate string."""
        if self._index is None:
            self._index = {c.gates: n for n, c in enumerate(self.circuits)}
        return float(self.frequencies[self._index[tuple(gates)]])

    def has(self, gates) -> bool:
        if self._index is None:
            self._index = {c.gates: n for n, c in enumerate(self.circuits)}
        return tuple(gates) in self._index

    def neg_loglik(self, probabilities) -> float:
        return neg_loglik(probabilities, self.d_counts, self.shots)[0]

    # ------------------------------------------------------------------ io

    def write(self, path) -> None:
        infinite = bool(self.metadata.get("infinite_shot", False))
        with open(path, "w") as fh:
            fh.write(f"# {FORMAT_TAG}\n")
            for key in sorted(self.metadata):
                fh.write(f"# {key}: {self.metadata[key]}\n")
            for c, n, k in zip(self.circuits, self.shots, self.dark_counts):
                if infinite:
                    fh.write(f"{format_circuit(c)} {float(n)!r} {float(k)!r}\n")
                else:
                    fh.write(f"{format_circuit(c)} {int(n)} {int(k)}\n")

    @classmethod
    def read(cls, path) -> "GstDataset":
        circuits, shots, s_counts, meta = [], [], [], {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if ":" in body:
                        key, _, value = body.partition(":")
                        meta[key.strip()] = _parse_meta(value.strip())
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 'circuit shots dark_counts'")
                circuits.append(parse_circuit(parts[0]))
                shots.append(float(parts[1]))
                s_counts.append(float(parts[2]))
        shots = np.array(shots)
        return cls(tuple(circuits), shots, shots - np.array(s_counts), meta)


def _parse_meta(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


# ------------------------------------------------------------- simulation

def _circuits_of(design) -> tuple:
    if isinstance(design, GstDesign):
        return design.sequences
    return tuple(c if isinstance(c, Circuit) else parse_circuit(c) for c in design)


def _seed_sequence(rng) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2 ** 63)))
    if rng is None:
        raise ValueError("simulation needs an explicit seed")
    return np.random.SeedSequence(rng)


def exact_probabilities(circuits, truth) -> np.ndarray:
    """P(D) for deterministic truths (gate sets, physical params, quiet optics)."""
    return BlockEvaluator(circuits).probabilities(_static_gateset(truth))


def _static_gateset(truth) -> GateSet:
    if isinstance(truth, GateSet):
        return truth
    if isinstance(truth, PhysicalParams):
        return truth.gateset()
    if isinstance(truth, OpticalTruth) and truth.noise.is_deterministic:
        ctx = SequenceContext(leakage_phase=truth.noise.leakage_phase)
        gates = {}
        for label, spec in truth.gates.items():
            theta, phi = realize_angles(spec, truth.noise, ctx, None)
            ptm = qchan.ptm_from_unitary(qchan.unitary_from_angles(float(theta), float(phi)))
            if truth.noise.dephasing:
                f = np.exp(-(spec.duration + truth.noise.gap) / truth.noise.t2)
                ptm = qchan.dephasing_ptm(f) @ ptm
            gates[label] = ptm
        return GateSet(gates, RHO_S.copy(), EFFECT_D.copy())
    raise TypeError(f"no static gate set for truth of type {type(truth).__name__}")


def _stochastic_probabilities(circuits, truth: OpticalTruth, seed_seq, realizations: int):
    noise = truth.noise
    exp_rng, *seq_seeds = seed_seq.spawn(len(circuits) + 1)
    exp_rng = np.random.default_rng(exp_rng)
    phase = noise.leakage_phase if noise.leakage_phase is not None else exp_rng.uniform(0.0, 2.0 * np.pi)
    er_ou = pw_ou = None
    if noise.drift is not None:
        er_ou = OrnsteinUhlenbeck(noise.drift.reversion_time_s, noise.drift.extinction_std_db, exp_rng)
        pw_ou = OrnsteinUhlenbeck(noise.drift.reversion_time_s, noise.drift.power_std_rel, exp_rng)
    K = realizations if noise.energy_jitter_rel > 0 else 1
    out = np.empty(len(circuits))
    contexts = []
    for n, c in enumerate(circuits):
        if n:
            if er_ou is not None:
                er_ou.step(noise.sequence_interval_s)
                pw_ou.step(noise.sequence_interval_s)
            if noise.leakage_phase_walk > 0:
                phase += noise.leakage_phase_walk * exp_rng.standard_normal()
        ctx = SequenceContext(
            leakage_phase=float(phase % (2.0 * np.pi)),
            extinction_offset_db=er_ou.x if er_ou is not None else 0.0,
            power_offset_rel=pw_ou.x if pw_ou is not None else 0.0,
        )
        contexts.append(ctx)
        rng = np.random.default_rng(seq_seeds[n])
        state = np.broadcast_to(RHO_S, (K, 4)).copy()
        for label in c.gates:
            spec = truth.gates[label]
            theta, phi = realize_angles(spec, noise, ctx, rng, size=K)
            ptm = qchan.ptm_from_unitaries(qchan.unitaries_from_angles(theta, phi))
            if noise.dephasing:
                f = np.exp(-(spec.duration + noise.gap) / noise.t2)
                ptm = qchan.dephasing_ptm(f) @ ptm
            state = np.einsum("kab,kb->ka", ptm, state)
        out[n] = float(np.mean(state @ EFFECT_D))
    return out, seq_seeds, contexts


def simulate_dataset(design, truth, shots: int = 1000, rng=None, *, infinite: bool = False,
                     realizations: int = 32, metadata: dict | None = None) -> GstDataset:
    """Draw D-outcome counts for every circuit of ``design`` from ``truth``.

    ``truth`` is a :class:`GateSet`, :class:`PhysicalParams` or
    :class:`OpticalTruth`. Stochastic optical truths average the jitter over
    ``realizations`` pulse trains per circuit while drift and the leakage
    phase are frozen within a circuit and evolve between circuits. With
    ``infinite=True`` the counts are exact probabilities times ``shots``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuits = _circuits_of(design)
    stochastic = isinstance(truth, OpticalTruth) and not truth.noise.is_deterministic
    seed_seq = None if (infinite and not stochastic) else _seed_sequence(rng)
    if stochastic:
        probs, seq_seeds, _ = _stochastic_probabilities(circuits, truth, seed_seq, realizations)
    else:
        probs = exact_probabilities(circuits, truth)
        seq_seeds = seed_seq.spawn(len(circuits)) if seed_seq is not None else None
    # round-off residues of exact 0/1 outcomes
    probs = np.clip(probs, 0.0, 1.0)
    probs[probs < 1e-14] = 0.0
    probs[probs > 1.0 - 1e-14] = 1.0
    shot_arr = np.full(len(circuits), float(shots))
    if infinite:
        d_counts = probs * shots
    else:
        # one child stream per circuit keeps counts independent of evaluation order
        d_counts = np.array([np.random.default_rng(s).binomial(shots, p) for s, p in zip(seq_seeds, probs)],
                        dtype=float)
    meta = {
        "infinite_shot": infinite,
        "shots": shots,
        "seed": seed_seq.entropy if seed_seq is not None else "none",
        "truth": describe_truth(truth),
        "spam": "ideal",
        "outcome": "dark_counts = S outcomes",
    }
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        meta["timestamp"] = epoch
    if metadata:
        meta.update(metadata)
    return GstDataset(circuits, shot_arr, d_counts, meta)


def describe_truth(truth) -> str:
    if isinstance(truth, PhysicalParams):
        return (f"physical dtheta={truth.dtheta!r} theta_i={truth.theta_i!r} "
                f"phi_i={truth.phi_i!r}")
    if isinstance(truth, OpticalTruth):
        gi = truth.gates["Gi"]
        gx = truth.gates["Gx"]
        n = truth.noise
        return (f"optical on_power_rel={gx.on_power_rel!r} extinction_db={gi.extinction_db!r} "
                f"jitter={n.energy_jitter_rel!r} drift={'on' if n.drift else 'off'} "
                f"leakage_phase={n.leakage_phase!r}")
    if isinstance(truth, GateSet):
        return "gateset"
    return type(truth).__name__
