"""Gate-set models and fast circuit probabilities.

A gate set holds one 4x4 PTM per gate label plus a prepared state ``rho``
and the "dark" effect ``E`` (the D state, which does not fluoresce) as Pauli
vectors, so ``P(D) = E . G_n ... G_1 . rho``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import qchan
from .circuits import GATES, Circuit

RHO_S = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
EFFECT_D = np.array([1.0, 0.0, 0.0, -1.0]) / np.sqrt(2.0)

GATE_AXES = {"Gx": 0.0, "Gy": 0.5 * np.pi}


@dataclass
class GateSet:
    gates: dict
    rho: np.ndarray = field(default_factory=lambda: RHO_S.copy())
    effect: np.ndarray = field(default_factory=lambda: EFFECT_D.copy())

    def stacked(self) -> np.ndarray:
        return np.stack([np.asarray(self.gates[g], dtype=float) for g in GATES])

    def gauge_transform(self, m) -> "GateSet":
        """``G -> M G M^-1``, ``rho -> M rho``, ``E^T -> E^T M^-1``."""
        m = np.asarray(m, dtype=float)
        minv = np.linalg.inv(m)
        return GateSet({g: m @ r @ minv for g, r in self.gates.items()},
                       m @ self.rho, minv.T @ self.effect)

    def copy(self) -> "GateSet":
        return GateSet({g: np.array(r, dtype=float) for g, r in self.gates.items()},
                       self.rho.copy(), self.effect.copy())


def target_unitaries() -> dict:
    return {
        "Gx": qchan.unitary_from_angles(0.5 * np.pi, 0.0),
        "Gy": qchan.unitary_from_angles(0.5 * np.pi, 0.5 * np.pi),
        "Gi": qchan.I2.copy(),
    }


def ideal_gateset() -> GateSet:
    return GateSet({g: qchan.ptm_from_unitary(u) for g, u in target_unitaries().items()})


def physical_unitaries(dtheta: float, theta_i: float, phi_i: float) -> dict:
    """Gates of the three-parameter model: shared pi/2 error plus a leaky I."""
    th = 0.5 * np.pi + dtheta
    return {
        "Gx": qchan.unitary_from_angles(th, GATE_AXES["Gx"]),
        "Gy": qchan.unitary_from_angles(th, GATE_AXES["Gy"]),
        "Gi": qchan.unitary_from_angles(theta_i, phi_i),
    }


def physical_gateset(dtheta: float, theta_i: float, phi_i: float) -> GateSet:
    return GateSet({g: qchan.ptm_from_unitary(u) for g, u in physical_unitaries(dtheta, theta_i, phi_i).items()})


_INDEX = {g: k for k, g in enumerate(GATES)}


class BlockEvaluator:
    """Circuit probabilities computed per block (prep, germ power, meas).

    Products of each distinct preparation, measurement and germ power are
    formed once per call, so cost scales with the number of distinct blocks
    rather than with total circuit length.
    """

    def __init__(self, circuits):
        circuits = list(circuits)
        self.circuits = circuits
        preps, meas, germs = {}, {}, {}
        pi, mi, gi, pw = [], [], [], []
        for c in circuits:
            pi.append(preps.setdefault(c.prep, len(preps)))
            mi.append(meas.setdefault(c.meas, len(meas)))
            gi.append(germs.setdefault(c.germ, len(germs)))
            pw.append(c.power)
        self.preps = [tuple(_INDEX[g] for g in p) for p in preps]
        self.meas = [tuple(_INDEX[g] for g in m) for m in meas]
        self.germs = [tuple(_INDEX[g] for g in gm) for gm in germs]
        self.prep_idx = np.array(pi, dtype=int)
        self.meas_idx = np.array(mi, dtype=int)
        self.germ_idx = np.array(gi, dtype=int)
        self.power = np.array(pw, dtype=int)
        self.max_power = int(self.power.max()) if circuits else 0
        pairs = {}
        self.block_idx = np.array([pairs.setdefault((g, p), len(pairs)) for g, p in zip(gi, pw)], dtype=int)
        self.block_germ = np.array([g for g, _ in pairs], dtype=int)
        self.block_power = np.array([p for _, p in pairs], dtype=int)

    def probabilities(self, gs: GateSet) -> np.ndarray:
        G = gs.stacked()
        states = np.empty((len(self.preps), 4))
        for k, seq in enumerate(self.preps):
            v = gs.rho
            for g in seq:
                v = G[g] @ v
            states[k] = v
        effects = np.empty((len(self.meas), 4))
        for k, seq in enumerate(self.meas):
            e = gs.effect
            for g in reversed(seq):
                e = e @ G[g]
            effects[k] = e
        base = np.empty((len(self.germs), 4, 4))
        for k, seq in enumerate(self.germs):
            m = np.eye(4)
            for g in seq:
                m = G[g] @ m
            base[k] = m
        powers = np.empty((self.max_power + 1, len(self.germs), 4, 4))
        powers[0] = np.eye(4)
        for p in range(1, self.max_power + 1):
            powers[p] = base @ powers[p - 1]
        # every distinct (germ, power) block against every prep and meas
        blocks = powers[self.block_power, self.block_germ]
        table = effects[None] @ blocks @ states.T[None]
        return table[self.block_idx, self.meas_idx, self.prep_idx]


class StepEvaluator:
    """Gate-by-gate evaluation that also returns derivatives.

    Circuits are padded with an exact identity so all of them advance in
    lock step; the forward states and backward effects give the gradient of
    any weighted sum of probabilities with respect to every gate entry.
    """

    def __init__(self, circuits):
        circuits = list(circuits)
        self.circuits = circuits
        T = max((len(c) for c in circuits), default=0)
        idx = np.full((len(circuits), T), len(GATES), dtype=int)
        for n, c in enumerate(circuits):
            g = [_INDEX[x] for x in c.gates]
            idx[n, :len(g)] = g
        self.idx = idx
        self.T = T
        self.onehot = (idx[:, :, None] == np.arange(len(GATES))[None, None, :]).astype(float)
        # time-major flattening matches the (T, n, 4) pass arrays
        self._oh_flat = self.onehot.transpose(1, 0, 2).reshape(-1, len(GATES))

    def _passes(self, gs: GateSet):
        G = np.concatenate([gs.stacked(), np.eye(4)[None]])
        n = self.idx.shape[0]
        fwd = np.empty((self.T + 1, n, 4))
        fwd[0] = gs.rho
        for t in range(self.T):
            fwd[t + 1] = np.einsum("nab,nb->na", G[self.idx[:, t]], fwd[t])
        bwd = np.empty((self.T + 1, n, 4))
        bwd[self.T] = gs.effect
        for t in range(self.T - 1, -1, -1):
            bwd[t] = np.einsum("na,nab->nb", bwd[t + 1], G[self.idx[:, t]])
        return fwd, bwd

    def probabilities(self, gs: GateSet) -> np.ndarray:
        fwd, _ = self._passes(gs)
        return fwd[-1] @ gs.effect

    def value_and_grad(self, gs: GateSet, loss):
        """Value and gradient of ``loss(p)`` through the circuit probabilities.

        ``loss`` maps the probability vector to ``(value, dvalue/dp)``.
        Returns ``(value, dG, drho, dE)`` with ``dG`` shaped ``(3, 4, 4)``.
        """
        fwd, bwd = self._passes(gs)
        value, w = loss(fwd[-1] @ gs.effect)
        B = bwd[1:].reshape(-1, 4)
        F = fwd[:-1].reshape(-1, 4)
        wt = np.tile(w, self.T)
        dG = np.empty((len(GATES), 4, 4))
        for k in range(len(GATES)):
            dG[k] = (B * (wt * self._oh_flat[:, k])[:, None]).T @ F
        drho = w @ bwd[0]
        dE = w @ fwd[-1]
        return value, dG, drho, dE

    def jacobian(self, gs: GateSet):
        """Per-circuit derivatives ``(dp/dG (n,3,4,4), dp/drho (n,4), dp/dE (n,4))``."""
        fwd, bwd = self._passes(gs)
        dG = np.einsum("ntk,tna,tnb->nkab", self.onehot, bwd[1:], fwd[:-1], optimize=True)
        return dG, bwd[0], fwd[-1]
