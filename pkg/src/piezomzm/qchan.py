"""Single-qubit channel mathematics.

Unitaries are plain ``(2, 2)`` complex arrays and Pauli transfer matrices
(PTMs) are ``(4, 4)`` real arrays in the normalized Pauli basis
``{I, X, Y, Z} / sqrt(2)``. With that normalization the PTM of a unitary is
an orthogonal matrix and the PTM of a trace-preserving map has first row
``(1, 0, 0, 0)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "I2",
    "X",
    "Y",
    "Z",
    "PAULIS",
    "GateAngles",
    "unitary_from_angles",
    "unitaries_from_angles",
    "is_unitary",
    "ptm_from_unitary",
    "ptm_from_unitaries",
    "choi_from_ptm",
    "depolarizing_ptm",
    "dephasing_ptm",
    "process_infidelity",
    "diamond_error_unitary",
    "choi_trace_distance",
    "diamond_error_bound",
]

TWO_PI = 2.0 * np.pi

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([I2, X, Y, Z])

# normalized basis P_j = sigma_j / sqrt(2)
_BASIS = PAULIS / np.sqrt(2.0)


@dataclass(frozen=True)
class GateAngles:
    """Rotation angle ``theta`` about the equatorial axis at azimuth ``phi``."""

    theta: float
    phi: float = 0.0

    def canonical(self) -> "GateAngles":
        """Return the equivalent angles with ``theta, phi`` in ``[0, 2*pi)``.

        A negative rotation is folded onto the opposite axis, which gives the
        same unitary exactly.
        """
        theta, phi = float(self.theta), float(self.phi)
        if theta < 0.0:
            theta, phi = -theta, phi + np.pi
        return GateAngles(theta % TWO_PI, phi % TWO_PI)

    def unitary(self) -> np.ndarray:
        return unitary_from_angles(self.theta, self.phi)


def unitary_from_angles(theta, phi=0.0) -> np.ndarray:
    """``cos(theta/2) I - i sin(theta/2) (cos(phi) X + sin(phi) Y)``.

    Accepts a :class:`GateAngles` as the first argument.
    """
    if isinstance(theta, GateAngles):
        theta, phi = theta.theta, theta.phi
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    off = -1j * s * np.exp(-1j * phi)
    return np.array([[c, off], [-1j * s * np.exp(1j * phi), c]], dtype=complex)


def unitaries_from_angles(theta, phi) -> np.ndarray:
    """Vectorized :func:`unitary_from_angles`; output shape ``(*shape, 2, 2)``."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = -1j * s * np.exp(-1j * phi)
    out[..., 1, 0] = -1j * s * np.exp(1j * phi)
    return out


def is_unitary(u, atol: float = 1e-12) -> bool:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        return False
    return np.linalg.norm(u.conj().T @ u - I2) <= atol


def ptm_from_unitary(u) -> np.ndarray:
    """PTM ``R_jk = tr(P_j U P_k U^dag)`` of the conjugation channel."""
    return ptm_from_unitaries(np.asarray(u, dtype=complex))


def ptm_from_unitaries(u) -> np.ndarray:
    """Batched :func:`ptm_from_unitary` over leading axes."""
    u = np.asarray(u, dtype=complex)
    # U P_k U^dag for every k, then project on P_j
    conj = np.einsum("...ab,kbc,...dc->...kad", u, _BASIS, u.conj())
    r = np.einsum("jba,...kab->...jk", _BASIS, conj)
    return r.real.copy()


def choi_from_ptm(ptm) -> np.ndarray:
    """Unit-trace Choi matrix ``(1/2) sum_ab |a><b| (x) E(|a><b|)``."""
    r = np.asarray(ptm, dtype=float)
    return 0.5 * np.einsum("jk,kba,jcd->acbd", r, _BASIS, _BASIS).reshape(4, 4)


def depolarizing_ptm(p: float) -> np.ndarray:
    """``rho -> (1 - p) rho + p I/2``."""
    return np.diag([1.0, 1.0 - p, 1.0 - p, 1.0 - p])


def dephasing_ptm(factor: float) -> np.ndarray:
    """Phase damping that scales the Bloch x and y components by ``factor``."""
    return np.diag([1.0, factor, factor, 1.0])


def process_infidelity(estimate, target) -> float:
    """``1 - tr(target^T estimate) / 4``.

    For unitary channels this equals ``1 - |tr(U^dag V)|^2 / 4``.
    """
    estimate = np.asarray(estimate, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(1.0 - np.trace(target.T @ estimate) / 4.0)


def diamond_error_unitary(u, v) -> float:
    """Half the diamond distance between conjugation by ``u`` and by ``v``.

    Closed form for a qubit: with ``alpha, beta`` the eigenphases of
    ``U^dag V``, the result is ``sin(delta / 2)`` where ``delta`` is their
    angular separation folded into ``[0, pi]``.
    """
    w = np.asarray(u, dtype=complex).conj().T @ np.asarray(v, dtype=complex)
    lam = np.linalg.eigvals(w)
    lam = lam / np.abs(lam)
    # relative phase is global-phase invariant and already folded into [0, pi]
    delta = abs(np.angle(lam[0] * lam[1].conj()))
    return float(np.sin(delta / 2.0))


def choi_trace_distance(estimate, target) -> float:
    """Half the trace norm of the unit-trace Choi difference.

    A lower bound on the half diamond distance; exact for Pauli channels and
    for pairs of qubit unitaries.
    """
    diff = choi_from_ptm(estimate) - choi_from_ptm(target)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def diamond_error_bound(estimate, target) -> float:
    """Upper bound on the half diamond distance, valid for any linear maps.

    ``d * choi_trace_distance`` with ``d = 2``. Used for unconstrained
    estimates where the closed unitary form does not apply.
    """
    return 2.0 * choi_trace_distance(estimate, target)
