"""Transfer-matrix model of the piezo-actuated dual-MZI modulator.

Every optical element is a 2x2 complex amplitude matrix acting on the two
waveguide modes. Directional couplers use the symmetric convention
``[[t, i k], [i k, t]]`` and arm phases are applied push-pull, so only the
differential phase of each interferometer matters for the output powers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from ._validation import check_grid, check_nonnegative

__all__ = [
    "CouplerSpec",
    "ArmSpec",
    "MziSpec",
    "DeviceSpec",
    "RingSpec",
    "TransmissionMap",
    "ExtinctionResult",
    "LossBudget",
    "ExtinctionNotConverged",
    "db_to_power",
    "coupler_matrix",
    "voltage_to_phases",
    "mzi_matrix",
    "mzm_matrix",
    "transmission_map",
    "optimize_extinction",
    "ring_transmission",
    "ring_extinction_db",
    "coupling_ratio_for_extinction",
    "loss_budget",
    "perfect_device",
    "uniform_device",
]

EXTINCTION_CAP_DB = 120.0


class ExtinctionNotConverged(RuntimeError):
    """Local refinement exhausted its iteration budget."""


def db_to_power(loss_db: float) -> float:
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class CouplerSpec:
    """Directional coupler; ``power_split`` is the fraction crossing over."""

    power_split: float = 0.5
    insertion_loss_db: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.power_split <= 1.0:
            raise ValueError(f"power_split must lie in [0, 1], got {self.power_split}")
        check_nonnegative(self.insertion_loss_db, "insertion_loss_db")


@dataclass(frozen=True)
class ArmSpec:
    """Push-pull actuation of one interferometer's arm pair."""

    vpi: float = 24.0
    bias_phase: float = 0.0
    loss_db: float = 0.0

    def __post_init__(self):
        if not self.vpi > 0.0:
            raise ValueError(f"vpi must be positive, got {self.vpi}")
        check_nonnegative(self.loss_db, "loss_db")


@dataclass(frozen=True)
class MziSpec:
    coupler_in: CouplerSpec = field(default_factory=CouplerSpec)
    coupler_out: CouplerSpec = field(default_factory=CouplerSpec)
    arm: ArmSpec = field(default_factory=ArmSpec)
    # extra loss on the bottom arm only, to model unbalanced arms
    loss_imbalance_db: float = 0.0

    def matrix(self, v: float) -> np.ndarray:
        top, bottom = voltage_to_phases(v, self.arm)
        losses = (self.arm.loss_db, self.arm.loss_db + self.loss_imbalance_db)
        return mzi_matrix(self.coupler_in, self.coupler_out, top, bottom, losses)

    def output_power(self, v: float, port: int = 0, input_port: int = 0) -> float:
        return float(abs(self.matrix(v)[port, input_port]) ** 2)


@dataclass(frozen=True)
class DeviceSpec:
    """Two interferometers in series.

    ``routing`` is ``"straight"`` (output ``k`` of the first stage feeds input
    ``k`` of the second) or ``"crossed"``. Light enters at ``input_port`` and
    the ion sees ``designated_output``.
    """

    mzi1: MziSpec = field(default_factory=MziSpec)
    mzi2: MziSpec = field(default_factory=MziSpec)
    routing: str = "straight"
    input_port: int = 0
    designated_output: int = 0
    topology: str = "series"

    def __post_init__(self):
        if self.topology == "terminated":
            raise NotImplementedError(
                "terminated-output topology (one first-stage output dumped, extra coupler) is not modeled")
        if self.topology != "series":
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.routing not in ("straight", "crossed"):
            raise ValueError(f"routing must be 'straight' or 'crossed', got {self.routing!r}")
        for name in ("input_port", "designated_output"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")

    def output_power(self, v1: float, v2: float) -> float:
        m = mzm_matrix(self, v1, v2)
        return float(abs(m[self.designated_output, self.input_port]) ** 2)


_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


def coupler_matrix(c: CouplerSpec) -> np.ndarray:
    k = np.sqrt(c.power_split)
    t = np.sqrt(1.0 - c.power_split)
    a = np.sqrt(db_to_power(c.insertion_loss_db))
    return a * np.array([[t, 1j * k], [1j * k, t]], dtype=complex)


def voltage_to_phases(v: float, arm: ArmSpec) -> tuple[float, float]:
    """Symmetric push-pull phases; their difference is ``pi v / vpi + bias``."""
    diff = np.pi * v / arm.vpi + arm.bias_phase
    return 0.5 * diff, -0.5 * diff


def mzi_matrix(c_in: CouplerSpec, c_out: CouplerSpec, phi_top: float, phi_bottom: float,
               arm_loss_db=0.0) -> np.ndarray:
    """Coupler, phase-shifting arms, coupler.

    ``arm_loss_db`` is one value for both arms or a ``(top, bottom)`` pair.
    """
    losses = np.broadcast_to(np.asarray(arm_loss_db, dtype=float), (2,))
    amp = np.sqrt(10.0 ** (-losses / 10.0))
    arms = np.diag(amp * np.exp(1j * np.array([phi_top, phi_bottom])))
    return coupler_matrix(c_out) @ arms @ coupler_matrix(c_in)


def mzm_matrix(dev: DeviceSpec, v1: float, v2: float) -> np.ndarray:
    first = dev.mzi1.matrix(v1)
    if dev.routing == "crossed":
        first = _SWAP @ first
    return dev.mzi2.matrix(v2) @ first


def _power_grid(dev: DeviceSpec, v1, v2) -> np.ndarray:
    """Designated-output power on the outer product grid, vectorized."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)

    def stage(mzi: MziSpec, v):
        diff = np.pi * v / mzi.arm.vpi + mzi.arm.bias_phase
        amp = np.sqrt(10.0 ** (-np.array([mzi.arm.loss_db, mzi.arm.loss_db + mzi.loss_imbalance_db]) / 10.0))
        arms = np.zeros(v.shape + (2, 2), dtype=complex)
        arms[..., 0, 0] = amp[0] * np.exp(0.5j * diff)
        arms[..., 1, 1] = amp[1] * np.exp(-0.5j * diff)
        return coupler_matrix(mzi.coupler_out) @ arms @ coupler_matrix(mzi.coupler_in)

    first = stage(dev.mzi1, v1)
    if dev.routing == "crossed":
        first = _SWAP @ first
    second = stage(dev.mzi2, v2)
    # amplitude[i, j] = row(second_j) . column(first_i)
    col = first[:, :, dev.input_port]
    row = second[:, dev.designated_output, :]
    amp = np.einsum("jb,ib->ij", row, col)
    return np.abs(amp) ** 2


@dataclass(frozen=True)
class TransmissionMap:
    v1: np.ndarray
    v2: np.ndarray
    power: np.ndarray
    peak_power: float

    @property
    def rabi(self) -> np.ndarray:
        """Normalized Rabi rate, the square root of the normalized power."""
        return np.sqrt(self.power)

    def to_csv(self, path, values: str = "power") -> None:
        """Header row is the v2 grid, first column the v1 grid."""
        data = self.rabi if values == "rabi" else self.power
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["v1\\v2"] + [f"{v:.9g}" for v in self.v2])
            for v, row in zip(self.v1, data):
                writer.writerow([f"{v:.9g}"] + [f"{x:.9g}" for x in row])


def transmission_map(dev: DeviceSpec, v1_grid, v2_grid) -> TransmissionMap:
    """Designated-output power over a voltage grid, normalized to its maximum."""
    v1 = check_grid(v1_grid, "v1_grid")
    v2 = check_grid(v2_grid, "v2_grid")
    power = _power_grid(dev, v1, v2)
    peak = float(power.max())
    if peak <= 0.0:
        raise FloatingPointError("device transmits no light anywhere on the grid")
    return TransmissionMap(v1, v2, power / peak, peak)


@dataclass(frozen=True)
class ExtinctionResult:
    v_on: tuple
    v_off: tuple
    p_on: float
    p_off: float
    extinction_db: float
    iterations: int


def _refine(fun, x0, bounds, fscale, maxiter):
    res = minimize(fun, x0, method="Nelder-Mead", bounds=bounds,
                   options={"xatol": 1e-10, "fatol": 1e-12 * fscale, "maxiter": maxiter,
                            "initial_simplex": _simplex(x0, bounds)})
    if not res.success:
        raise ExtinctionNotConverged(f"Nelder-Mead did not converge in {maxiter} iterations: {res.message}")
    return res


def _simplex(x0, bounds):
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    span = np.array([hi - lo for lo, hi in bounds])
    pts = [x0]
    for i in range(n):
        p = x0.copy()
        step = 0.01 * span[i]
        p[i] = p[i] + step if p[i] + step <= bounds[i][1] else p[i] - step
        pts.append(p)
    return np.array(pts)


def optimize_extinction(dev, v_range, *, grid_points: int = 101, maxiter: int = 500) -> ExtinctionResult:
    """Find on/off voltages and the extinction ratio between them.

    ``dev`` is a :class:`DeviceSpec` (two voltages) or a single
    :class:`MziSpec` (one voltage, output port 0). A coarse grid seeds a
    bounded Nelder-Mead refinement of each state. The result is reported in
    dB and capped at 120 dB.
    """
    lo, hi = (float(x) for x in v_range)
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValueError(f"v_range must be a finite increasing pair, got {v_range}")
    grid = np.linspace(lo, hi, grid_points)
    if isinstance(dev, MziSpec):
        ndim = 1
        power = np.array([dev.output_power(v) for v in grid])

        def fpower(x):
            return dev.output_power(x[0])
    else:
        ndim = 2
        power = _power_grid(dev, grid, grid)

        def fpower(x):
            return dev.output_power(x[0], x[1])

    bounds = [(lo, hi)] * ndim
    i_on = np.unravel_index(np.argmax(power), power.shape)
    i_off = np.unravel_index(np.argmin(power), power.shape)
    scale = float(power.max())
    on = _refine(lambda x: -fpower(x), grid[list(i_on)], bounds, scale, maxiter)
    off = _refine(fpower, grid[list(i_off)], bounds, scale, maxiter)
    if -on.fun >= scale:
        p_on, v_on = float(-on.fun), on.x
    else:
        p_on, v_on = scale, grid[list(i_on)]
    v_on = tuple(float(x) for x in v_on)
    p_off = float(off.fun)
    v_off = tuple(float(x) for x in off.x)
    if p_off <= p_on * 10.0 ** (-EXTINCTION_CAP_DB / 10.0):
        ext = EXTINCTION_CAP_DB
    else:
        ext = float(10.0 * np.log10(p_on / p_off))
    return ExtinctionResult(v_on, v_off, float(p_on), p_off, ext, int(on.nit + off.nit))


@dataclass(frozen=True)
class RingSpec:
    """All-pass ring; rates share one angular-frequency unit."""

    intrinsic_rate: float
    coupling_rate: float
    detuning: float = 0.0
    q_factor: float | None = None

    def __post_init__(self):
        if not (self.intrinsic_rate > 0 and self.coupling_rate > 0):
            raise ValueError("ring loss and coupling rates must be positive")
        if self.q_factor is not None and not self.q_factor > 0:
            raise ValueError("q_factor must be positive")

    @classmethod
    def from_q(cls, q_intrinsic: float, omega0: float, coupling_ratio: float, detuning: float = 0.0):
        """Build from an intrinsic quality factor and ``kappa_ext / kappa_int``."""
        k_int = omega0 / q_intrinsic
        return cls(k_int, coupling_ratio * k_int, detuning, q_intrinsic)


def ring_transmission(r: RingSpec) -> float:
    """Through-port power of an all-pass ring in steady state.

    ``|(i D + (k_int - k_ext)/2) / (i D + (k_int + k_ext)/2)|^2`` which on
    resonance reduces to ``((k_int - k_ext) / (k_int + k_ext))^2``.
    """
    num = 1j * r.detuning + 0.5 * (r.intrinsic_rate - r.coupling_rate)
    den = 1j * r.detuning + 0.5 * (r.intrinsic_rate + r.coupling_rate)
    return float(abs(num / den) ** 2)


def ring_extinction_db(r: RingSpec) -> float:
    t = ring_transmission(r)
    return float("inf") if t == 0.0 else float(-10.0 * np.log10(t))


def coupling_ratio_for_extinction(extinction_db: float, overcoupled: bool = False) -> float:
    """``kappa_ext / kappa_int`` that yields the given on-resonance extinction."""
    root = np.sqrt(10.0 ** (-extinction_db / 10.0))
    x = (1.0 - root) / (1.0 + root)
    return float(1.0 / x if overcoupled else x)


@dataclass(frozen=True)
class LossBudget:
    total_db: float
    breakdown: tuple

    def __str__(self):
        lines = [f"{label:<24s}{loss:8.2f} dB" for label, loss in self.breakdown]
        lines.append(f"{'total':<24s}{self.total_db:8.2f} dB")
        return "\n".join(lines)


def loss_budget(components: Sequence[tuple[str, float]]) -> LossBudget:
    items = []
    for label, loss in components:
        check_nonnegative(loss, f"loss of {label!r}")
        items.append((str(label), float(loss)))
    return LossBudget(float(sum(loss for _, loss in items)), tuple(items))


def uniform_device(power_split: float = 0.5, vpi: float = 24.0, **kw) -> DeviceSpec:
    """Dual-MZI with the same coupler on all four positions."""
    c = CouplerSpec(power_split)
    arm = ArmSpec(vpi=vpi)
    mzi = MziSpec(c, c, arm)
    return DeviceSpec(mzi, mzi, **kw)


def perfect_device(vpi: float = 24.0) -> DeviceSpec:
    return uniform_device(0.5, vpi)
