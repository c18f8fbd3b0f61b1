import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piezomzm import photonics as ph
from piezomzm.photonics import ArmSpec, CouplerSpec, DeviceSpec, MziSpec, RingSpec

split = st.floats(0.0, 1.0)
phase = st.floats(-10.0, 10.0)


def _is_unitary(m, tol=1e-12):
    return np.linalg.norm(m.conj().T @ m - np.eye(2)) < tol


# ---------------------------------------------------------------- couplers

def test_coupler_examples():
    s = 1 / np.sqrt(2)
    assert np.allclose(ph.coupler_matrix(CouplerSpec(0.5)), [[s, 1j * s], [1j * s, s]], atol=1e-15)
    assert np.allclose(ph.coupler_matrix(CouplerSpec(0.0)), np.eye(2), atol=1e-15)
    m = ph.coupler_matrix(CouplerSpec(0.4))
    assert m[0, 0] == pytest.approx(np.sqrt(0.6)) and m[0, 1] == pytest.approx(1j * np.sqrt(0.4))
    assert _is_unitary(m)


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_coupler_rejects_bad_split(bad):
    with pytest.raises(ValueError):
        CouplerSpec(bad)


def test_negative_losses_and_vpi_rejected():
    with pytest.raises(ValueError):
        CouplerSpec(0.5, -1.0)
    with pytest.raises(ValueError):
        ArmSpec(vpi=0.0)
    with pytest.raises(ValueError):
        ArmSpec(loss_db=-0.5)


def test_voltage_to_phases_examples():
    top, bot = ph.voltage_to_phases(24.0, ArmSpec(24.0))
    assert top - bot == pytest.approx(np.pi)
    top, bot = ph.voltage_to_phases(0.0, ArmSpec(24.0, bias_phase=0.3))
    assert top - bot == pytest.approx(0.3)
    top, bot = ph.voltage_to_phases(12.0, ArmSpec(24.0))
    assert top - bot == pytest.approx(np.pi / 2)
    assert top + bot == 0.0


# ------------------------------------------------------------------- MZIs

def test_mzi_examples_50_50():
    c = CouplerSpec(0.5)
    m = ph.mzi_matrix(c, c, 0.0, 0.0)
    assert abs(m[1, 0]) ** 2 == pytest.approx(1.0, abs=1e-15)
    assert abs(m[0, 0]) ** 2 == pytest.approx(0.0, abs=1e-15)
    m = ph.mzi_matrix(c, c, np.pi / 2, -np.pi / 2)
    assert abs(m[0, 0]) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_single_mzi_40_60_bar_and_cross_minima_by_scan():
    c = CouplerSpec(0.4)
    dphi = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    bar = np.array([abs(ph.mzi_matrix(c, c, d / 2, -d / 2)[0, 0]) ** 2 for d in dphi[::100]])
    assert bar.min() == pytest.approx(0.04, abs=1e-4)
    cross = abs(ph.mzi_matrix(c, c, np.pi / 2, -np.pi / 2)[1, 0]) ** 2
    assert cross < 1e-20


@settings(max_examples=300, deadline=None)
@given(split, split, phase, phase)
def test_lossless_mzi_is_unitary_and_conserves_power(s1, s2, p1, p2):
    m = ph.mzi_matrix(CouplerSpec(s1), CouplerSpec(s2), p1, p2)
    assert _is_unitary(m)
    for col in range(2):
        assert abs(np.sum(np.abs(m[:, col]) ** 2) - 1.0) < 1e-12


@settings(max_examples=200, deadline=None)
@given(split, st.floats(0.0, 10.0), st.floats(0.0, 10.0), phase, phase)
def test_lossy_singular_values_bounded(s, loss_c, loss_a, p1, p2):
    c = CouplerSpec(s, loss_c)
    m = ph.mzi_matrix(c, c, p1, p2, (loss_a, 0.0))
    assert np.linalg.svd(m, compute_uv=False).max() <= 1 + 1e-12


@settings(max_examples=200, deadline=None)
@given(split)
def test_identical_couplers_cross_port_extinguishes_exactly(s):
    c = CouplerSpec(s)
    # differential phase pi sends all power to the bar port
    m = ph.mzi_matrix(c, c, np.pi / 2, -np.pi / 2)
    assert abs(m[1, 0]) ** 2 < 1e-12
    bar_min = min(abs(ph.mzi_matrix(c, c, d / 2, -d / 2)[0, 0]) ** 2 for d in np.linspace(0, 2 * np.pi, 2001))
    t2, k2 = 1 - s, s
    assert bar_min == pytest.approx((t2 - k2) ** 2, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(split, split, split, split, phase, phase, st.sampled_from(["straight", "crossed"]))
def test_lossless_dual_mzi_unitary(a, b, c, d, v1, v2, routing):
    m1 = MziSpec(CouplerSpec(a), CouplerSpec(b))
    m2 = MziSpec(CouplerSpec(c), CouplerSpec(d))
    m = ph.mzm_matrix(DeviceSpec(m1, m2, routing=routing), 10 * v1, 10 * v2)
    assert _is_unitary(m)


def test_perfect_device_on_at_zero():
    dev = ph.perfect_device()
    assert dev.output_power(0.0, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_perfect_device_checkerboard():
    """On where both phases are 0 mod 2pi or both pi mod 2pi; off on the other diagonal."""
    dev = ph.perfect_device(vpi=24.0)
    assert dev.output_power(0.0, 0.0) == pytest.approx(1.0)
    assert dev.output_power(24.0, 24.0) == pytest.approx(1.0)
    assert dev.output_power(24.0, 0.0) < 1e-30
    assert dev.output_power(0.0, 24.0) < 1e-30


def test_topology_and_port_validation():
    with pytest.raises(NotImplementedError):
        DeviceSpec(topology="terminated")
    with pytest.raises(ValueError):
        DeviceSpec(routing="sideways")
    with pytest.raises(ValueError):
        DeviceSpec(designated_output=2)


# --------------------------------------------------------- transmission maps

def test_vectorized_grid_matches_pointwise():
    dev = ph.uniform_device(0.4)
    g1, g2 = np.linspace(-40, 40, 9), np.linspace(-30, 50, 7)
    tm = ph.transmission_map(dev, g1, g2)
    oracle = np.array([[dev.output_power(a, b) for b in g2] for a in g1])
    assert np.allclose(tm.power * tm.peak_power, oracle, atol=1e-14)


def test_one_point_map_is_one():
    tm = ph.transmission_map(ph.uniform_device(0.4), [3.0], [-7.0])
    assert tm.power.shape == (1, 1) and tm.power[0, 0] == 1.0


def test_perfect_map_dense():
    grid = np.linspace(-48, 48, 201)
    tm = ph.transmission_map(ph.perfect_device(24.0), grid, grid)
    assert tm.power.max() == 1.0
    assert tm.power.min() <= 1e-10


def test_rabi_is_sqrt_power():
    grid = np.linspace(-30, 30, 21)
    tm = ph.transmission_map(ph.uniform_device(0.4), grid, grid)
    assert np.array_equal(tm.rabi, np.sqrt(tm.power))


def test_map_periodic_in_two_vpi():
    dev = ph.uniform_device(0.4, vpi=24.0)
    g = np.linspace(-20, 20, 15)
    base = ph.transmission_map(dev, g, g).power
    assert np.allclose(ph.transmission_map(dev, g + 48.0, g).power, base, atol=1e-12)
    assert np.allclose(ph.transmission_map(dev, g, g + 48.0).power, base, atol=1e-12)


def test_imperfect_map_is_deformed():
    grid = np.linspace(-48, 48, 97)
    perfect = ph.transmission_map(ph.perfect_device(), grid, grid).power
    skew = ph.transmission_map(ph.uniform_device(0.4), grid, grid).power
    assert np.max(np.abs(perfect - skew)) > 0.05


def test_empty_grid_rejected():
    with pytest.raises(ValueError):
        ph.transmission_map(ph.perfect_device(), [], [0.0])


def test_map_csv_layout(tmp_path):
    tm = ph.transmission_map(ph.perfect_device(), [0.0, 12.0], [0.0, 24.0, 48.0])
    path = tmp_path / "m.csv"
    tm.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "v1\\v2,0,24,48"
    assert rows[1].split(",")[0] == "0" and len(rows) == 3


# ------------------------------------------------------------- extinction

def test_perfect_extinction_capped():
    res = ph.optimize_extinction(ph.perfect_device(), (-48, 48))
    assert res.extinction_db >= 100 and res.extinction_db <= 120


def test_perfect_on_state_vs_dense_oracle():
    dev = ph.perfect_device()
    grid = np.linspace(-48, 48, 401)
    oracle = ph._power_grid(dev, grid, grid).max()
    assert ph.optimize_extinction(dev, (-48, 48)).p_on >= 0.999 * oracle


def test_single_mzi_bar_extinction_closed_form():
    c = CouplerSpec(0.4)
    res = ph.optimize_extinction(MziSpec(c, c), (-48, 48))
    assert res.extinction_db == pytest.approx(-10 * np.log10(0.04), abs=0.1)
    assert res.extinction_db == pytest.approx(14.0, abs=0.1)


def test_dual_mzi_compensates_imperfect_couplers():
    dev = ph.uniform_device(0.4)
    res = ph.optimize_extinction(dev, (-48, 48))
    assert res.extinction_db >= 60
    # independent oracle: a dense grid over one 2*vpi period reaches near-zero power
    grid = np.linspace(-24, 24, 2001)
    assert ph._power_grid(dev, grid, grid).min() <= 1e-6


def test_extinction_bad_range():
    with pytest.raises(ValueError):
        ph.optimize_extinction(ph.perfect_device(), (5, 5))


def test_extinction_budget_exhaustion_signalled():
    with pytest.raises(ph.ExtinctionNotConverged):
        ph.optimize_extinction(ph.uniform_device(0.4), (-48, 48), maxiter=2)


# ------------------------------------------------------------------ rings

def test_ring_critical_coupling():
    r = RingSpec(1.0, 1.0)
    assert ph.ring_transmission(r) == 0.0
    assert ph.ring_extinction_db(r) == float("inf")


def test_ring_ten_db():
    r = RingSpec(1.0, 0.519)
    assert ph.ring_extinction_db(r) == pytest.approx(10.0, abs=0.02)
    assert ph.coupling_ratio_for_extinction(10.0) == pytest.approx(0.519, abs=1e-3)


def test_ring_decoupled_limit():
    assert ph.ring_transmission(RingSpec(1.0, 1e-9)) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 100.0), st.booleans())
def test_coupling_ratio_round_trip(er, over):
    x = ph.coupling_ratio_for_extinction(er, overcoupled=over)
    assert ph.ring_extinction_db(RingSpec(1.0, x)) == pytest.approx(er, rel=1e-9)


def test_ring_from_q():
    r = ph.RingSpec.from_q(1e6, 2 * np.pi * 400e12, 1.0)
    assert r.coupling_rate == pytest.approx(r.intrinsic_rate)
    with pytest.raises(ValueError):
        RingSpec(0.0, 1.0)


# ------------------------------------------------------------ loss budget

def test_loss_budget_examples():
    assert ph.loss_budget([]).total_db == 0.0
    b = ph.loss_budget([("grating", 9.5), ("grating", 9.5), ("MZI", 1.5), ("MZI", 1.5), ("routing", 0.4)])
    assert b.total_db == pytest.approx(22.4)
    assert [lbl for lbl, _ in b.breakdown] == ["grating", "grating", "MZI", "MZI", "routing"]
    assert ph.loss_budget([("x", 3.3)]).total_db == 3.3
    assert "total" in str(b)
    with pytest.raises(ValueError):
        ph.loss_budget([("bad", -1.0)])
