import numpy as np
import pytest
from sklearn.base import clone

from piezomzm import qchan
from piezomzm.tomography import (FIDUCIALS, ConvergenceError, GateSet, IllConditionedError, PhysicalParams,
                                 StandardGST, exact_probabilities, fit_standard_gst, gauge_optimize,
                                 ideal_gateset, lgst, make_design, physical_gateset, simulate_dataset)
from piezomzm.tomography.standard import gauge_distance

DESIGN = make_design(4)
TRUTH = PhysicalParams(-0.0301, 0.0804, np.pi)
CLOSED = {"Gx": np.sin(0.0301 / 2) ** 2, "Gy": np.sin(0.0301 / 2) ** 2, "Gi": np.sin(0.0804 / 2) ** 2}


@pytest.fixture(scope="module")
def exact_truth_fit():
    data = simulate_dataset(DESIGN, TRUTH, shots=1000, infinite=True)
    return StandardGST().fit(data), data


def test_ideal_infinite_shot_is_exact():
    data = simulate_dataset(DESIGN, ideal_gateset(), shots=1000, infinite=True)
    rep = fit_standard_gst(data)
    assert all(v < 1e-9 for v in rep.infidelity.values())


def test_infinite_shot_truth_recovered(exact_truth_fit):
    model, _ = exact_truth_fit
    inf, _ = model.gate_errors()
    rep = model.report()
    for g, want in CLOSED.items():
        assert rep.infidelity[g] == pytest.approx(want, rel=0.01)
    assert rep.infidelity["Gx"] == pytest.approx(2.27e-4, rel=0.01)
    assert rep.infidelity["Gi"] == pytest.approx(1.62e-3, rel=0.01)


def test_gauge_fixed_estimate_reproduces_data(exact_truth_fit):
    model, data = exact_truth_fit
    assert np.allclose(model.predict(data.circuits), exact_probabilities(data.circuits, TRUTH), atol=1e-7)
    assert model.score(data) == pytest.approx(model.loglik_, abs=1e-6)


def test_lgst_inverts_exact_data():
    data = simulate_dataset(DESIGN, TRUTH, shots=1000, infinite=True)
    seed = lgst(data)
    truth = physical_gateset(*TRUTH.as_array())
    # linear inversion is exact up to gauge on exact data
    fixed, _ = gauge_optimize(seed, truth)
    for g in truth.gates:
        assert np.allclose(fixed.gates[g], truth.gates[g], atol=1e-8)


def test_lgst_rejects_degenerate_fiducials():
    data = simulate_dataset(DESIGN, ideal_gateset(), shots=1000, infinite=True)
    with pytest.raises(IllConditionedError):
        lgst(data, fiducials=FIDUCIALS[:3])
    # Gx and GxGxGx leave the state in the same plane as {} and GxGx only with Gy missing
    with pytest.raises(IllConditionedError):
        lgst(data, fiducials=((), ("Gx",), ("Gx", "Gx"), ("Gx", "Gx", "Gx")))


def test_gauge_optimize_undoes_random_gauge():
    rng = np.random.default_rng(2)
    truth = physical_gateset(*TRUTH.as_array())
    m = np.eye(4) + 0.05 * rng.standard_normal((4, 4))
    m[0] = [1, 0, 0, 0]
    fixed, M = gauge_optimize(truth.gauge_transform(m), truth)
    assert gauge_distance(fixed, truth) < 1e-12
    assert np.allclose(M @ m, np.eye(4) * (M @ m)[0, 0], atol=1e-6)


def test_gauge_invariant_probabilities_after_fixing(exact_truth_fit):
    model, data = exact_truth_fit
    from piezomzm.tomography import BlockEvaluator

    ev = BlockEvaluator(data.circuits)
    assert np.allclose(ev.probabilities(model.raw_gateset_), ev.probabilities(model.gateset_), atol=1e-10)


def test_fixed_spam_mode():
    data = simulate_dataset(DESIGN, TRUTH, shots=1000, infinite=True)
    model = StandardGST(fit_spam=False).fit(data)
    assert np.allclose(model.raw_gateset_.rho, ideal_gateset().rho)
    for g, want in CLOSED.items():
        assert model.report().infidelity[g] == pytest.approx(want, rel=0.01)


def test_iteration_budget_signalled():
    data = simulate_dataset(DESIGN, TRUTH, shots=1000, rng=3)
    with pytest.raises(ConvergenceError) as err:
        StandardGST(max_iter=2, uncertainties=False).fit(data)
    assert "nit" in err.value.diagnostics


def test_estimator_api(exact_truth_fit):
    model, _ = exact_truth_fit
    assert model.get_params()["tol"] == 1e-10
    assert not hasattr(clone(model), "gateset_")
    assert model.cov_.shape == (56, 56)


def test_report_round_trip(exact_truth_fit):
    model, _ = exact_truth_fit
    rep = model.report()
    assert rep.recomputed_metrics() == (rep.infidelity, rep.diamond)
    for g, ptm in rep.gates.items():
        t = qchan.ptm_from_unitary({"Gx": qchan.unitary_from_angles(np.pi / 2, 0),
                                    "Gy": qchan.unitary_from_angles(np.pi / 2, np.pi / 2),
                                    "Gi": np.eye(2)}[g])
        assert rep.diamond[g] == qchan.diamond_error_bound(ptm, t)


def test_uncertainty_delta_method_sane():
    data = simulate_dataset(DESIGN, TRUTH, shots=1000, rng=7)
    model = StandardGST().fit(data)
    inf_err, dia_err = model.gate_errors()
    for g in CLOSED:
        assert 1e-5 < inf_err[g] < 1e-3
        assert dia_err[g] > 0
    assert StandardGST(uncertainties=False).fit(data).gate_errors()[0]["Gx"] == 0.0


@pytest.mark.slow
def test_monte_carlo_calibration():
    """Infidelities fall within 3 sigma of the closed form in >= 90 % of 50 replications."""
    hits = 0
    total = 0
    for seed in range(50):
        data = simulate_dataset(DESIGN, TRUTH, shots=1000, rng=1000 + seed)
        model = StandardGST().fit(data)
        rep = model.report()
        for g, want in CLOSED.items():
            total += 1
            hits += abs(rep.infidelity[g] - want) <= 3 * rep.infidelity_err[g]
    assert hits / total >= 0.9


def test_gateset_gauge_transform_identity():
    gs = ideal_gateset()
    same = gs.gauge_transform(np.eye(4))
    assert all(np.array_equal(same.gates[g], gs.gates[g]) for g in gs.gates)
    assert isinstance(same, GateSet)
