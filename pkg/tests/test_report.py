import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from piezomzm.tomography import PhysicalParams, ProfileInterval, physical_metrics, report_metrics
from piezomzm.tomography.report import FitReport, MetricRow, gate_metrics, physical_report


def test_table_values_from_physical_parameters():
    inf, dia = physical_metrics(-0.0301, 0.0804, 3.16)
    assert inf["Gx"] == inf["Gy"]
    assert inf["Gx"] == pytest.approx(0.23e-3, rel=0.02)
    assert inf["Gi"] == pytest.approx(1.62e-3, rel=0.02)
    assert dia["Gx"] == pytest.approx(1.50e-2, rel=0.005)
    assert dia["Gi"] == pytest.approx(4.02e-2, rel=0.005)


def test_zero_parameters_give_zero_errors():
    inf, dia = physical_metrics(0.0, 0.0, 1.3)
    assert max(inf.values()) < 1e-15 and max(dia.values()) < 1e-15


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(0.0, 0.3), st.floats(0, 2 * np.pi))
def test_closed_forms(dtheta, theta_i, phi_i):
    inf, dia = physical_metrics(dtheta, theta_i, phi_i)
    assert inf["Gy"] == pytest.approx(np.sin(dtheta / 2) ** 2, abs=1e-14)
    assert inf["Gi"] == pytest.approx(np.sin(theta_i / 2) ** 2, abs=1e-14)
    assert dia["Gx"] == pytest.approx(abs(np.sin(dtheta / 2)), abs=1e-12)
    # the leakage phase is invisible in single-gate metrics
    assert physical_metrics(dtheta, theta_i, 0.0)[1]["Gi"] == pytest.approx(dia["Gi"], abs=1e-12)


def _example_report():
    params = PhysicalParams(-0.0301, 0.0804, 3.16)
    intervals = {"dtheta": ProfileInterval(-0.0301, -0.0308, -0.0294),
                 "theta_i": ProfileInterval(0.0804, 0.0798, 0.0810),
                 "phi_i": ProfileInterval(3.16, 3.14, 3.18)}
    return physical_report(params, intervals, neg_loglik=12.5, loglik=-100.0,
                           diagnostics={"common_dtheta": "enforced"}, metadata={"seed": 4})


def test_table_rows_and_implied_extinction():
    rows = report_metrics(_example_report())
    assert [r.gate for r in rows] == ["Gx/Gy", "Gi"]
    assert rows[0].extinction_db is None
    assert rows[1].extinction_db == pytest.approx(25.8, abs=0.05)
    assert rows[1].infidelity_err > 0 and rows[0].diamond_err > 0
    assert "ER 25.8 dB" in str(rows[1])


def test_errors_propagate_through_interval_endpoints():
    rep = _example_report()
    lo, hi = (physical_metrics(-0.0301, t, 3.16)[0]["Gi"] for t in (0.0798, 0.0810))
    assert rep.infidelity_err["Gi"] == pytest.approx(0.5 * (hi - lo))


def test_interval_straddling_zero_uses_largest_excursion():
    params = PhysicalParams(0.0, 0.0, 0.0)
    rep = physical_report(params, {"dtheta": ProfileInterval(0.0, -0.001, 0.002)})
    assert rep.infidelity_err["Gx"] == pytest.approx(np.sin(0.001) ** 2, rel=1e-9)
    assert rep.infidelity_err["Gi"] == 0.0


def test_zero_theta_reports_infinite_extinction():
    rep = physical_report(PhysicalParams(0.0, 0.0, 0.0))
    assert report_metrics(rep)[1].extinction_db == np.inf


def test_write_text_and_csv(tmp_path):
    rep = _example_report()
    rep.write(tmp_path / "r.txt", tmp_path / "m.csv")
    text = (tmp_path / "r.txt").read_text()
    assert "kind: physical" in text
    assert "theta_i: 0.0804" in text
    assert "diag.common_dtheta: enforced" in text and "meta.seed: 4" in text
    assert text.count("ptm.") == 3
    with open(tmp_path / "m.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["gate"] for r in rows] == ["Gx/Gy", "Gi"]
    assert float(rows[0]["process_infidelity"]) == pytest.approx(2.265e-4, rel=1e-3)
    assert float(rows[1]["diamond_error"]) == pytest.approx(4.02e-2, rel=1e-3)
    assert float(rows[1]["implied_extinction_db"]) == pytest.approx(25.82, abs=0.01)
    assert rows[0]["implied_extinction_db"] == ""


def test_recomputed_metrics_match_stored():
    rep = _example_report()
    assert rep.recomputed_metrics() == (rep.infidelity, rep.diamond)


def test_standard_kind_uses_ptms():
    gates = {g: np.eye(4) for g in ("Gx", "Gy", "Gi")}
    inf, dia = gate_metrics("standard", gates)
    assert inf["Gi"] == pytest.approx(0.0, abs=1e-15)
    assert inf["Gx"] == pytest.approx(0.5)
    rep = FitReport("standard", gates, inf, dia)
    rows = report_metrics(rep)
    assert [r.gate for r in rows] == ["Gx", "Gy", "Gi"]
    assert all(r.extinction_db is None for r in rows)


def test_metric_row_formatting():
    row = MetricRow("Gi", 1.62e-3, 0.1e-3, 4.02e-2, 0.2e-2, 25.8)
    assert str(row) == "Gi     infidelity 1.62 ± 0.10 e-3  diamond 4.02 ± 0.20 e-2  ER 25.8 dB"
