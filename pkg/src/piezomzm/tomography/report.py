"""Fit reports and the gate-error table."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .. import qchan
from ..dynamics import extinction_from_theta
from .models import physical_unitaries, target_unitaries


@dataclass
class FitReport:
    kind: str
    gates: dict
    infidelity: dict
    diamond: dict
    infidelity_err: dict = field(default_factory=dict)
    diamond_err: dict = field(default_factory=dict)
    params: object = None
    intervals: dict = field(default_factory=dict)
    neg_loglik: float = float("nan")
    loglik: float = float("nan")
    diagnostics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def recomputed_metrics(self):
        """Metrics rebuilt from the stored estimates alone."""
        return gate_metrics(self.kind, self.gates, self.params)

    def write(self, text_path, csv_path) -> None:
        with open(text_path, "w") as fh:
            fh.write(f"kind: {self.kind}\n")
            if self.params is not None:
                for name in ("dtheta", "theta_i", "phi_i"):
                    fh.write(f"{name}: {getattr(self.params, name)!r}\n")
                for name, iv in self.intervals.items():
                    fh.write(f"{name}_interval: {iv.lower!r} {iv.upper!r} "
                             f"bounded={iv.lower_bounded and iv.upper_bounded}\n")
            fh.write(f"neg_loglik: {self.neg_loglik!r}\n")
            fh.write(f"loglik: {self.loglik!r}\n")
            for key in sorted(self.diagnostics):
                fh.write(f"diag.{key}: {self.diagnostics[key]}\n")
            for key in sorted(self.metadata):
                fh.write(f"meta.{key}: {self.metadata[key]}\n")
            for g in sorted(self.gates):
                flat = " ".join(repr(float(x)) for x in np.asarray(self.gates[g]).ravel())
                fh.write(f"ptm.{g}: {flat}\n")
        rows = report_metrics(self)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gate", "process_infidelity", "process_infidelity_err",
                        "diamond_error", "diamond_error_err", "implied_extinction_db"])
            for r in rows:
                w.writerow([r.gate, f"{r.infidelity:.9g}", f"{r.infidelity_err:.9g}",
                            f"{r.diamond:.9g}", f"{r.diamond_err:.9g}",
                            "" if r.extinction_db is None else f"{r.extinction_db:.6g}"])


@dataclass(frozen=True)
class MetricRow:
    gate: str
    infidelity: float
    infidelity_err: float
    diamond: float
    diamond_err: float
    extinction_db: float | None = None

    def __str__(self):
        ext = "" if self.extinction_db is None else f"  ER {self.extinction_db:.1f} dB"
        return (f"{self.gate:<6s} infidelity {1e3 * self.infidelity:.2f} ± {1e3 * self.infidelity_err:.2f} e-3"
                f"  diamond {1e2 * self.diamond:.2f} ± {1e2 * self.diamond_err:.2f} e-2{ext}")


def physical_metrics(dtheta: float, theta_i: float, phi_i: float):
    """Closed-form infidelity and diamond error of the three-parameter model."""
    est = physical_unitaries(dtheta, theta_i, phi_i)
    tgt = target_unitaries()
    inf, dia = {}, {}
    for g in ("Gx", "Gy", "Gi"):
        inf[g] = qchan.process_infidelity(qchan.ptm_from_unitary(est[g]), qchan.ptm_from_unitary(tgt[g]))
        dia[g] = qchan.diamond_error_unitary(tgt[g], est[g])
    return inf, dia


def gate_metrics(kind: str, gates: dict, params=None):
    if kind == "physical":
        return physical_metrics(params.dtheta, params.theta_i, params.phi_i)
    tgt = target_unitaries()
    inf, dia = {}, {}
    for g, est in gates.items():
        t = qchan.ptm_from_unitary(tgt[g])
        inf[g] = qchan.process_infidelity(est, t)
        dia[g] = qchan.diamond_error_bound(est, t)
    return inf, dia


def report_metrics(fit: FitReport) -> list:
    """Table rows; physical fits list the shared Gx/Gy error once, then Gi."""
    if fit.kind == "physical":
        theta_i = fit.params.theta_i
        ext = extinction_from_theta(theta_i) if theta_i > 0 else float("inf")
        return [
            MetricRow("Gx/Gy", fit.infidelity["Gx"], fit.infidelity_err.get("Gx", 0.0),
                      fit.diamond["Gx"], fit.diamond_err.get("Gx", 0.0)),
            MetricRow("Gi", fit.infidelity["Gi"], fit.infidelity_err.get("Gi", 0.0),
                      fit.diamond["Gi"], fit.diamond_err.get("Gi", 0.0), ext),
        ]
    return [MetricRow(g, fit.infidelity[g], fit.infidelity_err.get(g, 0.0),
                      fit.diamond[g], fit.diamond_err.get(g, 0.0))
            for g in ("Gx", "Gy", "Gi")]


def physical_report(params, intervals=None, **kw) -> FitReport:
    """Report for given physical parameters, errors propagated through the intervals."""
    inf, dia = physical_metrics(params.dtheta, params.theta_i, params.phi_i)
    inf_err, dia_err = {}, {}
    intervals = intervals or {}
    spans = {"Gx": intervals.get("dtheta"), "Gy": intervals.get("dtheta"), "Gi": intervals.get("theta_i")}
    for g, iv in spans.items():
        if iv is None:
            inf_err[g] = dia_err[g] = 0.0
            continue
        vals_i, vals_d = [], []
        for v in (iv.lower, iv.upper):
            if g == "Gi":
                i2, d2 = physical_metrics(params.dtheta, v, params.phi_i)
            else:
                i2, d2 = physical_metrics(v, params.theta_i, params.phi_i)
            vals_i.append(i2[g])
            vals_d.append(d2[g])
        inf_err[g] = 0.5 * abs(vals_i[1] - vals_i[0]) if min(vals_i) < inf[g] < max(vals_i) else max(
            abs(x - inf[g]) for x in vals_i)
        dia_err[g] = 0.5 * abs(vals_d[1] - vals_d[0]) if min(vals_d) < dia[g] < max(vals_d) else max(
            abs(x - dia[g]) for x in vals_d)
    gates = {g: qchan.ptm_from_unitary(u)
             for g, u in physical_unitaries(params.dtheta, params.theta_i, params.phi_i).items()}
    return FitReport("physical", gates, inf, dia, inf_err, dia_err, params=params,
                     intervals=dict(intervals), **kw)
