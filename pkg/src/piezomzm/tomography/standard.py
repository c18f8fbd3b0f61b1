"""Standard GST: unconstrained PTMs fitted by maximum likelihood."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import qchan
from .circuits import GATES
from .design import FIDUCIALS
from .likelihood import PMIN, BinomialLoss, neg_loglik, saturated_loglik
from .models import BlockEvaluator, GateSet, StepEvaluator, ideal_gateset
from .validation import ConvergenceError, IllConditionedError, check_dataset

N_GATE_PARAMS = 16 * len(GATES)


def _fid_gates(fiducials):
    return [tuple(f) for f in fiducials]


def lgst(data, fiducials=FIDUCIALS, cond_limit: float = 1e8) -> GateSet:
    """Linear-inversion estimate from fiducial-sandwich frequencies.

    With ``P0[j, i]`` the frequency of ``F_i F_j`` and ``Pk[j, i]`` that of
    ``F_i G_k F_j``, a rank-4 SVD ``P0 = U S V^T`` gives gates
    ``S^-1/2 U^T Pk V S^-1/2`` up to gauge; the gauge is then fixed by
    matching the measurement-fiducial rows to their ideal values.
    """
    fids = _fid_gates(fiducials)
    n = len(fids)
    if n < 4:
        raise IllConditionedError("linear inversion needs at least four fiducials")

    def freq(gates):
        if not data.has(gates):
            raise ValueError(f"dataset lacks the fiducial-sandwich circuit {''.join(gates) or '{}'}")
        return data.frequency(gates)

    P0 = np.array([[freq(fids[i] + fids[j]) for i in range(n)] for j in range(n)])
    Pk = {g: np.array([[freq(fids[i] + (g,) + fids[j]) for i in range(n)] for j in range(n)]) for g in GATES}
    r = np.array([freq(fids[j]) for j in range(n)])  # E^T F_j rho
    U, S, Vt = np.linalg.svd(P0)
    if S[3] <= 0 or S[0] / S[3] > cond_limit:
        raise IllConditionedError(f"fiducial Gram matrix is ill-conditioned (cond = {S[0] / max(S[3], 1e-300):.3g})")
    U4, V4 = U[:, :4], Vt[:4].T
    rs = np.sqrt(S[:4])
    A = U4 * rs  # rows E^T F_j in the SVD gauge
    B = (V4 * rs).T  # columns F_i rho
    Ainv = (U4 / rs).T
    Binv = V4 / rs
    gates = {g: Ainv @ Pk[g] @ Binv for g in GATES}
    rho = Ainv @ r
    effect = A[fids.index(())] if () in fids else np.linalg.lstsq(B.T, r, rcond=None)[0]

    ideal = ideal_gateset()
    A_t = np.array([_effect_row(ideal, f) for f in fids])
    # A = A_t T, so T maps the SVD gauge into the target one
    T = np.linalg.lstsq(A_t, A, rcond=None)[0]
    if np.linalg.cond(T) > cond_limit:
        raise IllConditionedError("gauge map from linear inversion is singular")
    return GateSet(gates, rho, effect).gauge_transform(T)


def _effect_row(gs: GateSet, gates) -> np.ndarray:
    e = gs.effect
    for g in reversed(gates):
        e = e @ gs.gates[g]
    return e


def _pack(gs: GateSet, spam: bool) -> np.ndarray:
    x = gs.stacked().ravel()
    if spam:
        x = np.concatenate([x, gs.rho, gs.effect])
    return x


def _unpack(x, spam: bool, base: GateSet) -> GateSet:
    G = x[:N_GATE_PARAMS].reshape(len(GATES), 4, 4)
    gates = {g: G[k] for k, g in enumerate(GATES)}
    if spam:
        return GateSet(gates, x[N_GATE_PARAMS:N_GATE_PARAMS + 4].copy(), x[N_GATE_PARAMS + 4:].copy())
    return GateSet(gates, base.rho.copy(), base.effect.copy())


def gauge_distance(gs: GateSet, target: GateSet, spam_weight: float = 1.0) -> float:
    d = sum(np.sum((gs.gates[g] - target.gates[g]) ** 2) for g in GATES)
    if spam_weight:
        d += spam_weight * (np.sum((gs.rho - target.rho) ** 2) + np.sum((gs.effect - target.effect) ** 2))
    return float(d)


def gauge_optimize(gs: GateSet, target: GateSet | None = None, spam_weight: float = 1.0):
    """Gauge matrix ``M`` (seeded at identity) minimizing the Frobenius distance to ``target``.

    A quasi-Newton pass is refined by Powell's derivative-free method.
    Returns ``(transformed gate set, M)``.
    """
    target = ideal_gateset() if target is None else target

    def f(m):
        M = m.reshape(4, 4)
        if abs(np.linalg.det(M)) < 1e-12:
            return 1e12
        return gauge_distance(gs.gauge_transform(M), target, spam_weight)

    m0 = np.eye(4).ravel()
    res = minimize(f, m0, method="BFGS", options={"gtol": 1e-10})
    res = minimize(f, res.x, method="Powell", options={"xtol": 1e-10, "ftol": 1e-14, "maxfev": 20000})
    M = res.x.reshape(4, 4)
    return gs.gauge_transform(M), M


class StandardGST(BaseEstimator):
    """Maximum-likelihood GST with unconstrained real 4x4 PTMs.

    No positivity or trace preservation is imposed. The fit is seeded by
    linear inversion, minimizes the binomial negative log-likelihood with
    L-BFGS-B and an analytic gradient, and finally gauge-fixes the estimate
    toward the ideal gates. 1-sigma errors come from the observed Fisher
    information.

    Parameters
    ----------
    fit_spam : bool
        Fit the prepared state and the D-state effect as free 4-vectors.
    tol : float
        Relative log-likelihood change that ends the search.
    max_iter : int
    gauge_spam_weight : float
        Weight of the SPAM terms in the gauge objective.
    cond_limit : float
        Largest condition number accepted by linear inversion.
    fiducials : sequence of gate tuples
    """

    def __init__(self, fit_spam=True, tol=1e-10, max_iter=2000, gauge_spam_weight=1.0, cond_limit=1e8,
                 fiducials=FIDUCIALS, uncertainties=True):
        self.fit_spam = fit_spam
        self.tol = tol
        self.max_iter = max_iter
        self.gauge_spam_weight = gauge_spam_weight
        self.cond_limit = cond_limit
        self.fiducials = fiducials
        self.uncertainties = uncertainties

    def fit(self, data, y=None):
        data = check_dataset(data)
        seed = lgst(data, self.fiducials, self.cond_limit)
        if not self.fit_spam:
            ideal = ideal_gateset()
            seed, _ = gauge_optimize(seed, ideal, self.gauge_spam_weight)
            seed = GateSet(seed.gates, ideal.rho, ideal.effect)
        ev = StepEvaluator(data.circuits)
        d_counts, shots = data.d_counts, data.shots
        spam = self.fit_spam

        loss = BinomialLoss(d_counts, shots)

        def fun(x):
            gs = _unpack(x, spam, seed)
            val, dG, drho, dE = ev.value_and_grad(gs, loss)
            g = dG.ravel()
            if spam:
                g = np.concatenate([g, drho, dE])
            return val, g

        x0 = _pack(seed, spam)
        res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                       options={"ftol": self.tol, "gtol": 1e-12, "maxiter": self.max_iter,
                                "maxfun": 4 * self.max_iter, "maxcor": 30})
        if res.status == 1:
            raise ConvergenceError(f"standard GST hit the iteration budget: {res.message}",
                                   diagnostics={"nit": int(res.nit), "neg_loglik": float(res.fun),
                                                "grad_norm": float(np.linalg.norm(res.jac))})
        raw = _unpack(res.x, spam, seed)
        # pinned SPAM still leaves gauge directions that preserve it, so fix the gauge either way
        fixed, M = gauge_optimize(raw, spam_weight=self.gauge_spam_weight)
        self.lgst_ = seed
        self.raw_gateset_ = raw
        self.gateset_ = fixed
        self.gauge_matrix_ = M
        self.neg_loglik_ = float(res.fun)
        self.loglik_ = saturated_loglik(d_counts, shots) - self.neg_loglik_
        self.n_iter_ = int(res.nit)
        self.optimizer_message_ = str(res.message)
        self.n_circuits_ = len(data)
        self.metadata_ = dict(data.metadata)
        self.cov_ = self._covariance(ev, fixed, data) if self.uncertainties else None
        return self

    def _covariance(self, ev, gs, data):
        dG, drho, dE = ev.jacobian(gs)
        J = dG.reshape(len(data), -1)
        if self.fit_spam:
            J = np.hstack([J, drho, dE])
        p = np.clip(ev.probabilities(gs), PMIN, 1.0 - PMIN)
        w = data.shots / (p * (1.0 - p))
        F = J.T @ (w[:, None] * J)
        # gauge directions are exactly flat; pinv drops them
        return np.linalg.pinv(F, rcond=1e-10, hermitian=True)

    def gate_errors(self):
        """1-sigma errors of each gate's infidelity and diamond bound."""
        check_is_fitted(self, "gateset_")
        targets = ideal_gateset()
        inf_err, dia_err = {}, {}
        for k, g in enumerate(GATES):
            if self.cov_ is None:
                inf_err[g] = dia_err[g] = 0.0
                continue
            sl = slice(16 * k, 16 * (k + 1))
            C = self.cov_[sl, sl]
            T = targets.gates[g]
            est = self.gateset_.gates[g]
            grad_inf = -T.ravel() / 4.0
            inf_err[g] = float(np.sqrt(max(grad_inf @ C @ grad_inf, 0.0)))
            h = 1e-7
            grad_dia = np.empty(16)
            for a in range(16):
                e = np.zeros(16)
                e[a] = h
                up = qchan.diamond_error_bound(est + e.reshape(4, 4), T)
                dn = qchan.diamond_error_bound(est - e.reshape(4, 4), T)
                grad_dia[a] = (up - dn) / (2 * h)
            dia_err[g] = float(np.sqrt(max(grad_dia @ C @ grad_dia, 0.0)))
        return inf_err, dia_err

    def predict(self, circuits) -> np.ndarray:
        """Dark-state probabilities of ``circuits`` under the fitted gate set."""
        check_is_fitted(self, "gateset_")
        return BlockEvaluator(circuits).probabilities(self.gateset_)

    def score(self, data, y=None) -> float:
        data = check_dataset(data)
        nll = neg_loglik(self.predict(data.circuits), data.d_counts, data.shots)[0]
        return saturated_loglik(data.d_counts, data.shots) - nll

    def report(self):
        from .report import FitReport, gate_metrics

        check_is_fitted(self, "gateset_")
        gates = {g: np.array(self.gateset_.gates[g]) for g in GATES}
        inf, dia = gate_metrics("standard", gates)
        inf_err, dia_err = self.gate_errors()
        diag = {"n_iter": self.n_iter_, "n_circuits": self.n_circuits_, "optimizer": self.optimizer_message_,
                "fit_spam": self.fit_spam, "gauge": "frobenius-to-target",
                "uncertainty": "observed Fisher, delta method"}
        return FitReport("standard", gates, inf, dia, inf_err, dia_err, neg_loglik=self.neg_loglik_,
                         loglik=self.loglik_, diagnostics=diag, metadata=self.metadata_)


def fit_standard_gst(data, **kw):
    """Fit unconstrained GST and return its :class:`FitReport`."""
    return StandardGST(**kw).fit(data).report()
