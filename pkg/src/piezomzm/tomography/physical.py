"""Physical GST: maximum likelihood over three physical gate parameters."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .dataset import GstDataset, PhysicalParams
from .likelihood import BinomialLoss, neg_loglik, saturated_loglik
from .models import BlockEvaluator, physical_gateset
from .profile import ProfileInterval, profile_interval
from .validation import ConvergenceError, check_dataset

PARAM_NAMES = ("dtheta", "theta_i", "phi_i")
# below this the I-gate axis is not identifiable
THETA_I_FLAT = 1e-7


class PhysicalGST(BaseEstimator):
    """Fit ``(dtheta, theta_i, phi_i)`` to GST count data.

    Gx and Gy rotate by ``pi/2 + dtheta`` about fixed axes ``0`` and ``pi/2``;
    Gi rotates by ``theta_i`` about ``phi_i``. SPAM is ideal. The fit runs
    over circuits of growing germ-section length; at every stage local
    Nelder-Mead searches start from each value in ``phi_starts`` (seeded on a
    coarse ``dtheta_grid`` x ``theta_i_grid`` at the first stage). Intervals
    are profile-likelihood intervals at a log-likelihood drop of
    ``delta_loglik``.

    Attributes
    ----------
    params_ : PhysicalParams
    intervals_ : dict of ProfileInterval
    neg_loglik_ : float
        Negative log-likelihood relative to the saturated model.
    """

    def __init__(self, phi_starts=(0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi),
                 dtheta_grid=tuple(np.linspace(-0.2, 0.2, 41)), theta_i_grid=(0.0, 0.03, 0.1, 0.3),
                 delta_loglik=1.0, xatol=1e-10, max_iter=4000, intervals=True):
        self.phi_starts = phi_starts
        self.dtheta_grid = dtheta_grid
        self.theta_i_grid = theta_i_grid
        self.delta_loglik = delta_loglik
        self.xatol = xatol
        self.max_iter = max_iter
        self.intervals = intervals

    def _objective(self, data: GstDataset, keep=None):
        circuits = data.circuits
        d_counts, shots = data.d_counts, data.shots
        if keep is not None:
            circuits = [c for c, k in zip(circuits, keep) if k]
            d_counts, shots = d_counts[keep], shots[keep]
        ev = BlockEvaluator(circuits)
        loss = BinomialLoss(d_counts, shots)

        def nll(x):
            return loss(ev.probabilities(physical_gateset(*x)))[0]

        return nll

    def _search(self, nll, starts, xatol, simplex_step=None, restart=True):
        opts = {"xatol": xatol, "fatol": 1e-12, "maxiter": self.max_iter, "maxfev": 4 * self.max_iter}
        best, nit = None, 0
        for x0 in starts:
            o = dict(opts)
            if simplex_step is not None:
                o["initial_simplex"] = np.vstack([x0, x0 + np.diag(simplex_step)])
            res = minimize(nll, x0, method="Nelder-Mead", options=o)
            nit += res.nit
            if best is None or res.fun < best.fun:
                best = res
        if not restart:
            return best, nit
        # restart from the best point; Nelder-Mead often stalls on the first pass
        res = minimize(nll, best.x, method="Nelder-Mead", options=opts)
        return res, nit + res.nit

    def _seed(self, nll):
        """Best coarse-grid point for each azimuth start.

        Ideal gates predict probabilities of exactly 0 or 1 for some circuits,
        so ``dtheta = 0`` can sit on a likelihood barrier; the grid puts the
        local search on the right side of it.
        """
        starts = []
        for phi0 in self.phi_starts:
            best = None
            for dt in self.dtheta_grid:
                for th in self.theta_i_grid:
                    x = np.array([dt, th, phi0])
                    f = nll(x)
                    if best is None or f < best[0]:
                        best = (f, x)
            starts.append(best[1])
        return starts

    def fit(self, data, y=None):
        data = check_dataset(data)
        lengths = np.array([c.germ_length for c in data.circuits])
        # grow the germ-section length so long circuits cannot pull the search
        # into an aliased basin
        top = int(lengths.max())
        stages = sorted({L for L in (0, 1, 2, 4, 8) if L < top} | {top})
        x = None
        n_iter = 0
        for k, L in enumerate(stages):
            nll_L = self._objective(data, lengths <= L)
            last = k == len(stages) - 1
            if x is None:
                starts = self._seed(nll_L)
            elif k == 1:
                # first stage where the idle axis becomes visible
                starts = [x] + [np.array([x[0], max(abs(x[1]), 1e-3), phi0]) for phi0 in self.phi_starts]
            else:
                starts = [x]
            # warm stages only refine, so the simplex starts small
            step = None if k < 2 else np.array([1e-3, 1e-3, 1e-2])
            res, nit = self._search(nll_L, starts, self.xatol if last else 1e-5, step, restart=last or k < 2)
            n_iter += nit
            x = res.x
        nll = self._objective(data)
        if not res.success:
            raise ConvergenceError(f"physical GST did not converge: {res.message}", diagnostics={"nit": n_iter})
        params = PhysicalParams(*res.x)
        x_hat = params.as_array()
        self.params_ = params
        self.neg_loglik_ = float(nll(x_hat))
        self.loglik_ = saturated_loglik(data.d_counts, data.shots) - self.neg_loglik_
        self.n_iter_ = int(n_iter)
        self.flat_phi_ = params.theta_i < THETA_I_FLAT
        self.intervals_ = self._intervals(nll, x_hat) if self.intervals else {}
        self.n_circuits_ = len(data)
        self.metadata_ = dict(data.metadata)
        return self

    def _intervals(self, nll, x_hat):
        d = self.delta_loglik
        out = {}
        out["dtheta"] = profile_interval(nll, x_hat, 0, delta=d)
        out["theta_i"] = profile_interval(nll, x_hat, 1, delta=d, limits=(0.0, np.inf),
                                          bounds=[(-np.inf, np.inf), (0.0, np.inf), (-np.inf, np.inf)])
        if self.flat_phi_:
            out["phi_i"] = ProfileInterval(float(x_hat[2]), 0.0, 2.0 * np.pi, False, False)
        else:
            iv = profile_interval(nll, x_hat, 2, delta=d, limits=(x_hat[2] - np.pi, x_hat[2] + np.pi),
                                  bounds=[(-np.inf, np.inf), (0.0, np.inf), (-np.inf, np.inf)])
            if not (iv.lower_bounded or iv.upper_bounded):
                iv = ProfileInterval(iv.estimate, 0.0, 2.0 * np.pi, False, False)
            out["phi_i"] = iv
        return out

    def predict(self, circuits) -> np.ndarray:
        """Dark-state probabilities of ``circuits`` under the fitted gates."""
        check_is_fitted(self, "params_")
        return BlockEvaluator(circuits).probabilities(self.params_.gateset())

    def score(self, data, y=None) -> float:
        """Log-likelihood of ``data`` under the fitted model."""
        data = check_dataset(data)
        nll = neg_loglik(self.predict(data.circuits), data.d_counts, data.shots)[0]
        return saturated_loglik(data.d_counts, data.shots) - nll

    def sigma(self, name: str) -> float:
        """Gaussian-equivalent standard error implied by the profile interval."""
        iv = self.intervals_[name]
        if not iv.bounded:
            return float("inf")
        return iv.half_width / np.sqrt(2.0 * self.delta_loglik)

    def report(self):
        from .report import physical_report

        check_is_fitted(self, "params_")
        diag = {"n_iter": self.n_iter_, "n_circuits": self.n_circuits_, "delta_loglik": self.delta_loglik,
                "common_dtheta": "enforced", "phi_i_identifiable": not self.flat_phi_}
        return physical_report(self.params_, self.intervals_, neg_loglik=self.neg_loglik_,
                               loglik=self.loglik_, diagnostics=diag, metadata=self.metadata_)


def fit_physical_gst(data, **kw):
    """Fit the physical model and return its :class:`FitReport`."""
    return PhysicalGST(**kw).fit(data).report()
