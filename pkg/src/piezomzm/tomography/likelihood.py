"""Binomial likelihood of two-outcome circuit data.

The objective is written per outcome as ``N [f log(f/p) - f + p]``, which is
non-negative, vanishes at ``p = f`` and sums over the two outcomes to the
binomial negative log-likelihood relative to the saturated model. Below
``PMIN`` each term is continued by a convex quadratic so unconstrained
models that predict probabilities outside ``[0, 1]`` are penalized rather
than rewarded. For an outcome never observed the continuation bottoms out at
``N * PMIN / 2`` at ``p = 0``, so exact zero-frequency data leave a small
positive floor.
"""
from __future__ import annotations

import numpy as np
from scipy.special import xlogy

PMIN = 1e-4


def _outcome_terms(n, N, p, pmin):
    """Per-outcome deviance, its derivative in ``p``, for counts ``n`` of ``N``."""
    f = np.divide(n, N, out=np.zeros_like(n), where=N > 0)
    zero = n <= 0
    # switch no later than the minimum at p = f so the continuation stays >= 0
    s = np.where(zero, pmin, np.minimum(pmin, f))
    hi = p >= s
    ph = np.where(hi, p, s)
    val = xlogy(n, f) - xlogy(n, ph) - n + N * ph
    der = N - np.divide(n, ph)
    d = p - s
    # zero counts: N*p continued as N*(pmin + p^2/pmin)/2, minimal at p = 0
    low_zero = N * 0.5 * (pmin + p * p / pmin)
    low_zero_der = N * p / pmin
    # positive counts: second-order Taylor expansion at pmin (convex)
    curv = np.divide(n, s * s, out=np.zeros_like(n), where=~zero)
    low_pos = val + der * d + 0.5 * curv * d * d
    low_pos_der = der + curv * d
    val = np.where(hi, val, np.where(zero, low_zero, low_pos))
    der = np.where(hi, der, np.where(zero, low_zero_der, low_pos_der))
    return val, der


def saturated_loglik(d_counts, shots) -> float:
    d_counts = np.asarray(d_counts, dtype=float)
    shots = np.asarray(shots, dtype=float)
    f = d_counts / shots
    return float(np.sum(xlogy(d_counts, f) + xlogy(shots - d_counts, 1.0 - f)))


def loglik(p, d_counts, shots, pmin: float = PMIN) -> float:
    """Binomial log-likelihood without the ``log C(n, k)`` constant."""
    return -neg_loglik(p, d_counts, shots, pmin)[0] + saturated_loglik(d_counts, shots)


class BinomialLoss:
    """``p -> (neg_loglik, gradient)`` for fixed counts, with the constants precomputed."""

    def __init__(self, d_counts, shots, pmin: float = PMIN):
        self.d_counts = np.asarray(d_counts, dtype=float)
        self.shots = np.asarray(shots, dtype=float)
        self.bright = self.shots - self.d_counts
        self.pmin = pmin
        f = self.d_counts / self.shots
        self.sat = xlogy(self.d_counts, f) + xlogy(self.bright, 1.0 - f)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        pm = self.pmin
        pc = np.clip(p, pm, 1.0 - pm)
        q = 1.0 - pc
        # in range: plain binomial terms (the linear parts of the two outcomes cancel)
        val = self.sat - self.d_counts * np.log(pc) - self.bright * np.log(q)
        grad = self.bright / q - self.d_counts / pc
        out = np.flatnonzero((p < pm) | (p > 1.0 - pm))
        if out.size:
            po, d, b, n = p[out], self.d_counts[out], self.bright[out], self.shots[out]
            vd, gd = _outcome_terms(d, n, po, pm)
            vb, gb = _outcome_terms(b, n, 1.0 - po, pm)
            val[out] = vd + vb
            grad[out] = gd - gb
        # per-circuit values first; summing afterwards avoids cancellation
        return float(np.sum(val)), grad


def neg_loglik(p, d_counts, shots, pmin: float = PMIN):
    """Negative log-likelihood relative to the saturated model, and its gradient in ``p``."""
    return BinomialLoss(d_counts, shots, pmin)(p)
