"""Profile-likelihood intervals for small parameter vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize


@dataclass(frozen=True)
class ProfileInterval:
    estimate: float
    lower: float
    upper: float
    lower_bounded: bool = True
    upper_bounded: bool = True

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def bounded(self) -> bool:
        return self.lower_bounded and self.upper_bounded


def curvature_sigma(nll, x, i, h=1e-4) -> float:
    """``1/sqrt(d2 nll / dx_i^2)`` from a central difference; a step-size guess."""
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)
    e[i] = h
    d2 = (nll(x + e) - 2.0 * nll(x) + nll(x - e)) / h ** 2
    return 1.0 / np.sqrt(d2) if d2 > 0 else np.inf


def hessian(f, x, h) -> np.ndarray:
    """Central-difference Hessian with per-coordinate steps ``h``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    f0 = f(x)
    H = np.empty((n, n))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h[a]
        H[a, a] = (f(x + ea) - 2.0 * f0 + f(x - ea)) / h[a] ** 2
        for b in range(a):
            eb = np.zeros(n)
            eb[b] = h[b]
            H[a, b] = H[b, a] = (f(x + ea + eb) - f(x + ea - eb) - f(x - ea + eb) + f(x - ea - eb)) / (
                4.0 * h[a] * h[b])
    return H


def _inner_minimizer(nll, x_hat, i, bounds, xatol, scale, slope):
    """Profile of component ``i``: the free components re-minimized at each value.

    The start is the previous optimum shifted along ``slope`` (the ridge
    direction of the local quadratic model); the initial simplex is sized by
    ``scale`` rather than the coordinate magnitude.
    """
    free = [k for k in range(len(x_hat)) if k != i]
    free_bounds = None if bounds is None else [bounds[k] for k in free]
    x_hat = np.asarray(x_hat, dtype=float)
    state = {"v": x_hat[i], "y": x_hat[free].copy()}

    def profile(v):
        def f(y):
            z = np.empty(len(x_hat))
            z[free] = y
            z[i] = v
            return nll(z)

        if not free:
            return f(np.empty(0))
        y0 = state["y"] + slope * (v - state["v"])
        if free_bounds is not None:
            y0 = np.clip(y0, [b[0] for b in free_bounds], [b[1] for b in free_bounds])
        simplex = np.vstack([y0, y0 + np.diag(scale)])
        res = minimize(f, y0, method="Nelder-Mead", bounds=free_bounds,
                       options={"xatol": xatol, "fatol": 1e-9, "maxiter": 2000, "initial_simplex": simplex})
        state["v"], state["y"] = v, res.x
        return res.fun

    return profile


def profile_interval(nll, x_hat, i, *, delta: float = 1.0, step: float | None = None,
                     limits=(-np.inf, np.inf), bounds=None, xatol: float | None = None,
                     max_expand: int = 40) -> ProfileInterval:
    """Interval where the profiled ``nll`` stays within ``delta`` of its minimum.

    ``nll`` is the negative log-likelihood of the full vector; for each trial
    value of component ``i`` the remaining components are re-optimized (warm
    started). The search on each side stops at ``limits``; a side that never
    rises by ``delta`` is reported as unbounded and placed at the limit.
    ``xatol`` defaults to a small fraction of the curvature-implied sigmas.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    f_hat = nll(x_hat)
    n = len(x_hat)
    sig = np.array([curvature_sigma(nll, x_hat, k) for k in range(n)])
    sig = np.where(np.isfinite(sig) & (sig > 0), sig, 0.1)
    free = [k for k in range(n) if k != i]
    H = hessian(nll, x_hat, 0.1 * sig) if n > 1 else np.zeros((1, 1))
    try:
        slope = -np.linalg.solve(H[np.ix_(free, free)], H[free, i])
    except np.linalg.LinAlgError:
        slope = np.zeros(len(free))
    if not np.all(np.isfinite(slope)):
        slope = np.zeros(len(free))
    scale = 0.1 * sig[free]
    if xatol is None:
        # the profile error is quadratic in the inner error, so 1e-4 sigma is ample
        xatol = 1e-4 * float(np.min(sig[free])) if free else 1e-9
    if step is None:
        step = np.sqrt(2.0 * delta) * sig[i]
    ends = {}
    for side, limit in ((-1, limits[0]), (+1, limits[1])):
        profile = _inner_minimizer(nll, x_hat, i, bounds, xatol, scale, slope)

        def g(v):
            return profile(v) - f_hat - delta

        inside = x_hat[i]
        trial = step
        found = None
        for _ in range(max_expand):
            v = x_hat[i] + side * trial
            if (side < 0 and v <= limit) or (side > 0 and v >= limit):
                v = limit
                if g(v) > 0:
                    found = v
                break
            if g(v) > 0:
                found = v
                break
            inside = v
            trial *= 1.6
        if found is None:
            ends[side] = (limit, False)
            continue
        # the warm start must come from the inside point for brentq's evaluations
        profile = _inner_minimizer(nll, x_hat, i, bounds, xatol, scale, slope)
        root = brentq(lambda v: profile(v) - f_hat - delta, inside, found,
                      xtol=1e-6 * step, rtol=1e-10)
        ends[side] = (root, True)
    return ProfileInterval(float(x_hat[i]), float(ends[-1][0]), float(ends[1][0]),
                           ends[-1][1], ends[1][1])
