"""Independent oracles shared by the unit and acceptance suites.

Everything here deliberately avoids the library's own fast paths: the
projection oracle is a brute grid search on the constraint boundary and
the subproblem oracle is a dense projected-gradient method, so agreement
with the package is evidence, not circularity.
"""

from __future__ import annotations

import numpy as np

from blindphase.measure import FunctionalStack


def boundary_grid_distance(theta1, theta2, delta, chunk: int = 512) -> np.ndarray:
    """Min squared distance from (theta1, theta2) to {u v = delta, u > 0}.

    Three-stage log-spaced grid over u with v = delta/u; the final step in
    u is below 1e-4, so the returned value exceeds the true minimum by far
    less than 1e-6 on the fuzz windows used in the tests.  Vectorized over
    equal-length input arrays, chunked to bound memory.
    """
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    if np.any(d <= 0):
        raise ValueError("boundary oracle needs delta > 0")
    out = np.empty_like(t1)
    for start in range(0, len(t1), chunk):
        sl = slice(start, min(start + chunk, len(t1)))
        out[sl] = _grid_chunk(t1[sl], t2[sl], d[sl])
    return out


def _grid_chunk(t1, t2, d):
    # The minimizer satisfies u <~ max(theta1, sqrt(delta)) and
    # v <~ max(theta2, sqrt(delta)); pad both bounds generously.
    hi = 2.0 * np.maximum.reduce([3.0 * np.abs(t1), 3.0 * np.sqrt(d),
                                  np.full_like(t1, 3.0)])
    vhi = 2.0 * np.maximum.reduce([3.0 * np.abs(t2), 3.0 * np.sqrt(d),
                                   np.full_like(t2, 3.0)])
    lo = d / vhi

    def stage(lo, hi, npts):
        g = np.exp(np.linspace(0.0, 1.0, npts)[None, :]
                   * np.log(hi / lo)[:, None] + np.log(lo)[:, None])
        dist = (g - t1[:, None]) ** 2 + (d[:, None] / g - t2[:, None]) ** 2
        idx = np.argmin(dist, axis=1)
        rows = np.arange(len(lo))
        step = (np.log(hi) - np.log(lo)) / (npts - 1)
        new_lo = g[rows, idx] * np.exp(-2.0 * step)
        new_hi = g[rows, idx] * np.exp(2.0 * step)
        return new_lo, new_hi, dist[rows, idx]

    lo, hi, _ = stage(lo, hi, 4096)
    lo, hi, _ = stage(lo, hi, 512)
    _, _, best = stage(lo, hi, 512)
    return best


def full_space_psd_solve(stack: FunctionalStack, targets: np.ndarray,
                         rho: float, iters: int = 20000):
    """Dense oracle for the trace-penalized subproblem.

    Minimizes Tr(X) + (rho/2) sum_l (Q_l(X) - theta_l)^2 over X >= 0 by
    projected gradient with backtracking, where the PSD projection clips
    eigenvalues.  Slow and simple on purpose.  Returns (X, objective).
    """
    d = stack.dim
    targets = np.asarray(targets, dtype=float)
    eye = np.eye(d)

    def fval(X):
        r = stack.apply_dense(X) - targets
        return float(np.trace(X) + 0.5 * rho * np.sum(r * r))

    def grad(X):
        r = stack.apply_dense(X) - targets
        return eye + rho * ((stack.gens * r[stack.ell]) @ stack.gens.T)

    def proj(X):
        w, Q = np.linalg.eigh(0.5 * (X + X.T))
        return (Q * np.clip(w, 0.0, None)) @ Q.T

    X = np.zeros((d, d))
    f = fval(X)
    step = 1.0
    for _ in range(iters):
        G = grad(X)
        while step > 1e-18:
            Xn = proj(X - step * G)
            fn = fval(Xn)
            if fn <= f:
                break
            step *= 0.5
        if fn > f - 1e-15 * max(1.0, abs(f)):
            break
        X, f = Xn, fn
        step *= 1.25
    return X, f


def quartic_value(u, theta1, theta2, delta):
    """p(u) = u^4 - theta1 u^3 + delta theta2 u - delta^2."""
    return u**4 - theta1 * u**3 + delta * theta2 * u - delta**2
