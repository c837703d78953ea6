"""Euclidean projection onto the set {(u, v) : u v >= delta, u >= 0}.

For delta > 0 the set is the closed region on and above one branch of a
hyperbola.  Writing the stationarity conditions of the projection with a
single active multiplier and eliminating v reduces the problem to the
monic quartic

    u^4 - theta1 * u^3 + delta * theta2 * u - delta^2 = 0,

whose admissible real roots enumerate every boundary candidate; interior
points project to themselves.  Everything here is plain numpy and is
vectorized over batches of independent 2-D projections.
"""

from __future__ import annotations

import numpy as np

# Imaginary parts below this (relative) size after polishing are treated
# as rounding noise on a real root.
_REAL_TOL = 1e-8


def _newton_polish(roots: np.ndarray, t1: np.ndarray, dt2: np.ndarray,
                   d2: np.ndarray, steps: int) -> np.ndarray:
    """Newton iterations on p(u) = u^4 - t1 u^3 + dt2 u - d2, batched.

    A step is only kept where it does not increase |p|; derivative-zero
    entries are left untouched.
    """
    for _ in range(steps):
        p = roots**4 - t1 * roots**3 + dt2 * roots - d2
        dp = 4.0 * roots**3 - 3.0 * t1 * roots**2 + dt2
        ok = np.abs(dp) > 0
        step = np.zeros_like(roots)
        np.divide(p, dp, out=step, where=ok)
        cand = roots - step
        p_new = cand**4 - t1 * cand**3 + dt2 * cand - d2
        better = np.abs(p_new) <= np.abs(p)
        roots = np.where(ok & better, cand, roots)
    return roots


def solve_quartic(theta1: float, theta2: float, delta: float) -> np.ndarray:
    """Real roots of u^4 - theta1*u^3 + delta*theta2*u - delta^2 = 0.

    Roots come from the eigenvalues of the companion matrix and are then
    Newton-polished; complex eigenvalues whose imaginary part survives
    polishing are discarded.  Returns a sorted 1-D array (possibly empty,
    though the projection use case always has at least one admissible
    root when delta > 0).
    """
    roots = _quartic_roots_batch(np.asarray([theta1], dtype=float),
                                 np.asarray([theta2], dtype=float),
                                 np.asarray([delta], dtype=float))[0]
    real = roots[~np.isnan(roots)]
    return np.sort(real)


def _quartic_roots_batch(t1: np.ndarray, t2: np.ndarray,
                         delta: np.ndarray) -> np.ndarray:
    """Per-row real roots of the projection quartic, NaN-padded to width 4."""
    nb = len(t1)
    dt2 = delta * t2
    d2 = delta**2
    comp = np.zeros((nb, 4, 4))
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    comp[:, 3, 2] = 1.0
    comp[:, 0, 3] = d2          # -c0,  c0 = -delta^2
    comp[:, 1, 3] = -dt2        # -c1,  c1 = delta * theta2
    # c2 = 0
    comp[:, 3, 3] = t1          # -c3,  c3 = -theta1
    eig = np.linalg.eigvals(comp)                       # (nb, 4) complex

    t1c = t1[:, None]
    dt2c = dt2[:, None]
    d2c = d2[:, None]
    eig = _newton_polish(eig, t1c, dt2c, d2c, steps=3)
    is_real = np.abs(eig.imag) <= _REAL_TOL * np.maximum(1.0, np.abs(eig.real))
    roots = _newton_polish(eig.real, t1c, dt2c, d2c, steps=2)
    return np.where(is_real, roots, np.nan)


def _project_closure(t1: np.ndarray, t2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projection for delta = 0, where the set is {u>=0, v>=0} union {u=0}.

    Compares the quadrant projection (max(t1,0), max(t2,0)) with the
    axis projection (0, t2) and keeps the nearer point.
    """
    quad_u = np.maximum(t1, 0.0)
    quad_v = np.maximum(t2, 0.0)
    d_quad = (t1 - quad_u) ** 2 + (t2 - quad_v) ** 2
    d_axis = t1**2
    use_axis = d_axis < d_quad
    u = np.where(use_axis, 0.0, quad_u)
    v = np.where(use_axis, t2, quad_v)
    return u, v


def project_batch(theta1: np.ndarray, theta2: np.ndarray,
                  delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise projection of (theta1_l, theta2_l) onto u v >= delta_l, u >= 0.

    Parameters
    ----------
    theta1, theta2, delta : equal-length 1-D arrays, delta >= 0.

    Returns
    -------
    (u, v) arrays of the same length, the unique nearest feasible points.
    """
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    if not (t1.shape == t2.shape == d.shape) or t1.ndim != 1:
        raise ValueError("theta1, theta2, delta must be equal-length 1-D arrays")
    if np.any(d < 0):
        raise ValueError("delta must be nonnegative")

    u = np.empty_like(t1)
    v = np.empty_like(t2)

    tiny = d <= 1e-12 * np.maximum(1.0, t1**2 + t2**2)
    if np.any(tiny):
        u[tiny], v[tiny] = _project_closure(t1[tiny], t2[tiny])

    interior = ~tiny & (t1 >= 0) & (t1 * t2 >= d)
    u[interior] = t1[interior]
    v[interior] = t2[interior]

    hard = ~tiny & ~interior
    if np.any(hard):
        u[hard], v[hard] = _project_boundary(t1[hard], t2[hard], d[hard])
    return u, v


def _project_boundary(t1: np.ndarray, t2: np.ndarray,
                      d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boundary projection via the quartic, for strictly positive delta."""
    roots = _quartic_roots_batch(t1, t2, d)             # (nb, 4), NaN-padded
    with np.errstate(invalid="ignore", divide="ignore"):
        tv = t2[:, None] * roots
        num = d[:, None] - tv          # = mu * u^2, must be >= 0 up to rounding
        tol = 1e-9 * np.maximum(1.0, np.maximum(np.abs(tv), d[:, None]))
        admissible = (roots > 0) & (num >= -tol) & ~np.isnan(roots)
        v_cand = d[:, None] / roots
        dist = (roots - t1[:, None]) ** 2 + (v_cand - t2[:, None]) ** 2
    dist = np.where(admissible, dist, np.inf)
    best = np.argmin(dist, axis=1)
    rows = np.arange(len(t1))
    if not np.all(np.isfinite(dist[rows, best])):
        bad = np.where(~np.isfinite(dist[rows, best]))[0][0]
        raise ArithmeticError(
            f"no admissible quartic root for theta=({t1[bad]}, {t2[bad]}), "
            f"delta={d[bad]}")
    u = roots[rows, best]
    return u, d / u


def project_point(theta1: float, theta2: float,
                  delta: float) -> tuple[float, float]:
    """Scalar convenience wrapper around :func:`project_batch`."""
    u, v = project_batch(np.asarray([theta1], dtype=float),
                         np.asarray([theta2], dtype=float),
                         np.asarray([delta], dtype=float))
    return float(u[0]), float(v[0])


def kkt_residuals(theta1: np.ndarray, theta2: np.ndarray, delta: np.ndarray,
                  u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stationarity residuals of a claimed projection output.

    On the boundary the multiplier is recovered as mu = (delta - theta2*u)/u^2
    and the residuals are u - theta1 - mu*v and v - theta2 - mu*u; at
    interior outputs (constraint slack) mu = 0.  Points returned by
    :func:`project_batch` with delta > 0 should drive both to roundoff.
    """
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    slack = u * v - d
    on_boundary = np.abs(slack) <= 1e-7 * np.maximum(1.0, np.abs(u * v))
    mu = np.zeros_like(u)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu_b = (d - t2 * u) / u**2
    mu = np.where(on_boundary & (u > 0), np.maximum(mu_b, 0.0), 0.0)
    r1 = u - t1 - mu * v
    r2 = v - t2 - mu * u
    return r1, r2
