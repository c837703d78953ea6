"""Factored PSD matrices and the proximal trace-penalized X-subproblem.

The alternating scheme never forms a d x d matrix variable: each PSD
iterate is kept as X = V V.T with a tall-thin factor V.  The subproblem
solved here, for a stack of rank-<=2 quadratic forms Q_l and targets
theta_l, is

    minimize_V  ||V||_F^2 + (rho/2) * sum_l (Q_l(V V.T) - theta_l)^2.

The first term is the trace of V V.T, so the global minimizer of the
(convex-in-X) parent problem is recovered as long as the factor rank is
large enough; the rank rule below guarantees that any local minimizer of
the factored problem is globally optimal.  The minimizer is found by a
limited-memory BFGS iteration with a strong-Wolfe line search, both
implemented here on flat numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import FunctionalStack


@dataclass
class FactoredPsd:
    """PSD matrix represented by a factor: X = V @ V.T."""

    V: np.ndarray

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    @property
    def rank_bound(self) -> int:
        return self.V.shape[1]

    def dense(self) -> np.ndarray:
        return self.V @ self.V.T

    def trace(self) -> float:
        return float(np.sum(self.V**2))

    def top_eigpair(self) -> tuple[float, np.ndarray, float]:
        """(lambda1, v1, lambda2) via the r x r Gram matrix of the factor.

        Nonzero eigenvalues of V V.T and V.T V coincide, so the work is
        O(d r^2) instead of O(d^3); v1 = V q1 / sqrt(lambda1).
        """
        G = self.V.T @ self.V
        evals, evecs = np.linalg.eigh(G)
        lam1 = float(evals[-1])
        lam2 = float(evals[-2]) if len(evals) > 1 else 0.0
        if lam1 <= 0.0:
            v1 = np.zeros(self.dim)
            v1[0] = 1.0
            return max(lam1, 0.0), v1, max(lam2, 0.0)
        v1 = self.V @ evecs[:, -1] / np.sqrt(lam1)
        return lam1, v1, max(lam2, 0.0)


def choose_rank(m: int, d: int) -> int:
    """Smallest r with r*(r+1) > 2m, clamped to [1, d].

    Above this rank the factored landscape has no spurious local minima
    for a problem with m quadratic constraints, so a local method on V is
    enough; at r = d the factorization is lossless anyway.
    """
    if m < 0 or d < 1:
        raise ValueError("need m >= 0 and d >= 1")
    r = int(np.ceil((np.sqrt(1.0 + 8.0 * m) - 1.0) / 2.0))
    while r * (r + 1) <= 2 * m:       # guard against ceil rounding down
        r += 1
    return max(1, min(r, d))


@dataclass
class XUpdateProblem:
    """One factored proximal subproblem: stack, targets and penalty weight."""

    stack: FunctionalStack
    targets: np.ndarray
    rho: float

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.shape != (self.stack.count,):
            raise ValueError(
                f"targets shape {self.targets.shape} != ({self.stack.count},)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


def eval_objective(prob: XUpdateProblem, V: np.ndarray) -> float:
    q = prob.stack.apply_factored(V)
    resid = q - prob.targets
    return float(np.sum(V**2) + 0.5 * prob.rho * np.sum(resid**2))


def eval_gradient(prob: XUpdateProblem, V: np.ndarray) -> np.ndarray:
    """Gradient 2V + 2*rho * sum_l (Q_l(VV.T) - theta_l) A_l V.

    A_l is the generator Gram of functional l; the sum is evaluated with
    two matrix products against the stacked generators, never forming any
    d x d matrix.  Verified against central differences in the tests.
    """
    q = prob.stack.apply_factored(V)
    resid = q - prob.targets
    return 2.0 * V + 2.0 * prob.rho * prob.stack.weighted_gradient_term(resid, V)


@dataclass
class XUpdateResult:
    V: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    line_search_failed: bool = False
    # objective at the start plus after every accepted step; non-increasing
    objective_trace: list = field(default_factory=list)


def _wolfe_search(f_and_g, x, fx, gx, p, f0_dir, max_bisect: int = 30,
                  c1: float = 1e-4, c2: float = 0.9):
    """Strong-Wolfe line search with cubic interpolation in the zoom phase.

    f_and_g(x) -> (f, g) on flat arrays; p is a descent direction with
    directional derivative f0_dir < 0.  Returns (alpha, x_new, f_new,
    g_new, ok); ok = False means no acceptable step was found within the
    bisection budget and the best point seen is returned instead.
    """

    def phi(alpha):
        xn = x + alpha * p
        fn, gn = f_and_g(xn)
        return xn, fn, gn, float(gn @ p)

    def cubic_min(a, fa, da, b, fb, db):
        # Minimizer of the cubic matching values/slopes at a and b.
        d1 = da + db - 3.0 * (fa - fb) / (a - b)
        sq = d1 * d1 - da * db
        if sq < 0.0:
            return 0.5 * (a + b)
        d2 = np.sqrt(sq) * np.sign(b - a)
        t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
        if not np.isfinite(t):
            return 0.5 * (a + b)
        lo, hi = (a, b) if a < b else (b, a)
        span = hi - lo
        return float(np.clip(t, lo + 0.1 * span, hi - 0.1 * span))

    best = (0.0, x, fx, gx)  # fallback: best point seen so far

    alpha_prev, f_prev, d_prev = 0.0, fx, f0_dir
    alpha = 1.0
    lo = hi = None
    for _ in range(max_bisect):
        xn, fn, gn, dn = phi(alpha)
        if fn < best[2]:
            best = (alpha, xn, fn, gn)
        if fn > fx + c1 * alpha * f0_dir or (alpha_prev > 0 and fn >= f_prev):
            lo, f_lo, d_lo = alpha_prev, f_prev, d_prev
            hi, f_hi, d_hi = alpha, fn, dn
            break
        if abs(dn) <= -c2 * f0_dir:
            return alpha, xn, fn, gn, True
        if dn >= 0:
            lo, f_lo, d_lo = alpha, fn, dn
            hi, f_hi, d_hi = alpha_prev, f_prev, d_prev
            break
        alpha_prev, f_prev, d_prev = alpha, fn, dn
        alpha *= 2.0
    else:
        return best[0], best[1], best[2], best[3], False

    for _ in range(max_bisect):
        alpha = cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
        xn, fn, gn, dn = phi(alpha)
        if fn < best[2]:
            best = (alpha, xn, fn, gn)
        if fn > fx + c1 * alpha * f0_dir or fn >= f_lo:
            hi, f_hi, d_hi = alpha, fn, dn
        else:
            if abs(dn) <= -c2 * f0_dir:
                return alpha, xn, fn, gn, True
            if dn * (hi - lo) >= 0:
                hi, f_hi, d_hi = lo, f_lo, d_lo
            lo, f_lo, d_lo = alpha, fn, dn
        if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
            break
    return best[0], best[1], best[2], best[3], False


def _lbfgs_direction(g, s_list, y_list):
    """Two-loop recursion; returns -H g with the standard gamma scaling."""
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho_i = 1.0 / (y @ s)
        a = rho_i * (s @ q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        rho_i = 1.0 / (y @ s)
        b = rho_i * (y @ q)
        q += (a - b) * s
    return -q


def x_update(prob: XUpdateProblem, V_init: np.ndarray, g_tol: float = 1e-6,
             max_inner: int = 500, memory: int = 10) -> XUpdateResult:
    """Minimize the factored subproblem starting from V_init.

    Stops when ||grad||_2 <= g_tol * max(1, ||V||_F) or after max_inner
    iterations.  A failed line search returns the best iterate found with
    ``line_search_failed`` set rather than raising.
    """
    shape = V_init.shape
    if V_init.ndim != 2 or shape[0] != prob.stack.dim:
        raise ValueError(f"V_init must be ({prob.stack.dim}, r), got {shape}")

    def f_and_g(x):
        V = x.reshape(shape)
        return eval_objective(prob, V), eval_gradient(prob, V).ravel()

    x = np.asarray(V_init, dtype=float).ravel().copy()
    fx, gx = f_and_g(x)
    trace = [fx]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    ls_failed = False
    it = 0
    for it in range(1, max_inner + 1):
        gnorm = float(np.linalg.norm(gx))
        if gnorm <= g_tol * max(1.0, float(np.linalg.norm(x))):
            return XUpdateResult(x.reshape(shape), fx, gnorm, it - 1, True,
                                 objective_trace=trace)
        p = _lbfgs_direction(gx, s_list, y_list)
        f_dir = float(gx @ p)
        if f_dir >= 0:          # stale curvature pairs; restart from scratch
            s_list.clear()
            y_list.clear()
            p = -gx
            f_dir = float(gx @ p)
        if not s_list:
            p_scaled = p / max(1.0, np.linalg.norm(p))
            f_dir = float(gx @ p_scaled)
            p = p_scaled
        alpha, xn, fn, gn, ok = _wolfe_search(f_and_g, x, fx, gx, p, f_dir)
        if not ok:
            if fn < fx:
                x, fx, gx = xn, fn, gn
                trace.append(fx)
            ls_failed = True
            break
        s = xn - x
        yv = gn - gx
        if float(s @ yv) > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            s_list.append(s)
            y_list.append(yv)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        x, fx, gx = xn, fn, gn
        trace.append(fx)
    gnorm = float(np.linalg.norm(gx))
    converged = gnorm <= g_tol * max(1.0, float(np.linalg.norm(x)))
    return XUpdateResult(x.reshape(shape), fx, gnorm, it, converged,
                         line_search_failed=ls_failed, objective_trace=trace)
