"""Convex surrogate for the product constraint, and feasibility audits.

The raw per-measurement constraint function y^2 - u v / m is nonconvex in
(u, v) even though its sublevel set intersected with the nonnegative
quadrant is convex.  The surrogate used in the stability analysis,

    f(u, v) = gamma * ( sqrt(4 y^2 + (u - v)^2 / m) - (u + v) / sqrt(m) ),

is jointly convex and has the same 0-sublevel set once u, v >= 0; indeed
f <= 0 by itself forces u, v >= 0.  The normalizer gamma depends on the
ground-truth lift and therefore lives only in test harnesses; the solver
never needs it.  These utilities exist so property suites can audit that
equivalence and check feasibility of candidate lifted pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lowrank import FactoredPsd
from .measure import FunctionalStack, MeasurementSet, SensingFunctional


@dataclass
class SurrogateContext:
    """Per-measurement constants: noisy y^2, count m, and the gamma cap."""

    y_sq: float
    m: int
    gamma_cap: float

    def __post_init__(self):
        if self.y_sq < 0:
            raise ValueError("y_sq must be nonnegative")
        if self.gamma_cap < 0:
            raise ValueError("gamma_cap must be nonnegative")
        if self.m < 1:
            raise ValueError("m must be >= 1")


def surrogate_inner(u, v, ctx: SurrogateContext):
    """The un-normalized convex expression e(u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.sqrt(4.0 * ctx.y_sq + (u - v) ** 2 / ctx.m)
            - (u + v) / np.sqrt(ctx.m))


def surrogate_f(u, v, ctx: SurrogateContext):
    """Normalized surrogate gamma * e, with the branch-dependent gamma.

    gamma = min(1, gamma_cap) inside the level set (e <= 0) and gamma_cap
    outside.  Since gamma > 0 never flips the sign of e, the branch is
    decided on e itself.  Accepts scalars or arrays.
    """
    e = surrogate_inner(u, v, ctx)
    gamma = np.where(e <= 0.0, min(1.0, ctx.gamma_cap), ctx.gamma_cap)
    out = gamma * e
    return float(out) if np.isscalar(u) and np.isscalar(v) else out


def check_level_set_equivalence(samples, ctx: SurrogateContext,
                                tol_scale: float = 1e-9):
    """Audit that the surrogate and raw constraints classify samples alike.

    Parameters
    ----------
    samples : iterable of (u, v) pairs in the closed nonnegative quadrant.
    ctx : surrogate constants.
    tol_scale : classification tolerance, scaled per sample by the larger
        of 1, y^2 and |u v| / m.

    Returns
    -------
    (ok, counterexample) where counterexample is None or the first
    (u, v, f_value, raw_value) quadruple on which the two disagree.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (u, v) pairs")
    u, v = arr[:, 0], arr[:, 1]
    if np.any(u < 0) or np.any(v < 0):
        bad = np.where((u < 0) | (v < 0))[0][0]
        raise ValueError(f"sample {bad} outside the nonnegative quadrant: "
                         f"({u[bad]}, {v[bad]})")
    f = surrogate_f(u, v, ctx)
    raw = ctx.y_sq - u * v / ctx.m
    scale = np.maximum(1.0, np.maximum(ctx.y_sq, np.abs(u * v) / ctx.m))
    tol = tol_scale * scale
    agree = (f <= tol) == (raw <= tol)
    if np.all(agree):
        return True, None
    bad = int(np.argmin(agree))
    return False, (float(u[bad]), float(v[bad]), float(f[bad]), float(raw[bad]))


def _min_eigenvalue(X) -> float:
    if isinstance(X, FactoredPsd):
        # Eigenvalues of V V.T are those of the r x r Gram plus d - r zeros.
        gram_eigs = np.linalg.eigvalsh(X.V.T @ X.V)
        lo = float(gram_eigs[0])
        return min(lo, 0.0) if X.rank_bound < X.dim else lo
    X = np.asarray(X, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (X + X.T))[0])


def _form_values(X, functionals) -> np.ndarray:
    if isinstance(functionals, FunctionalStack):
        stack = functionals
    else:
        stack = FunctionalStack(list(functionals))
    if isinstance(X, FactoredPsd):
        return stack.apply_factored(X.V)
    return stack.apply_dense(np.asarray(X, dtype=float))


def is_feasible(H, M, b_functionals, c_functionals,
                meas: MeasurementSet, tol: float = 1e-9) -> bool:
    """Whether (H, M) satisfies the lifted program's constraints.

    Checks min-eigenvalue(H), min-eigenvalue(M) >= -tol and, for every
    measurement, Qb_l(H) * Qc_l(M) >= delta_l * (1 - tol).  H and M may be
    dense symmetric arrays or :class:`FactoredPsd` values (for which the
    eigenvalue check uses the factor Gram).
    """
    u = _form_values(H, b_functionals)
    v = _form_values(M, c_functionals)
    delta = np.asarray(meas.delta, dtype=float)
    if len(u) != len(delta) or len(v) != len(delta):
        raise ValueError("functional count disagrees with measurement count")
    if _min_eigenvalue(H) < -tol or _min_eigenvalue(M) < -tol:
        return False
    return bool(np.all(u * v >= delta * (1.0 - tol)))
