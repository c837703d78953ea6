"""Problem instances and forward measurement models.

Two unknown real signals live in known subspaces of dimension k and n.
What we observe are the m nonnegative magnitudes of the Fourier transform
of their circular convolution.  After lifting each signal to its rank-1
outer product, every magnitude squared becomes a product of two
nonnegative quadratic forms, one per signal; this module generates random
instances of that model, evaluates the forward map along both the
quadratic-form route and the time-domain convolution route, and applies
multiplicative noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

GENERATOR_ID = "numpy-pcg64"


class NoiseModelError(ValueError):
    """Raised when a noise vector has an entry below -1."""


class SubspaceMode(str, Enum):
    GAUSSIAN_ROWS = "gaussian-rows"
    FOURIER_IDENTITY_B = "fourier-identity-b"
    FOURIER_GAUSSIAN = "fourier-gaussian"


@dataclass
class SensingFunctional:
    """Real PSD quadratic form of rank at most 2.

    For a real sensing row a the form is ``X -> a.T X a`` (single
    generator).  For a complex row the generators are the real and
    imaginary parts, so the form equals ``a^* X a`` on real symmetric X.
    """

    g1: np.ndarray
    g2: np.ndarray | None = None

    @classmethod
    def from_row(cls, row: np.ndarray) -> "SensingFunctional":
        row = np.asarray(row)
        if np.iscomplexobj(row):
            return cls(g1=np.ascontiguousarray(row.real),
                       g2=np.ascontiguousarray(row.imag))
        return cls(g1=np.ascontiguousarray(row.astype(float)))

    @property
    def dim(self) -> int:
        return self.g1.shape[0]

    def generators(self) -> list[np.ndarray]:
        return [self.g1] if self.g2 is None else [self.g1, self.g2]

    def apply(self, X: np.ndarray) -> float:
        """Evaluate the form on a symmetric matrix."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.dim, self.dim):
            raise ValueError(f"expected {(self.dim, self.dim)} matrix, got {X.shape}")
        val = float(self.g1 @ X @ self.g1)
        if self.g2 is not None:
            val += float(self.g2 @ X @ self.g2)
        return val

    def apply_factored(self, V: np.ndarray) -> float:
        """Evaluate on X = V V.T without forming X."""
        V = np.asarray(V, dtype=float)
        val = float(np.sum((V.T @ self.g1) ** 2))
        if self.g2 is not None:
            val += float(np.sum((V.T @ self.g2) ** 2))
        return val


class FunctionalStack:
    """Batched view of m sensing functionals sharing one ambient dimension.

    Generators are stacked column-wise into ``gens`` (d x n_gen) with
    ``ell[i]`` giving the index of the functional that generator column i
    belongs to.  All solver-side evaluations go through this class so that
    they reduce to a couple of dense matrix products.
    """

    def __init__(self, functionals: list[SensingFunctional], dim: int | None = None):
        if not functionals and dim is None:
            raise ValueError("empty functional list needs an explicit dim")
        d = functionals[0].dim if functionals else int(dim)
        cols, ell = [], []
        for i, f in enumerate(functionals):
            if f.dim != d:
                raise ValueError("functionals have mixed dimensions")
            for g in f.generators():
                cols.append(g)
                ell.append(i)
        self.dim = d
        self.count = len(functionals)
        self.gens = (np.column_stack(cols) if cols
                     else np.zeros((d, 0)))        # (d, n_gen)
        self.ell = np.asarray(ell, dtype=np.intp)  # (n_gen,)

    @classmethod
    def from_rows(cls, rows: np.ndarray) -> "FunctionalStack":
        return cls([SensingFunctional.from_row(r) for r in rows])

    def apply_factored(self, V: np.ndarray) -> np.ndarray:
        """Vector of form values on X = V V.T, one entry per functional."""
        W = self.gens.T @ V                      # (n_gen, r)
        energy = np.einsum("ij,ij->i", W, W)
        return np.bincount(self.ell, weights=energy, minlength=self.count)

    def apply_dense(self, X: np.ndarray) -> np.ndarray:
        GX = self.gens.T @ X                     # (n_gen, d)
        energy = np.einsum("ij,ji->i", GX, self.gens)
        return np.bincount(self.ell, weights=energy, minlength=self.count)

    def weighted_gradient_term(self, weights: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Return sum_l w_l * (sum_g g g.T) V using only matrix products."""
        W = self.gens.T @ V
        return self.gens @ (weights[self.ell][:, None] * W)


@dataclass
class ProblemInstance:
    """Ground-truth signals plus per-measurement sensing rows."""

    m: int
    k: int
    n: int
    mode: SubspaceMode
    seed: int
    h_true: np.ndarray                 # (k,) real
    m_true: np.ndarray                 # (n,) real
    b_rows: np.ndarray                 # (m, k), real or complex
    c_rows: np.ndarray                 # (m, n)
    generator_id: str = GENERATOR_ID

    def b_functionals(self) -> list[SensingFunctional]:
        return [SensingFunctional.from_row(r) for r in self.b_rows]

    def c_functionals(self) -> list[SensingFunctional]:
        return [SensingFunctional.from_row(r) for r in self.c_rows]

    def b_stack(self) -> FunctionalStack:
        return FunctionalStack.from_rows(self.b_rows)

    def c_stack(self) -> FunctionalStack:
        return FunctionalStack.from_rows(self.c_rows)


@dataclass
class MeasurementSet:
    """Magnitude measurements y and the constraint levels delta = m * y^2."""

    y: np.ndarray
    delta: np.ndarray
    xi: np.ndarray | None = None

    @classmethod
    def from_y(cls, y: np.ndarray, xi: np.ndarray | None = None) -> "MeasurementSet":
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise ValueError("magnitudes must be nonnegative")
        return cls(y=y, delta=len(y) * y**2, xi=xi)

    @property
    def m(self) -> int:
        return len(self.y)


def circular_convolve(w: np.ndarray, x: np.ndarray, method: str = "fft") -> np.ndarray:
    """Circular convolution z[t] = sum_s w[s] x[(t-s) mod m].

    Parameters
    ----------
    w, x : real arrays of equal length m >= 1.
    method : "fft" (default) or "direct" (O(m^2) summation).  The two
        paths agree to roundoff and are kept as mutual checks.
    """
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.ndim != 1 or x.ndim != 1 or w.shape != x.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {x.shape}")
    m = len(w)
    if m < 1:
        raise ValueError("need length >= 1")
    if method == "fft":
        return np.fft.ifft(np.fft.fft(w) * np.fft.fft(x)).real
    if method == "direct":
        z = np.zeros(m)
        for t in range(m):
            for s in range(m):
                z[t] += w[s] * x[(t - s) % m]
        return z
    raise ValueError(f"unknown method {method!r}")


def equispaced_identity_columns(m: int, k: int) -> np.ndarray:
    """m x k selection matrix whose column j is identity column floor(j*m/k)."""
    B = np.zeros((m, k))
    for j in range(k):
        B[(j * m) // k, j] = 1.0
    return B


def gen_instance(m: int, k: int, n: int, mode: SubspaceMode | str,
                 seed: int) -> ProblemInstance:
    """Draw a random problem instance.

    Each mode fixes how the sensing rows arise:

    * ``GAUSSIAN_ROWS`` -- rows of both factors are i.i.d. real Gaussian
      with entry variance 1/m (the analysis model, no Fourier structure).
    * ``FOURIER_IDENTITY_B`` -- the first subspace basis is the equispaced
      identity-column matrix, the second is time-domain Gaussian; rows are
      the (complex) rows of sqrt(m) * DFT * basis.
    * ``FOURIER_GAUSSIAN`` -- both bases time-domain Gaussian, rows again
      through the scaled DFT.

    Ground-truth coefficients are i.i.d. standard normal.  Identical
    (m, k, n, mode, seed) reproduce the instance bit-exactly.
    """
    mode = SubspaceMode(mode)
    if not (1 <= k <= m) or not (1 <= n <= m):
        raise ValueError(f"need 1 <= k, n <= m, got m={m}, k={k}, n={n}")
    rng = np.random.default_rng(seed)
    h_true = rng.standard_normal(k)
    m_true = rng.standard_normal(n)
    scale = 1.0 / np.sqrt(m)

    if mode is SubspaceMode.GAUSSIAN_ROWS:
        b_rows = rng.standard_normal((m, k)) * scale
        c_rows = rng.standard_normal((m, n)) * scale
    else:
        if mode is SubspaceMode.FOURIER_IDENTITY_B:
            B = equispaced_identity_columns(m, k)
        else:
            B = rng.standard_normal((m, k)) * scale
        C = rng.standard_normal((m, n)) * scale
        b_rows = np.sqrt(m) * np.fft.fft(B, axis=0, norm="ortho")
        c_rows = np.sqrt(m) * np.fft.fft(C, axis=0, norm="ortho")

    return ProblemInstance(m=m, k=k, n=n, mode=mode, seed=seed,
                           h_true=h_true, m_true=m_true,
                           b_rows=b_rows, c_rows=c_rows)


def time_domain_bases(inst: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    """Recover the time-domain basis matrices from the stored Fourier rows."""
    if inst.mode is SubspaceMode.GAUSSIAN_ROWS:
        raise ValueError("direct-row instances have no time-domain realization")
    B = np.fft.ifft(inst.b_rows, axis=0, norm="ortho") / np.sqrt(inst.m)
    C = np.fft.ifft(inst.c_rows, axis=0, norm="ortho") / np.sqrt(inst.m)
    return B.real, C.real


def forward_measure(inst: ProblemInstance) -> MeasurementSet:
    """Noiseless magnitudes via the per-row quadratic forms.

    y_l = sqrt(Qb_l(h h.T) * Qc_l(m m.T)) / sqrt(m), and the constraint
    level folds the 1/m back in: delta_l = m * y_l^2.
    """
    u = np.abs(inst.b_rows @ inst.h_true) ** 2
    v = np.abs(inst.c_rows @ inst.m_true) ** 2
    y = np.sqrt(u * v) / np.sqrt(inst.m)
    return MeasurementSet.from_y(y)


def forward_measure_via_convolution(inst: ProblemInstance) -> MeasurementSet:
    """Validation path: |DFT(w (*) x)| with w, x built in the time domain.

    Only available in the Fourier modes, where the instance corresponds to
    an actual convolution; agrees with :func:`forward_measure` to roundoff.
    """
    B, C = time_domain_bases(inst)
    w = B @ inst.h_true
    x = C @ inst.m_true
    z = circular_convolve(w, x)
    y = np.abs(np.fft.fft(z, norm="ortho"))
    return MeasurementSet.from_y(y)


def add_noise(meas: MeasurementSet, xi: np.ndarray) -> MeasurementSet:
    """Multiplicative noise y' = y * (1 + xi), with xi >= -1 elementwise."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != meas.y.shape:
        raise ValueError(f"noise shape {xi.shape} != measurement shape {meas.y.shape}")
    if np.any(xi < -1.0):
        raise NoiseModelError("noise factors must satisfy xi >= -1")
    return MeasurementSet.from_y(meas.y * (1.0 + xi), xi=xi.copy())


def lifted_value(Qb: SensingFunctional, H: np.ndarray,
                 Qc: SensingFunctional, M: np.ndarray) -> float:
    """Product Qb(H) * Qc(M) of the two lifted quadratic forms."""
    return Qb.apply(H) * Qc.apply(M)


# ---------------------------------------------------------------------------
# Instance (de)serialization.  JSON with decimal float arrays; Python's repr
# round-trips float64 exactly, which covers the 17-significant-digit contract.
# ---------------------------------------------------------------------------

_FORMAT = "blindphase-instance"


def _encode_rows(rows: np.ndarray) -> dict:
    if np.iscomplexobj(rows):
        return {"re": rows.real.tolist(), "im": rows.imag.tolist()}
    return {"re": rows.tolist()}


def _decode_rows(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    if "im" in obj:
        return re + 1j * np.asarray(obj["im"], dtype=float)
    return re


def instance_to_dict(inst: ProblemInstance, materialize: bool = True) -> dict:
    doc = {
        "format": _FORMAT,
        "version": 1,
        "m": inst.m, "k": inst.k, "n": inst.n,
        "mode": inst.mode.value,
        "seed": inst.seed,
        "generator_id": inst.generator_id,
    }
    if materialize:
        doc["h_true"] = inst.h_true.tolist()
        doc["m_true"] = inst.m_true.tolist()
        doc["b_rows"] = _encode_rows(inst.b_rows)
        doc["c_rows"] = _encode_rows(inst.c_rows)
    return doc


def instance_from_dict(doc: dict) -> ProblemInstance:
    if doc.get("format") != _FORMAT:
        raise ValueError(f"not a {_FORMAT} document")
    m, k, n = int(doc["m"]), int(doc["k"]), int(doc["n"])
    mode = SubspaceMode(doc["mode"])
    seed = int(doc["seed"])
    gen_id = doc.get("generator_id", GENERATOR_ID)
    if "b_rows" in doc:
        inst = ProblemInstance(
            m=m, k=k, n=n, mode=mode, seed=seed,
            h_true=np.asarray(doc["h_true"], dtype=float),
            m_true=np.asarray(doc["m_true"], dtype=float),
            b_rows=_decode_rows(doc["b_rows"]),
            c_rows=_decode_rows(doc["c_rows"]),
            generator_id=gen_id,
        )
        if inst.b_rows.shape != (m, k) or inst.c_rows.shape != (m, n):
            raise ValueError("materialized row shapes disagree with dims")
        return inst
    if gen_id != GENERATOR_ID:
        raise ValueError(
            f"cannot regenerate: file uses generator {gen_id!r}, "
            f"this implementation uses {GENERATOR_ID!r} (materialize to transfer)")
    return gen_instance(m, k, n, mode, seed)


def save_instance(inst: ProblemInstance, path: str | Path,
                  materialize: bool = True) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst, materialize)))


def load_instance(path: str | Path) -> ProblemInstance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed instance file {path}: "
                         f"line {exc.lineno}, col {exc.colno}: {exc.msg}") from exc
    try:
        return instance_from_dict(doc)
    except KeyError as exc:
        raise ValueError(f"instance file {path} missing field {exc}") from exc
