"""Dense Hermitian linear algebra for states and tangent vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    BadRank,
    DimMismatch,
    NonHermitian,
    NotAState,
    NotTraceless,
    SupportViolation,
)

#: Eigenvalues below this are treated as exactly zero (generalized inverse).
ZERO_TOL = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def hermitian(A, tol: float = 1e-12) -> np.ndarray:
    """Return ``A`` as a complex Hermitian array, symmetrized.

    Raises :class:`NonHermitian` when ``A`` differs from its conjugate
    transpose by more than ``tol`` relative to its largest entry.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonHermitian(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    if np.max(np.abs(A - A.conj().T), initial=0.0) > tol * scale:
        raise NonHermitian("matrix differs from its conjugate transpose")
    return (A + A.conj().T) / 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition grouped by distinct eigenvalue.

    ``values``/``vectors`` hold the raw ascending decomposition with each
    eigenvalue replaced by the mean of its cluster, so that formulas summing
    over eigenvector pairs agree exactly with their projector forms.
    """

    eigenvalues: np.ndarray
    projectors: tuple
    multiplicities: tuple
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return sum(a * P for a, P in zip(self.eigenvalues, self.projectors))


def spectral_decompose(H, cluster_tol: float | None = None) -> SpectralDecomposition:
    """Spectral decomposition with clustering of nearly equal eigenvalues.

    ``cluster_tol`` defaults to ``1e-9`` times the spectral radius. Adjacent
    eigenvalues closer than the tolerance share one projector.
    """
    H = hermitian(H)
    vals, vecs = np.linalg.eigh(H)
    if cluster_tol is None:
        cluster_tol = 1e-9 * max(np.max(np.abs(vals), initial=0.0), 1e-300)
    groups: list[list[int]] = []
    for i, v in enumerate(vals):
        if groups and v - vals[groups[-1][-1]] <= cluster_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = np.array([vals[g].mean() for g in groups])
    projectors = tuple(vecs[:, g] @ vecs[:, g].conj().T for g in groups)
    clustered = vals.copy()
    for g, a in zip(groups, eigenvalues):
        clustered[g] = a
    return SpectralDecomposition(
        eigenvalues=eigenvalues,
        projectors=projectors,
        multiplicities=tuple(len(g) for g in groups),
        values=clustered,
        vectors=vecs,
    )


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product Tr(A* B)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimMismatch(f"shapes {A.shape} and {B.shape} differ")
    return complex(np.vdot(A, B))


class Norms(NamedTuple):
    trace_norm: float
    two_norm: float


def norms(A) -> Norms:
    """Trace norm and Schatten 2-norm of a matrix."""
    A = np.asarray(A, dtype=complex)
    if A.size == 0 or not np.any(A):
        return Norms(0.0, 0.0)
    sv = np.linalg.svd(A, compute_uv=False)
    return Norms(float(sv.sum()), float(np.sqrt(np.sum(sv**2))))


def trace_norm(A) -> float:
    return norms(A).trace_norm


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density matrix with its spectral data cached."""

    matrix: np.ndarray
    spectral: SpectralDecomposition = field(repr=False)
    support_rank: int
    min_eig: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def support(self) -> np.ndarray:
        """Orthogonal projector onto the support."""
        V = self.support_vectors
        return V @ V.conj().T

    @property
    def support_vectors(self) -> np.ndarray:
        sp = self.spectral
        return sp.vectors[:, sp.values > ZERO_TOL]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _density_from_eig(vals: np.ndarray, vecs: np.ndarray) -> DensityOperator:
    vals = np.where(vals < ZERO_TOL, 0.0, vals)
    M = (vecs * vals) @ vecs.conj().T
    M = (M + M.conj().T) / 2
    sp = spectral_decompose(M)
    return DensityOperator(
        matrix=M,
        spectral=sp,
        support_rank=int(np.sum(sp.values > ZERO_TOL)),
        min_eig=float(sp.values[0]) if sp.values[0] > ZERO_TOL else 0.0,
    )


def validate_density(M, tol: float = 1e-10) -> DensityOperator:
    """Check that ``M`` is a density matrix and wrap it.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero and the matrix is
    rebuilt from the clipped spectrum.
    """
    if isinstance(M, DensityOperator):
        return M
    M = hermitian(M, tol=max(tol, 1e-12))
    tr = float(np.trace(M).real)
    if abs(tr - 1) > tol:
        raise NotAState(f"trace is {tr!r}, expected 1")
    vals, vecs = np.linalg.eigh(M)
    if vals[0] < -tol:
        raise NotAState(f"minimum eigenvalue {vals[0]!r} is negative")
    vals = np.clip(vals, 0.0, None)
    vals = vals / vals.sum()
    return _density_from_eig(vals, vecs)


def as_state(rho) -> DensityOperator:
    return rho if isinstance(rho, DensityOperator) else validate_density(rho)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A traceless Hermitian matrix supported inside a base state's support."""

    matrix: np.ndarray
    base_support: np.ndarray = field(repr=False)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def make_tangent(rho, X, tol: float = 1e-10) -> TangentVector:
    """Validate ``X`` as a tangent vector at ``rho``."""
    if isinstance(X, TangentVector):
        X = X.matrix
    rho = as_state(rho)
    X = hermitian(X, tol=max(tol, 1e-12))
    if X.shape != rho.matrix.shape:
        raise DimMismatch(f"tangent shape {X.shape} vs state {rho.matrix.shape}")
    tr = np.trace(X).real
    if abs(tr) > tol:
        raise NotTraceless(f"trace is {tr!r}")
    P = rho.support
    Q = np.eye(rho.dim) - P
    if np.max(np.abs(Q @ X @ Q), initial=0.0) > tol:
        raise SupportViolation("tangent has weight outside the base support")
    if rho.support_rank < rho.dim and np.max(np.abs(Q @ X @ P), initial=0.0) > tol:
        raise SupportViolation("tangent couples the support to its complement")
    return TangentVector(matrix=X, base_support=P)


def random_state(d: int, rank: int | None = None, seed=None) -> DensityOperator:
    """Random state from partial-tracing a Haar-random pure state on d x rank."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise BadRank(f"rank must lie in [1, {d}], got {rank}")
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    M = G @ G.conj().T
    return validate_density(M / np.trace(M).real)


def random_pure(d: int, seed=None) -> np.ndarray:
    """Haar-random unit vector."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_tangent(rho, seed=None) -> TangentVector:
    """Gaussian Hermitian matrix projected to a tangent vector at ``rho``."""
    rho = as_state(rho)
    rng = np.random.default_rng(seed)
    d = rho.dim
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (G + G.conj().T) / 2
    V = rho.support_vectors
    r = V.shape[1]
    Y = V.conj().T @ H @ V
    Y -= np.trace(Y).real / r * np.eye(r)
    return make_tangent(rho, V @ Y @ V.conj().T)


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of d x d matrices, shape (d*d, d, d).

    The first element is I/sqrt(d); the rest are traceless generalized
    Gell-Mann matrices (symmetric, antisymmetric, then diagonal). For d = 2
    this is (I, X, Y, Z)/sqrt(2).
    """
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        E = np.zeros((d, d), dtype=complex)
        E[j, k] = E[k, j] = 1 / np.sqrt(2)
        basis.append(E)
    for j, k in pairs:
        E = np.zeros((d, d), dtype=complex)
        E[j, k] = -1j / np.sqrt(2)
        E[k, j] = 1j / np.sqrt(2)
        basis.append(E)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(basis)


def to_coords(A, basis: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in an orthonormal Hermitian basis."""
    return np.einsum("kij,ij->k", basis.conj(), np.asarray(A)).real


def from_coords(x, basis: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij->ij", np.asarray(x, dtype=float), basis)


def bloch_state(w: Sequence[float]) -> np.ndarray:
    """Qubit density matrix (I + w.sigma)/2."""
    w = np.asarray(w, dtype=float)
    return (PAULI_I + sum(c * P for c, P in zip(w, PAULIS))) / 2


def bloch_vector(rho) -> np.ndarray:
    M = np.asarray(rho)
    return np.array([np.trace(M @ P).real for P in PAULIS])


def fn_of_hermitian(H, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix by spectral calculus."""
    vals, vecs = np.linalg.eigh(hermitian(H))
    return (vecs * fn(vals)) @ vecs.conj().T


def sqrtm_psd(A) -> np.ndarray:
    return fn_of_hermitian(A, lambda v: np.sqrt(np.clip(v, 0.0, None)))


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"dim": int(A.shape[0]), "re": A.real.tolist(), "im": A.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; the ``im`` block is optional."""
    if not isinstance(obj, dict) or "re" not in obj:
        raise ValueError("matrix JSON must be an object with 're' (and optionally 'im')")
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise ValueError("'re' and 'im' must be equal-shape square arrays")
    if "dim" in obj and int(obj["dim"]) != re.shape[0]:
        raise ValueError(f"'dim' is {obj['dim']} but the arrays are {re.shape[0]}x{re.shape[0]}")
    return re + 1j * im
