"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays; every public function validates
that its inputs are finite.  SVD and norms delegate to LAPACK via numpy.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

EQ_TOL = 1e-10
ORTHO_TOL = 1e-12


class InvalidInput(ValueError):
    """Raised on non-finite or mis-shaped matrix input."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-d, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


def op_norm(m) -> float:
    """Largest singular value."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def svd(m):
    """Return (L, sigma, R) with m = L @ diag(sigma) @ R, sigma nonincreasing.

    L and R are square unitaries; sigma has min(rows, cols) entries.
    """
    a = as_matrix(m)
    left, sigma, right = np.linalg.svd(a, full_matrices=True)
    return left, sigma, right


def sigma_matrix(sigma: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape, dtype=complex)
    k = len(sigma)
    out[:k, :k] = np.diag(sigma)
    return out


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def kron_all(*ms) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in ms:
        out = np.kron(out, m)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_unitary(m, tol: float = EQ_TOL) -> bool:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    return op_norm(dagger(a) @ a - np.eye(a.shape[0])) < tol


def require_unitary(m, name: str = "matrix", tol: float = EQ_TOL) -> np.ndarray:
    a = as_matrix(m, name)
    if not is_unitary(a, tol):
        raise InvalidInput(f"{name} is not unitary to {tol:g}")
    return a


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest isometry (in any unitarily invariant norm): L[:, :k] R."""
    left, _, right = np.linalg.svd(as_matrix(m), full_matrices=False)
    return left @ right


def complete_basis(cols: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the orthocomplement of ``cols``.

    Uses QR with column pivoting on (I - P) applied to the standard basis.
    """
    import scipy.linalg

    dim, k = cols.shape
    if k == dim:
        return np.zeros((dim, 0), dtype=complex)
    residual = np.eye(dim, dtype=complex) - cols @ dagger(cols)
    q, _, _ = scipy.linalg.qr(residual, pivoting=True)
    comp = q[:, : dim - k]
    # one re-orthogonalisation pass against cols keeps ORTHO_TOL comfortably
    comp = comp - cols @ (dagger(cols) @ comp)
    comp, _ = np.linalg.qr(comp)
    return comp


@dataclass(frozen=True)
class SubspaceBasis:
    """An isometry whose columns span a subspace S of C^ambient_dim."""

    basis: np.ndarray

    def __post_init__(self):
        b = as_matrix(self.basis, "basis")
        if b.shape[1] > b.shape[0]:
            raise InvalidInput("more basis vectors than the ambient dimension")
        gram = dagger(b) @ b
        if b.shape[1] and op_norm(gram - np.eye(b.shape[1])) > ORTHO_TOL * 100:
            raise InvalidInput("basis columns are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def from_vectors(cls, vectors) -> "SubspaceBasis":
        """Orthonormalise arbitrary spanning columns."""
        q, _ = np.linalg.qr(as_matrix(vectors))
        return cls(q)

    @classmethod
    def full(cls, dim: int) -> "SubspaceBasis":
        return cls(np.eye(dim, dtype=complex))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def projector(self) -> np.ndarray:
        return self.basis @ dagger(self.basis)

    @cached_property
    def complement(self) -> np.ndarray:
        return complete_basis(self.basis)


def restrict(m, s: SubspaceBasis) -> np.ndarray:
    """M composed with the isometry of S: a map from S-coordinates into T."""
    a = as_matrix(m)
    if a.shape[1] != s.ambient_dim:
        raise InvalidInput(
            f"subspace lives in dim {s.ambient_dim}, matrix has {a.shape[1]} columns"
        )
    return a @ s.basis


def rng_from(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, seed) -> np.ndarray:
    rng = rng_from(seed)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def haar_unitary(dim: int, seed) -> np.ndarray:
    if dim < 1:
        raise InvalidInput("dim must be >= 1")
    q, r = np.linalg.qr(ginibre(dim, dim, seed))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian_unit(dim: int, seed) -> np.ndarray:
    """GUE sample rescaled to operator norm exactly one."""
    if dim < 1:
        raise InvalidInput("dim must be >= 1")
    g = ginibre(dim, dim, seed)
    h = (g + dagger(g)) / 2
    if dim == 1 and abs(h[0, 0]) == 0:
        h = np.ones((1, 1), dtype=complex)
    h = h / np.max(np.abs(np.linalg.eigvalsh(h)))
    return (h + dagger(h)) / 2


def random_subspace(ambient: int, dim: int, seed) -> SubspaceBasis:
    return SubspaceBasis(haar_unitary(ambient, seed)[:, :dim])


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(i t h) for Hermitian h via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ dagger(v)
