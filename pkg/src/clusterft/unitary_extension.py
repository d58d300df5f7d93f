"""Constructive unitary extensions and the supporting matrix inequalities.

Given unitaries that agree (or nearly agree) on a subspace S, build a new
unitary that matches one of them exactly on S while staying close to the
other in operator norm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    EQ_TOL,
    InvalidInput,
    SubspaceBasis,
    as_matrix,
    dagger,
    expm_hermitian,
    haar_unitary,
    op_norm,
    random_hermitian_unit,
    random_subspace,
    require_unitary,
    restrict,
    rng_from,
)


class PreconditionError(ValueError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True)
class ExtensionCertificate:
    extension: np.ndarray
    restriction_residual: float
    bound_lhs: float
    bound_rhs: float

    @property
    def holds(self) -> bool:
        return self.bound_lhs <= self.bound_rhs + EQ_TOL


def _check_dims(s: SubspaceBasis, *ms):
    for m in ms:
        if m.shape != (s.ambient_dim, s.ambient_dim):
            raise InvalidInput(f"operator of shape {m.shape} vs subspace ambient dim {s.ambient_dim}")


def extend_first(u, u_tilde, v, s: SubspaceBasis, tol: float = EQ_TOL) -> ExtensionCertificate:
    """Ṽ = V P + V U† Ũ Q for U, Ũ agreeing on S.

    Ṽ agrees with V on S and ||Ṽ - Ũ|| <= ||V - U||.  The measured
    agreement residual of U and Ũ on S is added to the right-hand side.
    """
    u = require_unitary(u, "U")
    u_tilde = require_unitary(u_tilde, "U~")
    v = require_unitary(v, "V")
    _check_dims(s, u, u_tilde, v)
    hyp = op_norm(restrict(u, s) - restrict(u_tilde, s))
    if hyp >= tol:
        raise PreconditionError("U and U~ differ on S", hyp)
    p = s.projector
    q = np.eye(s.ambient_dim) - p
    ext = v @ p + v @ dagger(u) @ u_tilde @ q
    return ExtensionCertificate(
        extension=ext,
        restriction_residual=op_norm(restrict(ext - v, s)),
        bound_lhs=op_norm(ext - u_tilde),
        bound_rhs=op_norm(v - u) + hyp,
    )


def block_decompose(m, s: SubspaceBasis):
    """Blocks of M in the basis [S, S⊥], laid out as [[A, C], [B, D]].

    A maps S to S, B maps S to S⊥, C maps S⊥ to S, D maps S⊥ to S⊥.
    """
    m = as_matrix(m)
    _check_dims(s, m)
    b_s, b_perp = s.basis, s.complement
    return (
        dagger(b_s) @ m @ b_s,
        dagger(b_perp) @ m @ b_s,
        dagger(b_s) @ m @ b_perp,
        dagger(b_perp) @ m @ b_perp,
    )


def extend_second(u, v, s: SubspaceBasis) -> ExtensionCertificate:
    """Unitary Ṽ with Ṽ|_S = V|_S and ||U - Ṽ|| <= 2 ||U|_S - V|_S||.

    Work with V' = U†V.  With D = L Σ R the S⊥ block of V', right-multiplying
    by R† L† on S⊥ makes that block L Σ L†, which is positive.
    """
    u = require_unitary(u, "U")
    v = require_unitary(v, "V")
    _check_dims(s, u, v)
    v_rel = dagger(u) @ v
    ext_rel = v_rel
    if s.dim < s.ambient_dim:
        b_perp = s.complement
        _, _, _, d = block_decompose(v_rel, s)
        left, _, right = np.linalg.svd(d)
        fix = s.projector + b_perp @ dagger(right) @ dagger(left) @ dagger(b_perp)
        ext_rel = v_rel @ fix
    ext = u @ ext_rel
    return ExtensionCertificate(
        extension=ext,
        restriction_residual=op_norm(restrict(ext - v, s)),
        bound_lhs=op_norm(u - ext),
        bound_rhs=2 * op_norm(restrict(u, s) - restrict(v, s)),
    )


def sigma_min(m) -> float:
    m = as_matrix(m)
    if m.size == 0:
        return 1.0
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def sigma_min_blocks(w, s: SubspaceBasis) -> tuple[float, float]:
    """(σ_min(A), σ_min(D)) for a unitary W split over S ⊕ S⊥; these agree
    for any split sizes since λ_1(B†B) = λ_1(BB†)."""
    a, _, _, d = block_decompose(w, s)
    return sigma_min(a), sigma_min(d)


def contraction_gap(m) -> tuple[float, float]:
    """(||I - M||, 1 - σ_min(M)) for a contraction M."""
    m = as_matrix(m)
    return op_norm(np.eye(m.shape[0]) - m), 1.0 - sigma_min(m)


def positive_block_gap(m, split: int) -> tuple[float, float]:
    """(||M||, ||A|| + ||C||) for positive M = [[A, B], [B†, C]], A split x split."""
    m = as_matrix(m)
    return op_norm(m), op_norm(m[:split, :split]) + op_norm(m[split:, split:])


def random_instance(dim: int, sub_dim: int, seed, spread: float | None = None) -> tuple:
    """(U, U~, V, S) with U~ = U on S (and arbitrary on S⊥) and V a
    perturbation of U with ||V - U|| = spread (random in (0, 1] if None)."""
    rng = rng_from(seed)
    if not 1 <= sub_dim <= dim:
        raise InvalidInput("need 1 <= sub_dim <= dim")
    s = random_subspace(dim, sub_dim, rng)
    u = haar_unitary(dim, rng)
    frame = np.hstack([s.basis, s.complement])
    y = np.eye(dim, dtype=complex)
    y[sub_dim:, sub_dim:] = haar_unitary(dim - sub_dim, rng) if sub_dim < dim else y[sub_dim:, sub_dim:]
    u_tilde = u @ frame @ y @ dagger(frame)
    eta = float(rng.uniform(0.0, 1.0)) if spread is None else spread
    v = expm_hermitian(random_hermitian_unit(dim, rng), 2 * np.arcsin(eta / 2)) @ u
    return u, u_tilde, v, s
