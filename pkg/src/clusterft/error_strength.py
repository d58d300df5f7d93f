"""Error strength: min over environment unitaries W of ||V - U ⊗ W||.

The minimisation is non-convex and the objective non-smooth, so ``delta``
returns a certified *upper* bound: the reported value is exactly attained by
the returned environment unitary.  Search is multi-start Riemannian descent
on the Schatten-p norm with p increasing, tracking the true spectral norm at
every iterate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .linalg import (
    EQ_TOL,
    InvalidInput,
    dagger,
    haar_unitary,
    op_norm,
    polar_unitary,
    require_unitary,
)


@dataclass(frozen=True)
class Partition:
    q_dim: int
    e_dim: int

    @property
    def dim(self) -> int:
        return self.q_dim * self.e_dim


@dataclass(frozen=True)
class DeltaOptions:
    starts: int = 8
    seed: int = 0
    p_schedule: tuple = (8, 32, 128, 512)
    iters_per_stage: int = 60
    scan_points: int = 4096
    agree_tol: float = 1e-6


@dataclass(frozen=True)
class DeltaResult:
    upper_bound: float
    argmin_env: np.ndarray
    converged: bool
    start_values: tuple = field(default=(), repr=False)


def _partial_trace_q(m: np.ndarray, part: Partition) -> np.ndarray:
    q, e = part.q_dim, part.e_dim
    return np.einsum("iaib->ab", m.reshape(q, e, q, e))


def _objective(a: np.ndarray, w: np.ndarray, q_dim: int) -> float:
    return op_norm(a - np.kron(np.eye(q_dim), w))


class _BatchedDescent:
    """Riemannian gradient descent on U(e) for ||A - I ⊗ W||_p, run for all
    starts in lockstep so SVDs and eigendecompositions are batched."""

    def __init__(self, a: np.ndarray, part: Partition, starts):
        self.a = a
        self.part = part
        self.diag = np.arange(part.q_dim)
        self.w = np.array(starts, dtype=complex)
        n = len(starts)
        self.best_value = np.full(n, np.inf)
        self.best_w = self.w.copy()

    def _eval(self, idx, w, p):
        q, e = self.part.q_dim, self.part.e_dim
        d = np.repeat(self.a[None], len(idx), axis=0)
        blocks = d.reshape(len(idx), q, e, q, e)
        # advanced indices come first: the view is (q, batch, e, e)
        blocks[:, self.diag, :, self.diag, :] -= w[None]
        left, s, right = np.linalg.svd(d)
        true_val = s[:, 0]
        better = true_val < self.best_value[idx]
        self.best_value[idx[better]] = true_val[better]
        self.best_w[idx[better]] = w[better]
        top = np.where(true_val > 0, true_val, 1.0)
        fp = top * np.sum((s / top[:, None]) ** p, axis=1) ** (1.0 / p)
        return fp, left, s, right

    def _gradient(self, w, fp, left, s, right, p):
        q, e = self.part.q_dim, self.part.e_dim
        # a zero objective has zero gradient
        weights = (s / np.where(fp > 0, fp, 1.0)[:, None]) ** (p - 1)
        g_d = (left * weights[:, None, :]) @ right
        g_w = -np.einsum("siaib->sab", g_d.reshape(len(w), q, e, q, e))
        c = 1j * np.conj(np.swapaxes(g_w, 1, 2)) @ w
        return (c + np.conj(np.swapaxes(c, 1, 2))) / 2

    def run(self, p_schedule, iters):
        n = len(self.w)
        all_idx = np.arange(n)
        step = np.full(n, 0.1)
        for p in p_schedule:
            f, left, s, right = self._eval(all_idx, self.w, p)
            gam = self._gradient(self.w, f, left, s, right, p)
            active = np.ones(n, dtype=bool)
            for _ in range(iters):
                gnorm2 = np.real(np.einsum("sij,sij->s", gam.conj(), gam))
                active &= gnorm2 > 1e-26
                idx = all_idx[active]
                if idx.size == 0:
                    break
                vals, vecs = np.linalg.eigh(gam[idx])
                t = step[idx].copy()
                accepted = np.zeros(idx.size, dtype=bool)
                w_new = self.w[idx].copy()
                f_new = f[idx].copy()
                for _ in range(30):
                    pend = ~accepted
                    if not pend.any():
                        break
                    phase = np.exp(-1j * t[pend][:, None] * vals[pend])
                    rot = (vecs[pend] * phase[:, None, :]) @ np.conj(np.swapaxes(vecs[pend], 1, 2))
                    cand = self.w[idx[pend]] @ rot
                    fc, *_ = self._eval(idx[pend], cand, p)
                    ok = fc <= f[idx[pend]] - 1e-4 * t[pend] * gnorm2[idx[pend]]
                    where = np.flatnonzero(pend)
                    w_new[where[ok]] = cand[ok]
                    f_new[where[ok]] = fc[ok]
                    accepted[where[ok]] = True
                    t[where[~ok]] *= 0.5
                stalled = (f[idx] - f_new) < 1e-13 * np.maximum(f[idx], 1.0)
                active[idx[~accepted | stalled]] = False
                moved = idx[accepted]
                if moved.size == 0:
                    break
                self.w[moved] = w_new[accepted]
                step[moved] = np.minimum(t[accepted] * 2.0, 10.0)
                fm, lm, sm, rm = self._eval(moved, self.w[moved], p)
                f[moved] = fm
                gam[moved] = self._gradient(self.w[moved], fm, lm, sm, rm, p)


def _scalar_env(a: np.ndarray, opts: DeltaOptions):
    # e_dim = 1: W is a single phase
    thetas = np.linspace(-np.pi, np.pi, opts.scan_points, endpoint=False)
    vals = np.array([op_norm(a - np.exp(1j * t) * np.eye(a.shape[0])) for t in thetas])
    i = int(np.argmin(vals))
    h = 2 * np.pi / opts.scan_points
    res = minimize_scalar(
        lambda t: op_norm(a - np.exp(1j * t) * np.eye(a.shape[0])),
        bounds=(thetas[i] - h, thetas[i] + h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    theta, val = (res.x, res.fun) if res.fun < vals[i] else (thetas[i], vals[i])
    return float(val), np.array([[np.exp(1j * theta)]])


def delta(u_q, v_qe, part: Partition, opts: DeltaOptions | None = None, warm_starts=()) -> DeltaResult:
    """Upper bound on min_W ||V_QE - U_Q ⊗ W|| with its witness W.

    ``warm_starts`` are extra environment unitaries tried alongside the
    polar-decomposition warm start, the identity and random Haar starts.
    """
    opts = opts or DeltaOptions()
    u_q = require_unitary(u_q, "U_Q")
    v_qe = require_unitary(v_qe, "V_QE")
    if u_q.shape[0] != part.q_dim or v_qe.shape[0] != part.dim:
        raise InvalidInput(
            f"dimensions {u_q.shape[0]}, {v_qe.shape[0]} do not match partition {part}"
        )
    a = np.kron(dagger(u_q), np.eye(part.e_dim)) @ v_qe

    if part.e_dim == 1:
        value, w = _scalar_env(a, opts)
        return DeltaResult(value, w, True, (value,))

    fixed = [polar_unitary(_partial_trace_q(a, part)), np.eye(part.e_dim, dtype=complex)]
    for w in warm_starts:
        fixed.append(require_unitary(w, "warm start", tol=1e-8))
    rng = np.random.default_rng(opts.seed)
    starts = list(fixed)
    while len(starts) < max(opts.starts, len(fixed) + 1):
        starts.append(haar_unitary(part.e_dim, rng))

    run = _BatchedDescent(a, part, starts)
    run.run(opts.p_schedule, opts.iters_per_stage)
    finals = tuple(float(v) for v in run.best_value)
    # ties resolve to the lowest start index
    best = int(np.argmin(run.best_value))
    best_w = polar_unitary(run.best_w[best])
    best_value = _objective(a, best_w, part.q_dim)
    agreeing = sum(1 for v in finals if v - best_value <= opts.agree_tol)
    return DeltaResult(best_value, best_w, agreeing >= 2, finals)


def delta_value(u_q, v_qe, part: Partition, **kw) -> float:
    return delta(u_q, v_qe, part, **kw).upper_bound


@dataclass(frozen=True)
class ChainReport:
    lhs: float
    rhs: float
    slack: float
    terms: tuple


def chain_bound(terms, opts: DeltaOptions | None = None) -> ChainReport:
    """Compare the strength of a composed sequence against the sum of the
    individual strengths.  ``terms`` is a list of (U_Q, V_QE, Partition) in
    the order U^1 ... U^m (U^1 leftmost in the product)."""
    if not terms:
        raise InvalidInput("no terms")
    part = terms[0][2]
    if any(t[2] != part for t in terms):
        raise InvalidInput("all terms must share one partition")
    results = [delta(u, v, part, opts) for u, v, _ in terms]
    u_prod = np.eye(part.q_dim, dtype=complex)
    v_prod = np.eye(part.dim, dtype=complex)
    w_prod = np.eye(part.e_dim, dtype=complex)
    for (u, v, _), r in zip(terms, results):
        u_prod = u_prod @ u
        v_prod = v_prod @ v
        w_prod = w_prod @ r.argmin_env
    composed = delta(u_prod, v_prod, part, opts, warm_starts=[w_prod])
    rhs = sum(r.upper_bound for r in results)
    slack = max(0.0, composed.upper_bound - rhs)
    return ChainReport(composed.upper_bound, rhs, slack, tuple(results))


@dataclass(frozen=True)
class SwapResult:
    u_tilde: np.ndarray
    v_tilde: np.ndarray
    product_residual: float
    strength_u_tilde: float
    strength_v_tilde: float
    strength_u: float
    strength_v: float


def commute_swap(u_q, v_q, u_qe, v_qe, part: Partition, opts: DeltaOptions | None = None) -> SwapResult:
    """Reorder two noisy commuting operations: returns Ũ, Ṽ with
    Ũ Ṽ = V_QE U_QE, where Ũ is a noisy U_Q carrying V's noise and vice versa."""
    u_q = require_unitary(u_q, "U_Q")
    v_q = require_unitary(v_q, "V_Q")
    comm = op_norm(u_q @ v_q - v_q @ u_q)
    if comm >= EQ_TOL:
        raise InvalidInput(f"U_Q and V_Q do not commute (residual {comm:.3g})")
    du = delta(u_q, u_qe, part, opts)
    dv = delta(v_q, v_qe, part, opts)
    u_e, v_e = du.argmin_env, dv.argmin_env
    eye = np.eye(part.dim)
    delta_u = dagger(np.kron(u_q, u_e)) @ u_qe - eye
    delta_v = v_qe @ dagger(np.kron(v_q, v_e)) - eye
    u_tilde = (eye + delta_v) @ np.kron(u_q, v_e)
    v_tilde = np.kron(v_q, u_e) @ (eye + delta_u)
    residual = op_norm(u_tilde @ v_tilde - v_qe @ u_qe)
    su = delta(u_q, u_tilde, part, opts, warm_starts=[v_e]).upper_bound
    sv = delta(v_q, v_tilde, part, opts, warm_starts=[u_e]).upper_bound
    return SwapResult(u_tilde, v_tilde, residual, su, sv, du.upper_bound, dv.upper_bound)


@dataclass(frozen=True)
class BoundReport:
    """lhs <= rhs is the claim; slack = max(0, lhs - rhs)."""

    lhs: float
    rhs: float
    slack: float


def repartition_bound(u_a, u_b, v_abc, dims: tuple, opts: DeltaOptions | None = None) -> BoundReport:
    """delta over A:(BC) of U_A vs delta over (AB):C of U_A ⊗ U_B.

    Moving B into the environment only enlarges the set of allowed
    environment unitaries; U_B ⊗ W_C from the right-hand side is used as a
    warm start on the left.
    """
    da, db, dc = dims
    rhs = delta(np.kron(u_a, u_b), v_abc, Partition(da * db, dc), opts)
    lhs = delta(u_a, v_abc, Partition(da, db * dc), opts, warm_starts=[np.kron(u_b, rhs.argmin_env)])
    return BoundReport(lhs.upper_bound, rhs.upper_bound, max(0.0, lhs.upper_bound - rhs.upper_bound))


def omission_bound(u_a, v_ab, v_c, dims: tuple, opts: DeltaOptions | None = None) -> BoundReport:
    """delta over A:(BC) of U_A vs V_AB ⊗ V_C against delta over A:B of
    U_A vs V_AB; W_B ⊗ V_C is the warm start on the left."""
    da, db, dc = dims
    rhs = delta(u_a, v_ab, Partition(da, db), opts)
    lhs = delta(u_a, np.kron(v_ab, v_c), Partition(da, db * dc), opts, warm_starts=[np.kron(rhs.argmin_env, v_c)])
    return BoundReport(lhs.upper_bound, rhs.upper_bound, max(0.0, lhs.upper_bound - rhs.upper_bound))
