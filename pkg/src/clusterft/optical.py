"""Dangling-node cluster growth with non-deterministic CZ gates, the
postselected-gate analysis and the optical threshold arithmetic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from . import simulator as sim
from .blocks import BlockCircuit, BlockGate
from .cluster import ClusterGraph, Node, prepare, z_delete
from .linalg import InvalidInput, as_matrix, complete_basis, op_norm, polar_unitary, rng_from

POSTSELECT_TOL = 1e-9


@dataclass(frozen=True)
class GrowthParams:
    k: int
    p_f: float
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidInput("k must be >= 2")
        if not 0.0 <= self.p_f <= 1.0:
            raise InvalidInput("p_f must lie in [0, 1]")
        if self.trials < 1:
            raise InvalidInput("trials must be >= 1")


@dataclass(frozen=True)
class ThresholdParams:
    eta_th: float = 1e-3
    c1: float = 50.0
    c2: float = 5.0

    def __post_init__(self):
        if min(self.eta_th, self.c1, self.c2) <= 0:
            raise InvalidInput("eta_th, c1 and c2 must be positive")


# ---------------------------------------------------------------- growth


@dataclass(frozen=True)
class CZAttempt:
    success: bool
    state: sim.StateVector
    graph: ClusterGraph
    m_a: int | None = None
    m_b: int | None = None
    prob: float = 1.0


def nondet_cz(state, graph: ClusterGraph, a: int, b: int, p_f: float, forced_success=None, forced_m=None, seed=None) -> CZAttempt:
    """CZ between nodes a, b that fails with probability p_f.  A failure
    measures both nodes in the computational basis and removes them,
    applying Z^m to their neighbours.  ``prob`` is the probability of the
    returned branch (coin times measurement outcomes)."""
    if not 0.0 <= p_f <= 1.0:
        raise InvalidInput("p_f must lie in [0, 1]")
    graph.node(a)
    graph.node(b)
    rng = rng_from(seed)
    success = (rng.random() >= p_f) if forced_success is None else bool(forced_success)
    coin = (1.0 - p_f) if success else p_f
    if coin == 0.0:
        raise sim.SimulationError("forced CZ outcome has probability zero")
    if success:
        state = sim.apply(state, gates.CZ, [graph.index(a), graph.index(b)])
        graph = ClusterGraph(graph.nodes, graph.edges + ((a, b),))
        return CZAttempt(True, state, graph, prob=coin)
    fa, fb = forced_m if forced_m is not None else (None, None)
    pa = sim.probabilities(state, [graph.index(a)])
    m_a, state, graph = z_delete(state, graph, a, forced=fa, seed=rng)
    pb = sim.probabilities(state, [graph.index(b)])
    m_b, state, graph = z_delete(state, graph, b, forced=fb, seed=rng)
    return CZAttempt(False, state, graph, m_a, m_b, coin * pa[m_a] * pb[m_b])


def adjoin_success_prob(k: int, p_f: float, levels: int = 1) -> float:
    if k < 2:
        raise InvalidInput("k must be >= 2")
    if levels not in (1, 2):
        raise InvalidInput("levels must be 1 or 2")
    q = p_f ** (k - 1)
    return 1.0 - q if levels == 1 else 1.0 - 2.0 * q + q * q


@dataclass(frozen=True)
class GrowthEstimate:
    p_hat: float
    ci95: tuple
    defect_rate: float
    mean_attempts: float


def monte_carlo_growth(params: GrowthParams, levels: int = 1) -> GrowthEstimate:
    """Each level tries dangling nodes 1..k-1 in turn and stops at the first
    successful CZ; the adjoin succeeds only if every level succeeds."""
    if levels not in (1, 2):
        raise InvalidInput("levels must be 1 or 2")
    rng = np.random.default_rng(params.seed)
    ok = rng.random((params.trials, levels, params.k - 1)) >= params.p_f
    level_ok = ok.any(axis=2)
    first = np.where(level_ok, ok.argmax(axis=2) + 1, params.k - 1)
    success = level_ok.all(axis=1)
    p_hat = float(success.mean())
    half = 1.96 * np.sqrt(p_hat * (1 - p_hat) / params.trials)
    return GrowthEstimate(p_hat, (max(0.0, p_hat - half), min(1.0, p_hat + half)), 1.0 - p_hat, float(first.mean()))


def microcluster(base: int, k: int, level: int = 0) -> ClusterGraph:
    """Star graph: base node plus k dangling nodes with ids base+1..base+k."""
    nodes = tuple(Node(base + j, level, 0, 0.0, True, base + j) for j in range(k + 1))
    return ClusterGraph(nodes, tuple((base, base + j) for j in range(1, k + 1)))


def _union(g: ClusterGraph, h: ClusterGraph) -> ClusterGraph:
    return ClusterGraph(g.nodes + h.nodes, g.edges + h.edges)


def _drop_isolated(state, graph: ClusterGraph, node_id: int):
    """Remove a node that has no edges left; it must be exactly |+>."""
    if graph.neighbors(node_id):
        raise InvalidInput(f"node {node_id} still has edges")
    q = graph.index(node_id)
    _, post, prob = sim.measure(state, q, gates.H, forced=0)
    if abs(prob - 1.0) > 1e-10:
        raise sim.SimulationError(f"node {node_id} is not in |+>")
    return sim.discard(post, q, 0), graph.without(node_id)


@dataclass(frozen=True)
class AdjoinBranch:
    attempts: tuple  # per attempt: (success, m_a, m_b)
    success: bool
    prob: float
    graph: ClusterGraph
    error: float  # ||state - prepare(graph)||


def adjoin_branches(k: int, p_f: float = 0.5) -> list:
    """Enumerate every branch of one single-level adjoin at state level.

    Microcluster A (base 0, dangling 1..k) is grown by attaching the base of
    a fresh microcluster to dangling node i = 1..k-1 in turn.  On success the
    unused dangling nodes of A are Z-deleted; on failure the failed
    microcluster's orphaned dangling nodes are dropped.  Each branch records
    the deviation of the final state from prepare() of its graph.
    """
    if k < 2:
        raise InvalidInput("k must be >= 2")
    start = microcluster(0, k)
    out = []

    def finish(state, graph, attempts, prob, success):
        err = float(np.linalg.norm(state.amplitudes - prepare(graph).amplitudes))
        out.append(AdjoinBranch(tuple(attempts), success, prob, graph, err))

    def walk(i, state, graph, attempts, prob):
        if i == k:
            finish(state, graph, attempts, prob, False)
            return
        mc = microcluster(100 * i, k)
        state = sim.tensor(state, prepare(mc).amplitudes)
        graph = _union(graph, mc)
        a, b = i, 100 * i
        ok = nondet_cz(state, graph, a, b, p_f, forced_success=True)
        extra = [j for j in range(1, k + 1) if j != i and j in {n.id for n in ok.graph.nodes}]
        for ms in np.ndindex(*(2,) * len(extra)):
            s, g, pr = ok.state, ok.graph, prob * ok.prob
            try:
                for j, m in zip(extra, ms):
                    pr *= sim.probabilities(s, [g.index(j)])[m]
                    _, s, g = z_delete(s, g, j, forced=m)
            except sim.SimulationError:
                continue
            finish(s, g, attempts + [(True, None, None)], pr, True)
        for ma in (0, 1):
            for mb in (0, 1):
                try:
                    bad = nondet_cz(state, graph, a, b, p_f, forced_success=False, forced_m=(ma, mb))
                except sim.SimulationError:
                    continue
                s, g = bad.state, bad.graph
                for j in range(1, k + 1):
                    s, g = _drop_isolated(s, g, 100 * i + j)
                walk(i + 1, s, g, attempts + [(False, ma, mb)], prob * bad.prob)

    walk(1, prepare(start), start, [], 1.0)
    return out


# ---------------------------------------------------------------- postselected gates


@dataclass(frozen=True)
class PostselectAnalysis:
    p: float
    V: np.ndarray
    beta_prime: np.ndarray
    beta_doubleprime: np.ndarray
    residual: float
    U: np.ndarray
    dims: tuple

    @property
    def is_postselected(self) -> bool:
        return self.residual < POSTSELECT_TOL


def _branch_ops(u: np.ndarray, beta: np.ndarray, dims: tuple) -> np.ndarray:
    """ops[b] = (I ⊗ <b|) U (I ⊗ |beta>) as an array (dB, dA, dA)."""
    da, db = dims
    k = (u @ np.kron(np.eye(da), beta.reshape(-1, 1))).reshape(da, db, da)
    return k.transpose(1, 0, 2)


def _contract(ops: np.ndarray, c: np.ndarray) -> np.ndarray:
    """<c| applied on the B side."""
    return np.tensordot(c.conj(), ops, axes=(0, 0))


def _fit(ops: np.ndarray, bp: np.ndarray, da: int) -> tuple:
    """(p, V, residual, beta'') for a candidate success direction."""
    bp = bp / np.linalg.norm(bp)
    kp = _contract(ops, bp)
    p = float(np.clip(np.linalg.norm(kp) ** 2 / da, 0.0, 1.0))
    v = polar_unitary(kp) if p > 0 else np.eye(da, dtype=complex)
    residual = op_norm(kp - np.sqrt(p) * v)
    rest = ops - np.einsum("b,ij->bij", bp, kp)
    rl, rs, _ = np.linalg.svd(rest.reshape(ops.shape[0], da * da))
    if rs[0] > 1e-12:
        bpp = rl[:, 0] - bp * np.vdot(bp, rl[:, 0])
    else:
        bpp = complete_basis(bp.reshape(-1, 1))[:, 0] if ops.shape[0] > 1 else np.zeros_like(bp)
    n = np.linalg.norm(bpp)
    return p, v, residual, bpp / n if n > 0 else bpp


def _bloch_candidates(ops: np.ndarray, u1: np.ndarray, u2: np.ndarray, da: int) -> list:
    """Directions in span{u1, u2} whose branch operator is proportional to a
    unitary: a linear condition on the Bloch vector."""
    k1, k2 = _contract(ops, u1), _contract(ops, u2)
    a11, a22, a12 = k1.conj().T @ k1, k2.conj().T @ k2, k1.conj().T @ k2
    a21 = a12.conj().T
    eye = np.eye(da)
    cols = [(a12 + a21) / 2, 1j * (a21 - a12) / 2, (a11 - a22) / 2]
    traceless = [c - np.trace(c) / da * eye for c in cols]
    mat = np.stack([np.concatenate([t.real.ravel(), t.imag.ravel()]) for t in traceless], axis=1)
    _, sv, vt = np.linalg.svd(mat)
    null = vt[sv < 1e-9 * max(sv[0], 1.0)]
    if null.shape[0] == 0:
        null = vt[-1:]
    gvec = np.real([np.trace(c) for c in cols]) / da
    proj = null.T @ (null @ gvec)
    ns = [proj / np.linalg.norm(proj)] if np.linalg.norm(proj) > 1e-12 else []
    ns += [r for r in null] + [-r for r in null]
    out = []
    for n in ns:
        theta, phi = np.arccos(np.clip(n[2], -1, 1)), np.arctan2(n[1], n[0])
        out.append(np.cos(theta / 2) * u1 + np.exp(1j * phi) * np.sin(theta / 2) * u2)
    return out


def postselect_analyze(u, beta, dims: tuple, beta_prime=None) -> PostselectAnalysis:
    """Fit U|psi>|beta> = sqrt(p) V|psi>|beta'> + sqrt(1-p)|fail>, with the
    failure part orthogonal to |beta'> on B.

    That form holds exactly when <beta'|U|beta> (an operator on A) is
    proportional to a unitary; the residual is ||<beta'|U|beta> - sqrt(p) V||.
    Without ``beta_prime`` the success direction is searched among the
    leading branch directions of U on |beta>: singular directions, and
    solutions of the proportional-to-unitary condition in the top two.
    Among candidates that fit, the largest p wins.  beta'' is the dominant
    failure direction.
    """
    u = as_matrix(u, "U")
    da, db = dims
    if u.shape != (da * db, da * db):
        raise InvalidInput(f"U has shape {u.shape}, dims give {da * db}")
    beta = np.asarray(beta, dtype=complex).reshape(-1)
    if beta.size != db:
        raise InvalidInput("beta does not match the B dimension")
    beta = beta / np.linalg.norm(beta)
    ops = _branch_ops(u, beta, dims)
    if beta_prime is not None:
        cands = [np.asarray(beta_prime, dtype=complex).reshape(-1)]
    else:
        left, s, _ = np.linalg.svd(ops.reshape(db, da * da))
        rank = int(np.sum(s > 1e-12 * max(s[0], 1.0)))
        cands = [left[:, j] for j in range(max(rank, 1))]
        if rank >= 2:
            cands += _bloch_candidates(ops, left[:, 0], left[:, 1], da)
    fits = [(_fit(ops, c, da), c) for c in cands]
    good = [f for f in fits if f[0][2] < POSTSELECT_TOL]
    (p, v, residual, bpp), bp = max(good, key=lambda f: f[0][0]) if good else min(fits, key=lambda f: f[0][2])
    return PostselectAnalysis(p, v, bp / np.linalg.norm(bp), bpp, residual, u, (da, db))


def postselected_unitary(v, psi_fail, p: float, beta, beta_prime, beta_doubleprime) -> np.ndarray:
    """A unitary on A⊗B with U|psi>|beta> = sqrt(p) V|psi>|beta'> +
    sqrt(1-p) Psi|psi>|beta''>, completed arbitrarily elsewhere."""
    v, psi_fail = as_matrix(v), as_matrix(psi_fail)
    da = v.shape[0]
    col = lambda x: np.asarray(x, dtype=complex).reshape(-1, 1)
    k = np.sqrt(p) * np.kron(v, col(beta_prime)) + np.sqrt(1 - p) * np.kron(psi_fail, col(beta_doubleprime))
    j = np.kron(np.eye(da), col(beta))
    out_cols = np.hstack([k, complete_basis(k)])
    in_cols = np.hstack([j, complete_basis(j)])
    return out_cols @ in_cols.conj().T


def companion_w(analysis: PostselectAnalysis, beta) -> tuple:
    """W with W|beta> = |beta'> and the achieved ||(U - V⊗W)|_T||, where T
    holds the states |psi>|beta>."""
    if not analysis.is_postselected:
        raise InvalidInput(f"U is not a postselected gate (residual {analysis.residual:.3g})")
    beta = np.asarray(beta, dtype=complex).reshape(-1, 1)
    beta = beta / np.linalg.norm(beta)
    bp = analysis.beta_prime.reshape(-1, 1)
    w = np.hstack([bp, complete_basis(bp)]) @ np.hstack([beta, complete_basis(beta)]).conj().T
    da = analysis.dims[0]
    j = np.kron(np.eye(da), beta)
    achieved = op_norm((analysis.U - np.kron(analysis.V, w)) @ j)
    return w, achieved


def unitarized_adjoin(k: int, p_f: float, levels: int = 1) -> tuple:
    """Coherent model of one adjoin step as a block circuit.

    Data: a (dangling node, new base) pair per level.  Ancilla: k-1 coins
    per level, each rotated so |1> (failure) has weight p_f.  The adjoin CZ
    is applied to a level's pair when any of its coins reads 0, and the
    success branch needs every level to succeed.  Returns (block, dims,
    beta, beta') with data registers first; beta is the all-zero coin
    state and beta' the normalised success part of the rotated coins.
    """
    if levels not in (1, 2):
        raise InvalidInput("levels must be 1 or 2")
    data = tuple(f"{r}{l}" for l in range(levels) for r in ("D", "B"))
    coins = tuple(f"F{l}_{j}" for l in range(levels) for j in range(k - 1))
    regs = data + coins
    theta = 2 * np.arcsin(np.sqrt(p_f))
    ry = np.array([[np.cos(theta / 2), -np.sin(theta / 2)], [np.sin(theta / 2), np.cos(theta / 2)]], dtype=complex)
    gs = [BlockGate(f"coin({c})", ry, (c,)) for c in coins]
    for l in range(levels):
        lc = coins[l * (k - 1) : (l + 1) * (k - 1)]
        n_c = len(lc)
        dim = 4 * 2**n_c
        diag = np.ones(dim, dtype=complex)
        # CZ on the pair unless every coin is 1 (the last coin index)
        for pair in range(4):
            if pair == 3:
                for c_idx in range(2**n_c - 1):
                    diag[pair * 2**n_c + c_idx] = -1
        gs.append(BlockGate(f"adjoin-CZ(level {l})", np.diag(diag), (f"D{l}", f"B{l}") + lc, noisy=True))
    block = BlockCircuit(regs, tuple(gs))
    beta = np.eye(2 ** len(coins), dtype=complex)[0]
    # success component of the coin state: every level has a coin at 0
    coin = ry @ gates.KET0
    state = np.ones(1, dtype=complex)
    for _ in coins:
        state = np.kron(state, coin)
    amp = state.reshape((2 ** (k - 1),) * levels)
    mask = np.ones_like(amp, dtype=bool)
    for l in range(levels):
        idx = [slice(None)] * levels
        idx[l] = 2 ** (k - 1) - 1
        mask[tuple(idx)] = False
    beta_prime = np.where(mask, amp, 0).reshape(-1)
    return block, (2 ** len(data), 2 ** len(coins)), beta, beta_prime / np.linalg.norm(beta_prime)


# ---------------------------------------------------------------- threshold


def _sqrt_term(p_s: float) -> float:
    return 2.0 * np.sqrt(2.0 * max(0.0, 1.0 - np.sqrt(p_s)))


def effective_noise(eta: float, k: int, p_f: float, tp: ThresholdParams) -> float:
    p_s = adjoin_success_prob(k, p_f, 2)
    return tp.c1 * k * k * eta + tp.c2 * eta + _sqrt_term(p_s)


def ocs_threshold(tp: ThresholdParams, p_f: float, k: int) -> float:
    p_s = adjoin_success_prob(k, p_f, 2)
    return (tp.eta_th - _sqrt_term(p_s)) / (tp.c1 * k * k + tp.c2)


def threshold_table(tp: ThresholdParams, p_f: float, k_max: int) -> list:
    if k_max < 2:
        raise InvalidInput("k_max must be >= 2")
    return [(k, ocs_threshold(tp, p_f, k)) for k in range(2, k_max + 1)]


def optimize_k(tp: ThresholdParams, p_f: float, k_max: int) -> tuple:
    table = threshold_table(tp, p_f, k_max)
    return max(table, key=lambda kv: kv[1])


def min_k_positive(tp: ThresholdParams, p_f: float) -> int | None:
    """Smallest k with a positive threshold, from 2 sqrt(2 p_f^(k-1)) < eta_th
    (the two-level square root term equals 2 sqrt(2 q) with q = p_f^(k-1))."""
    if p_f == 0:
        return 2
    if p_f >= 1:
        return None
    # q < eta_th^2 / 8
    bound = np.log(tp.eta_th**2 / 8.0) / np.log(p_f)
    k = max(2, int(np.floor(bound)) + 2)
    while k > 2 and ocs_threshold(tp, p_f, k - 1) > 0:
        k -= 1
    while ocs_threshold(tp, p_f, k) <= 0:
        k += 1
    return k
