"""State-vector simulation with little-endian qubit indexing.

Qubit ``q`` is bit ``q`` of the amplitude index.  A gate acting on the
ordered target list ``[t0, t1, ...]`` is given in kron order, i.e. ``t0`` is
the most significant bit of the gate's own index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from .linalg import as_matrix, rng_from

MAX_QUBITS = 22
NORM_TOL = 1e-10
ZERO_BRANCH = 1e-12


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(a.size))) if a.size else -1
        if n < 0 or 2**n != a.size:
            raise SimulationError(f"length {a.size} is not a power of two")
        if n > MAX_QUBITS:
            raise SimulationError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        a = np.zeros(2**n, dtype=complex)
        a[0] = 1
        return cls(a)

    @classmethod
    def product(cls, kets) -> "StateVector":
        """Product state; ``kets[q]`` is the state of qubit q."""
        a = np.ones(1, dtype=complex)
        for k in kets:
            a = np.kron(np.asarray(k, dtype=complex), a)
        return cls(a)

    @classmethod
    def plus(cls, n: int) -> "StateVector":
        return cls(np.full(2**n, 2 ** (-n / 2), dtype=complex))


def _axis(q: int, n: int) -> int:
    return n - 1 - q


def _check_targets(targets, n: int):
    if len(set(targets)) != len(targets):
        raise SimulationError(f"repeated target in {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise SimulationError(f"target {t} out of range for {n} qubits")


def apply(state: StateVector, gate, targets) -> StateVector:
    targets = list(targets)
    n = state.n_qubits
    _check_targets(targets, n)
    u = as_matrix(gate, "gate")
    k = len(targets)
    if u.shape != (2**k, 2**k):
        raise SimulationError(f"gate of shape {u.shape} does not act on {k} qubits")
    psi = state.amplitudes.reshape((2,) * n)
    axes = [_axis(t, n) for t in targets]
    out = np.tensordot(u.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return StateVector(out.reshape(-1))


def tensor(state: StateVector, ket) -> StateVector:
    """Append new qubits; they take indices n, n+1, ... in ``ket``'s
    little-endian order."""
    return StateVector(np.kron(np.asarray(ket, dtype=complex).reshape(-1), state.amplitudes))


def measure(state: StateVector, qubit: int, basis_rotation=None, forced=None, seed=None):
    """Rotate ``qubit`` by ``basis_rotation`` then measure it in the
    computational basis.  Returns (m, posterior, prob) where the posterior
    keeps the measured qubit in |m>."""
    n = state.n_qubits
    _check_targets([qubit], n)
    if basis_rotation is not None:
        state = apply(state, basis_rotation, [qubit])
    psi = state.amplitudes.reshape((2,) * n)
    ax = _axis(qubit, n)
    p1 = float(np.sum(np.abs(np.take(psi, 1, axis=ax)) ** 2))
    p1 = min(max(p1, 0.0), 1.0)
    probs = (1.0 - p1, p1)
    if forced is None:
        m = int(rng_from(seed).random() < p1)
    else:
        m = int(forced)
        if probs[m] < ZERO_BRANCH:
            raise SimulationError(f"forced outcome {m} has probability {probs[m]:.3g}")
    out = psi.copy()
    sl = [slice(None)] * n
    sl[ax] = 1 - m
    out[tuple(sl)] = 0
    out = out / np.sqrt(probs[m])
    return m, StateVector(out.reshape(-1)), probs[m]


def discard(state: StateVector, qubit: int, value: int) -> StateVector:
    """Drop a qubit known to be in |value>; higher qubits shift down by one."""
    n = state.n_qubits
    _check_targets([qubit], n)
    psi = state.amplitudes.reshape((2,) * n)
    return StateVector(np.take(psi, value, axis=_axis(qubit, n)).reshape(-1))


def probabilities(state: StateVector, qubits) -> np.ndarray:
    """Marginal distribution over ``qubits`` as an array indexed in kron
    order (qubits[0] most significant)."""
    qubits = list(qubits)
    n = state.n_qubits
    _check_targets(qubits, n)
    p = np.abs(state.amplitudes.reshape((2,) * n)) ** 2
    keep = [_axis(q, n) for q in qubits]
    drop = tuple(a for a in range(n) if a not in keep)
    p = p.sum(axis=drop) if drop else p
    remaining = sorted(keep)
    p = np.transpose(p, [remaining.index(a) for a in keep])
    return p.reshape(-1)


@dataclass(frozen=True)
class Distribution:
    """Probabilities keyed by bitstring; character i is the i-th listed qubit."""

    probs: dict

    def __post_init__(self):
        total = sum(self.probs.values())
        if any(p < -NORM_TOL or p > 1 + NORM_TOL for p in self.probs.values()):
            raise SimulationError("probability outside [0, 1]")
        if abs(total - 1) > NORM_TOL:
            raise SimulationError(f"probabilities sum to {total}")

    @classmethod
    def from_array(cls, p: np.ndarray, n_bits: int, cutoff: float = 0.0) -> "Distribution":
        return cls({format(i, f"0{n_bits}b"): float(v) for i, v in enumerate(p) if v > cutoff})

    def __getitem__(self, key) -> float:
        return self.probs.get(key, 0.0)


def distribution(state: StateVector, qubits) -> Distribution:
    qubits = list(qubits)
    if not qubits:
        return Distribution({"": 1.0})
    return Distribution.from_array(probabilities(state, qubits), len(qubits))


def kolmogorov(p: Distribution, q: Distribution) -> float:
    keys = set(p.probs) | set(q.probs)
    return 0.5 * sum(abs(p[k] - q[k]) for k in keys)


def fidelity(a: StateVector, b: StateVector) -> float:
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def embed(gate, targets, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of ``gate`` on ``targets`` (little-endian)."""
    u = as_matrix(gate)
    k = len(targets)
    _check_targets(targets, n)
    full = np.eye(2**n, dtype=complex).reshape((2,) * n + (2**n,))
    axes = [_axis(t, n) for t in targets]
    out = np.tensordot(u.reshape((2,) * (2 * k)), full, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(2**n, 2**n)


def permute_to_kron(u: np.ndarray, order, n: int) -> np.ndarray:
    """Re-express a little-endian n-qubit operator in kron order over
    ``order`` (order[0] most significant).  ``order`` must list every qubit."""
    t = np.asarray(u).reshape((2,) * (2 * n))
    out_axes = [_axis(q, n) for q in order]
    in_axes = [n + _axis(q, n) for q in order]
    return np.transpose(t, out_axes + in_axes).reshape(2**n, 2**n)


def amplitudes_kron(state: StateVector, order) -> np.ndarray:
    """Amplitudes re-indexed in kron order over ``order`` (all qubits)."""
    n = state.n_qubits
    if sorted(order) != list(range(n)):
        raise SimulationError(f"order {order} is not a permutation of {n} qubits")
    t = state.amplitudes.reshape((2,) * n)
    return np.transpose(t, [_axis(q, n) for q in order]).reshape(-1)


def ket_kron_to_little(vec: np.ndarray, order, n: int) -> np.ndarray:
    """Convert a state written in kron order over ``order`` to little-endian."""
    t = np.asarray(vec).reshape((2,) * n)
    # axis i of t is qubit order[i]; target axis for qubit q is n-1-q
    perm = [0] * n
    for i, q in enumerate(order):
        perm[_axis(q, n)] = i
    return np.transpose(t, perm).reshape(-1)


__all__ = [
    "StateVector",
    "Distribution",
    "SimulationError",
    "apply",
    "measure",
    "discard",
    "tensor",
    "distribution",
    "probabilities",
    "kolmogorov",
    "fidelity",
    "embed",
    "permute_to_kron",
    "amplitudes_kron",
    "gates",
]
