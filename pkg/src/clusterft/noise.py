"""Strength-calibrated unitary noise with per-level environments.

A noisy version of an ideal gate U is V = exp(i ε H)(U ⊗ I_env) where H is
Hermitian with ||H|| = 1 on the gate's qubits plus the environments of the
levels it touches, and ε = 2 arcsin(η / 2) so that ||V - U ⊗ I|| = η.
Environments persist for the whole run, so noise can be non-Markovian.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gates
from . import simulator as sim
from .linalg import InvalidInput, as_matrix, expm_hermitian, op_norm, random_hermitian_unit

MODES = ("random", "adversarial", "off")


@dataclass(frozen=True)
class NoiseModel:
    eta: float = 0.0
    env_qubits_per_level: int = 1
    mode: str = "random"
    generators: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 2.0:
            raise InvalidInput(f"eta = {self.eta} outside [0, 2]")
        if self.mode not in MODES:
            raise InvalidInput(f"mode must be one of {MODES}")
        if self.env_qubits_per_level < 0:
            raise InvalidInput("env_qubits_per_level must be >= 0")
        if self.mode == "adversarial" and not self.generators:
            raise InvalidInput("adversarial mode needs at least one generator")

    @property
    def epsilon(self) -> float:
        return 2.0 * np.arcsin(self.eta / 2.0)

    @property
    def active(self) -> bool:
        return self.mode != "off" and self.eta > 0


@dataclass(frozen=True)
class EnvRegistry:
    """level -> labels of that level's environment qubits."""

    envs: dict

    def __post_init__(self):
        seen: set = set()
        for level, labels in self.envs.items():
            overlap = seen & set(labels)
            if overlap:
                raise InvalidInput(f"environment qubits {sorted(overlap)} shared by level {level}")
            seen |= set(labels)

    @classmethod
    def for_levels(cls, levels, per_level: int) -> "EnvRegistry":
        return cls({l: tuple(("env", l, k) for k in range(per_level)) for l in levels})

    def of(self, levels) -> tuple:
        out = []
        for l in sorted(set(levels)):
            if l not in self.envs:
                raise InvalidInput(f"no environment registered for level {l}")
            out.extend(self.envs[l])
        return tuple(out)


@dataclass(frozen=True)
class NoisyOp:
    """A realised noisy operation; ``matrix`` acts in kron order on
    ``targets`` followed by ``env``."""

    kind: str
    levels: tuple
    targets: tuple
    env: tuple
    matrix: np.ndarray

    @property
    def support(self) -> tuple:
        return self.targets + self.env


def _normalised(h) -> np.ndarray:
    h = as_matrix(h, "generator")
    if op_norm(h - h.conj().T) > 1e-10:
        raise InvalidInput("generator is not Hermitian")
    top = np.max(np.abs(np.linalg.eigvalsh(h)))
    if top == 0:
        raise InvalidInput("generator is zero")
    return h / top


def perturb(ideal, levels, model: NoiseModel, envs: EnvRegistry, seed=None, generator_index: int = 0) -> np.ndarray:
    """exp(i ε H)(ideal ⊗ I_env) over the environments of ``levels``."""
    ideal = as_matrix(ideal, "ideal")
    levels = tuple(levels)
    if not levels:
        raise InvalidInput("levels must be non-empty")
    env_dim = 2 ** len(envs.of(levels))
    base = np.kron(ideal, np.eye(env_dim))
    if not model.active:
        return base
    dim = base.shape[0]
    if dim > 2**sim.MAX_QUBITS:
        raise InvalidInput("joint dimension exceeds the simulator limit")
    if model.mode == "random":
        h = random_hermitian_unit(dim, seed)
    else:
        h = _normalised(model.generators[generator_index % len(model.generators)])
        if h.shape[0] != dim:
            raise InvalidInput(f"generator has dim {h.shape[0]}, operation needs {dim}")
    return expm_hermitian(h, model.epsilon) @ base


class NoiseSource:
    """Hands out noisy ops with seeds derived from (seed, op counter), so a
    run's noise realisation depends only on the seed and the op sequence."""

    def __init__(self, model: NoiseModel, envs: EnvRegistry, seed: int = 0):
        self.model = model
        self.envs = envs
        self.seed = seed
        self.counter = 0
        self.log: list = []

    def op(self, kind: str, ideal, targets, levels) -> NoisyOp:
        levels = tuple(sorted(set(levels)))
        rng = np.random.default_rng([self.seed, self.counter])
        matrix = perturb(ideal, levels, self.model, self.envs, rng, generator_index=self.counter)
        self.counter += 1
        env = self.envs.of(levels) if self.model.active else ()
        if not self.model.active:
            matrix = as_matrix(ideal)
        rec = NoisyOp(kind, levels, tuple(targets), env, matrix)
        if self.model.active:
            self.log.append(rec)
        return rec


def noisy_prep_plus(level, model: NoiseModel, envs: EnvRegistry, seed=None) -> tuple:
    """(|+> ket, noise op).  The op acts on (new qubit, env(level)) and is
    applied after the qubit is tensored in."""
    return gates.PLUS.copy(), perturb(gates.I2, (level,), model, envs, seed)


def noisy_measure(state: sim.StateVector, qubit: int, env_qubits, basis_rotation, noise_op, forced=None, seed=None):
    """Noisy memory step on (qubit, env), then rotation and a perfect
    computational-basis measurement.  Returns (m, posterior, prob)."""
    state = sim.apply(state, noise_op, [qubit, *env_qubits])
    return sim.measure(state, qubit, basis_rotation, forced=forced, seed=seed)


@dataclass(frozen=True)
class AuditResult:
    ok: bool
    violations: tuple


def locality_audit(log, envs: EnvRegistry, qubit_level: dict) -> AuditResult:
    """Every noisy op may only touch qubits of its declared levels and those
    levels' environments.  ``qubit_level`` maps system qubit labels to levels."""
    violations = []
    for i, rec in enumerate(log):
        allowed_env = set(envs.of(rec.levels))
        for label in rec.support:
            if label in qubit_level:
                if qubit_level[label] not in rec.levels:
                    violations.append((i, rec.kind, label))
            elif label not in allowed_env:
                violations.append((i, rec.kind, label))
    return AuditResult(not violations, tuple(violations))


def mutual_information(joint: np.ndarray) -> float:
    """Mutual information (bits) of a 2-d joint probability table."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log2(joint[mask] / (pa @ pb)[mask])))


def non_markovian_demo(eta: float = 0.5, reset_env: bool = False) -> float:
    """Two perturbed memory steps on one level, on qubits A then B.

    The first couples A to the environment via X_A X_E, the second flips B
    when the environment is |1>.  With a persistent environment the
    computational-basis outcomes of A and B become correlated; resetting
    the environment in between removes the correlation.  Returns the
    mutual information between A's and B's outcomes.
    """
    envs = EnvRegistry({0: (("env", 0, 0),)})
    p1 = np.diag([0, 1]).astype(complex)
    g1 = NoiseModel(eta, 1, "adversarial", (np.kron(gates.X, gates.X),))
    g2 = NoiseModel(eta, 1, "adversarial", (np.kron(gates.X, p1),))
    v1 = perturb(gates.I2, (0,), g1, envs)
    v2 = perturb(gates.I2, (0,), g2, envs)
    # qubits: 0 = A, 1 = B, 2 = E, all |0>
    if reset_env:
        # reset E to |0> between the steps, averaging over its two branches
        joint = np.zeros((2, 2))
        for forced_m in (0, 1):
            s = sim.apply(sim.StateVector.zeros(3), v1, [0, 2])
            try:
                _, post, prob = sim.measure(s, 2, forced=forced_m)
            except sim.SimulationError:
                continue
            if forced_m:
                post = sim.apply(post, gates.X, [2])
            post = sim.apply(post, v2, [1, 2])
            joint += prob * sim.probabilities(post, [0, 1]).reshape(2, 2)
        return mutual_information(joint)
    state = sim.apply(sim.StateVector.zeros(3), v1, [0, 2])
    state = sim.apply(state, v2, [1, 2])
    return mutual_information(sim.probabilities(state, [0, 1]).reshape(2, 2))
