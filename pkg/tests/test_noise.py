import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft import gates
from clusterft import simulator as sim
from clusterft.linalg import InvalidInput, is_unitary, op_norm
from clusterft.noise import (
    EnvRegistry,
    NoiseModel,
    NoiseSource,
    NoisyOp,
    locality_audit,
    mutual_information,
    noisy_measure,
    noisy_prep_plus,
    non_markovian_demo,
    perturb,
)


@given(st.floats(1e-4, 1.9), st.integers(0, 2**32 - 1), st.integers(0, 2))
@settings(max_examples=50, deadline=None)
def test_calibrated_distance(eta, seed, per_level):
    envs = EnvRegistry.for_levels([0, 1], per_level)
    model = NoiseModel(eta, per_level)
    v = perturb(gates.CZ, (0, 1), model, envs, seed)
    base = np.kron(gates.CZ, np.eye(2 ** (2 * per_level)))
    assert is_unitary(v)
    assert abs(op_norm(v - base) - eta) < 1e-9


def test_off_mode_is_ideal():
    envs = EnvRegistry.for_levels([0], 1)
    for model in (NoiseModel(0.3, 1, "off"), NoiseModel(0.0, 1)):
        assert np.allclose(perturb(gates.H, (0,), model, envs, 1), np.kron(gates.H, np.eye(2)))


def test_adversarial_generator_is_normalised():
    envs = EnvRegistry.for_levels([0], 1)
    model = NoiseModel(0.2, 1, "adversarial", (3.0 * np.kron(gates.Z, gates.Z),))
    v = perturb(gates.I2, (0,), model, envs)
    assert abs(op_norm(v - np.eye(4)) - 0.2) < 1e-12
    with pytest.raises(InvalidInput):
        perturb(gates.CZ, (0,), model, envs)


@pytest.mark.parametrize("kwargs", [
    dict(eta=-0.1), dict(eta=2.5), dict(mode="nope"), dict(env_qubits_per_level=-1), dict(mode="adversarial"),
])
def test_model_validation(kwargs):
    with pytest.raises(InvalidInput):
        NoiseModel(**kwargs)


def test_registry_rejects_shared_env():
    with pytest.raises(InvalidInput):
        EnvRegistry({0: ("e",), 1: ("e",)})
    with pytest.raises(InvalidInput):
        EnvRegistry.for_levels([0], 1).of([1])


def test_source_is_reproducible_and_logs():
    envs = EnvRegistry.for_levels([0, 1], 1)
    model = NoiseModel(0.1, 1)
    a, b = NoiseSource(model, envs, 5), NoiseSource(model, envs, 5)
    for src in (a, b):
        src.op("cz", gates.CZ, ("q0", "q1"), (1, 0))
        src.op("h", gates.H, ("q0",), (0,))
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a.log, b.log))
    assert a.log[0].levels == (0, 1)
    assert a.log[0].support == ("q0", "q1", ("env", 0, 0), ("env", 1, 0))
    c = NoiseSource(model, envs, 6)
    c.op("cz", gates.CZ, ("q0", "q1"), (0, 1))
    assert not np.allclose(c.log[0].matrix, a.log[0].matrix)


def test_locality_audit():
    envs = EnvRegistry.for_levels([0, 1], 1)
    levels = {"q0": 0, "q1": 1}
    good = NoisyOp("h", (0,), ("q0",), (("env", 0, 0),), np.eye(4))
    assert locality_audit([good], envs, levels).ok
    wrong_env = NoisyOp("h", (0,), ("q0",), (("env", 1, 0),), np.eye(4))
    wrong_qubit = NoisyOp("h", (0,), ("q1",), (("env", 0, 0),), np.eye(4))
    audit = locality_audit([good, wrong_env, wrong_qubit], envs, levels)
    assert not audit.ok
    assert [v[0] for v in audit.violations] == [1, 2]


def test_noisy_prep_and_measure():
    envs = EnvRegistry.for_levels([0], 1)
    model = NoiseModel(0.05, 1)
    ket, op = noisy_prep_plus(0, model, envs, 3)
    assert np.allclose(ket, gates.PLUS)
    state = sim.tensor(sim.StateVector.zeros(1), ket)  # qubit 0 env, qubit 1 node
    ideal = sim.measure(state, 1, gates.H, forced=0)[2]
    _, _, prob = noisy_measure(state, 1, [0], gates.H, op, forced=0)
    assert ideal == pytest.approx(1.0)
    assert 1 - prob <= 0.05**2 + 1e-12


def test_mutual_information():
    assert mutual_information(np.full((2, 2), 0.25)) == pytest.approx(0.0, abs=1e-15)
    assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(1.0)


def test_persistent_environment_correlates_outcomes():
    assert non_markovian_demo(0.5) > 0.05
    assert non_markovian_demo(0.5, reset_env=True) < 1e-10
