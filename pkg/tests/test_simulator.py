import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft import gates
from clusterft import simulator as sim
from clusterft.linalg import haar_unitary


def test_x_on_zero_flips():
    s = sim.apply(sim.StateVector.zeros(1), gates.X, [0])
    assert np.allclose(s.amplitudes, [0, 1])


def test_little_endian_and_kron_order():
    # CNOT with control 1, target 0: |q1 q0> = |10> -> |11>
    s = sim.apply(sim.StateVector.zeros(2), gates.X, [1])
    s = sim.apply(s, gates.CNOT, [1, 0])
    assert np.allclose(np.abs(s.amplitudes) ** 2, [0, 0, 0, 1])


def test_embed_matches_apply():
    u = haar_unitary(4, 3)
    psi = sim.StateVector(haar_unitary(8, 4)[:, 0])
    direct = sim.apply(psi, u, [2, 0])
    via = sim.embed(u, [2, 0], 3) @ psi.amplitudes
    assert np.allclose(direct.amplitudes, via)


@given(st.integers(1, 5), st.integers(0, 10_000), st.data())
@settings(max_examples=40, deadline=None)
def test_apply_preserves_norm(n, seed, data):
    k = data.draw(st.integers(1, min(n, 3)))
    targets = data.draw(st.permutations(range(n)))[:k]
    psi = sim.StateVector(haar_unitary(2**n, seed)[:, 0])
    out = sim.apply(psi, haar_unitary(2**k, seed + 1), targets)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)


def test_measure_plus_in_h_basis_is_deterministic():
    m, _, p = sim.measure(sim.StateVector.plus(1), 0, gates.H, seed=0)
    assert m == 0 and p == pytest.approx(1.0)


def test_forced_zero_probability_raises():
    with pytest.raises(sim.SimulationError):
        sim.measure(sim.StateVector.zeros(1), 0, forced=1)


@given(st.integers(1, 4), st.integers(0, 10_000), st.data())
@settings(max_examples=40, deadline=None)
def test_branch_probabilities_sum_to_one(n, seed, data):
    q = data.draw(st.integers(0, n - 1))
    psi = sim.StateVector(haar_unitary(2**n, seed)[:, 0])
    total = 0.0
    for m in (0, 1):
        try:
            _, post, p = sim.measure(psi, q, forced=m)
        except sim.SimulationError:
            continue
        total += p
        assert post.norm() == pytest.approx(1.0, abs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_discard_and_tensor_roundtrip():
    psi = sim.StateVector(haar_unitary(4, 1)[:, 0])
    grown = sim.tensor(psi, gates.KET1)
    assert grown.n_qubits == 3
    assert np.allclose(sim.discard(grown, 2, 1).amplitudes, psi.amplitudes)


def test_distribution_and_kolmogorov():
    d = sim.distribution(sim.StateVector.plus(2), [0, 1])
    assert d["00"] == pytest.approx(0.25)
    assert sim.kolmogorov(d, d) == 0.0
    e = sim.distribution(sim.StateVector.zeros(2), [0, 1])
    assert sim.kolmogorov(d, e) == pytest.approx(0.75)


def test_distribution_character_order():
    s = sim.apply(sim.StateVector.zeros(2), gates.X, [0])
    assert sim.distribution(s, [0, 1])["10"] == pytest.approx(1.0)


def test_amplitudes_kron_permutes():
    s = sim.apply(sim.StateVector.zeros(2), gates.X, [0])
    assert np.allclose(sim.amplitudes_kron(s, [0, 1]), [0, 0, 1, 0])
    with pytest.raises(sim.SimulationError):
        sim.amplitudes_kron(s, [0])


def test_qubit_limit():
    with pytest.raises(sim.SimulationError):
        sim.StateVector(np.zeros(2 ** (sim.MAX_QUBITS + 1)))


def test_bad_target():
    with pytest.raises(Exception):
        sim.apply(sim.StateVector.zeros(2), gates.X, [2])
