import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft import gates
from clusterft.linalg import (
    InvalidInput,
    SubspaceBasis,
    complete_basis,
    expm_hermitian,
    haar_unitary,
    is_unitary,
    kron,
    op_norm,
    polar_unitary,
    random_hermitian_unit,
    random_subspace,
    restrict,
    sigma_matrix,
    svd,
)

dims = st.integers(1, 12)
seeds = st.integers(0, 2**32 - 1)


def test_op_norm_examples():
    assert op_norm(np.eye(5)) == pytest.approx(1.0)
    assert op_norm(np.zeros((3, 3))) == 0.0
    assert op_norm(gates.X - gates.I2) == pytest.approx(2.0)


def test_non_finite_rejected():
    with pytest.raises(InvalidInput):
        op_norm(np.array([[np.nan, 0], [0, 1]]))


def test_svd_diagonal():
    _, s, _ = svd(np.diag([3.0, 1.0]))
    assert np.allclose(s, [3, 1])


@given(dims, dims, seeds)
@settings(max_examples=50, deadline=None)
def test_svd_reconstructs(r, c, seed):
    m = np.random.default_rng(seed).standard_normal((r, c)) + 1j * np.random.default_rng(seed + 1).standard_normal((r, c))
    left, s, right = svd(m)
    assert np.all(np.diff(s) <= 1e-12) and np.all(s >= 0)
    assert op_norm(left @ sigma_matrix(s, (r, c)) @ right - m) < 1e-10


@given(dims, seeds)
@settings(max_examples=50, deadline=None)
def test_haar_is_unitary_with_flat_spectrum(d, seed):
    u = haar_unitary(d, seed)
    assert is_unitary(u)
    assert np.allclose(svd(u)[1], 1.0)


def test_haar_is_seeded():
    assert np.array_equal(haar_unitary(4, 7), haar_unitary(4, 7))


@given(dims, seeds)
@settings(max_examples=50, deadline=None)
def test_random_hermitian_unit_norm(d, seed):
    h = random_hermitian_unit(d, seed)
    assert np.allclose(h, h.conj().T)
    assert op_norm(h) == pytest.approx(1.0, abs=1e-12)


def test_kron_of_paulis():
    assert np.allclose(kron(gates.X, gates.Z), np.kron(gates.X, gates.Z))


@given(st.integers(2, 10), seeds, st.data())
@settings(max_examples=40, deadline=None)
def test_subspace_complement_is_orthonormal(d, seed, data):
    k = data.draw(st.integers(1, d))
    s = random_subspace(d, k, seed)
    frame = np.hstack([s.basis, s.complement])
    assert op_norm(frame.conj().T @ frame - np.eye(d)) < 1e-12
    assert op_norm(s.projector @ s.projector - s.projector) < 1e-12


def test_complete_basis_full_rank_is_empty():
    assert complete_basis(np.eye(3, dtype=complex)).shape == (3, 0)


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(InvalidInput):
        SubspaceBasis(np.array([[1.0], [1.0]]))


def test_restrict_shape_and_mismatch():
    s = random_subspace(4, 2, 0)
    assert restrict(np.eye(4), s).shape == (4, 2)
    with pytest.raises(InvalidInput):
        restrict(np.eye(3), s)


@given(st.integers(1, 8), seeds)
@settings(max_examples=30, deadline=None)
def test_polar_unitary_of_unitary_is_itself(d, seed):
    u = haar_unitary(d, seed)
    assert op_norm(polar_unitary(u) - u) < 1e-10


def test_expm_hermitian_calibration():
    h = random_hermitian_unit(6, 1)
    eta = 0.3
    v = expm_hermitian(h, 2 * np.arcsin(eta / 2))
    assert op_norm(v - np.eye(6)) == pytest.approx(eta, abs=1e-12)
