import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft.linalg import SubspaceBasis, haar_unitary, is_unitary, op_norm, restrict
from clusterft.unitary_extension import (
    PreconditionError,
    block_decompose,
    contraction_gap,
    extend_first,
    extend_second,
    positive_block_gap,
    random_instance,
    sigma_min_blocks,
)

instances = st.tuples(st.integers(4, 16), st.floats(0.0, 1.0), st.integers(0, 2**31))


def _split(dim, frac):
    return max(1, min(dim, int(round(frac * dim)) or 1))


@given(instances)
@settings(max_examples=60, deadline=None)
def test_first_extension_contract(inst):
    dim, frac, seed = inst
    u, ut, v, s = random_instance(dim, _split(dim, frac), seed)
    cert = extend_first(u, ut, v, s)
    assert is_unitary(cert.extension)
    assert cert.restriction_residual < 1e-10
    assert cert.bound_lhs <= cert.bound_rhs + 1e-9


@given(instances)
@settings(max_examples=60, deadline=None)
def test_second_extension_contract(inst):
    dim, frac, seed = inst
    u, _, v, s = random_instance(dim, _split(dim, frac), seed)
    cert = extend_second(u, v, s)
    assert is_unitary(cert.extension)
    assert cert.restriction_residual < 1e-10
    assert cert.bound_lhs <= cert.bound_rhs + 1e-9


def test_first_extension_trivial_cases():
    u, _, v, s = random_instance(8, 3, 0)
    assert op_norm(extend_first(u, u, v, s).extension - v) < 1e-10
    full = SubspaceBasis(np.eye(8, dtype=complex))
    assert op_norm(extend_first(u, u, v, full).extension - v) < 1e-10


def test_first_extension_precondition():
    u, _, v, s = random_instance(8, 3, 1)
    with pytest.raises(PreconditionError):
        extend_first(u, haar_unitary(8, 9), v, s)


def test_first_extension_basis_independent():
    u, ut, v, s = random_instance(8, 3, 2)
    rotated = SubspaceBasis(s.basis @ haar_unitary(3, 5))
    a = extend_first(u, ut, v, s).extension
    b = extend_first(u, ut, v, rotated).extension
    assert op_norm(a - b) < 1e-10


def test_second_extension_trivial_cases():
    u, _, v, s = random_instance(8, 3, 3)
    same = extend_second(u, u, s)
    assert same.bound_lhs < 1e-10 and same.bound_rhs < 1e-10
    full = SubspaceBasis(np.eye(8, dtype=complex))
    assert op_norm(extend_second(u, v, full).extension - v) < 1e-10


def test_second_applied_to_first_hypothesis():
    for seed in range(50):
        u, ut, v, s = random_instance(8, 3, seed)
        if op_norm(restrict(ut, s) - restrict(v, s)) <= op_norm(u - v):
            cert = extend_second(ut, v, s)
            assert op_norm(cert.extension - ut) <= 2 * op_norm(u - v) + 1e-9


def test_block_decompose_reassembles():
    m = haar_unitary(7, 4)
    s = SubspaceBasis(haar_unitary(7, 5)[:, :3])
    a, b, c, d = block_decompose(m, s)
    frame = np.hstack([s.basis, s.complement])
    assert op_norm(np.block([[a, c], [b, d]]) - frame.conj().T @ m @ frame) < 1e-12
    ai, bi, ci, di = block_decompose(np.eye(7), s)
    assert op_norm(bi) < 1e-12 and op_norm(ci) < 1e-12
    assert op_norm(ai - np.eye(3)) < 1e-12 and op_norm(di - np.eye(4)) < 1e-12


@given(st.integers(2, 12), st.integers(0, 2**31), st.data())
@settings(max_examples=60, deadline=None)
def test_sigma_min_blocks_agree(dim, seed, data):
    k = data.draw(st.integers(1, dim - 1))
    s = SubspaceBasis(haar_unitary(dim, seed)[:, :k])
    a, d = sigma_min_blocks(haar_unitary(dim, seed + 1), s)
    assert a == pytest.approx(d, abs=1e-9)


@given(st.integers(1, 10), st.floats(1.0, 5.0), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_contraction_gap(dim, scale, seed):
    g = np.random.default_rng(seed).standard_normal((dim, dim)) + 1j * np.random.default_rng(seed + 1).standard_normal((dim, dim))
    m = g / (op_norm(g) * scale)
    lhs, rhs = contraction_gap(m)
    assert lhs >= rhs - 1e-9


@given(st.integers(2, 12), st.integers(0, 2**31), st.data())
@settings(max_examples=60, deadline=None)
def test_positive_block_gap(dim, seed, data):
    split = data.draw(st.integers(1, dim - 1))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    whole, parts = positive_block_gap(g @ g.conj().T, split)
    assert whole <= parts + 1e-9
