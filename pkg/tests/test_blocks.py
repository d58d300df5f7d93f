import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clusterft import gates
from clusterft.blocks import (
    BlockCircuit,
    BlockGate,
    reordering_identities,
    identity_report,
    qb,
    qb_identity,
    qc,
    qc_identity,
    qeu,
    verify_identity,
)
from clusterft.linalg import InvalidInput, is_unitary


@given(st.floats(-np.pi, np.pi))
@settings(max_examples=40, deadline=None)
def test_qb_realises_rotation(alpha):
    assert qb_identity(alpha).residual < 1e-9


def test_rotation_first_order_does_not():
    assert qb_identity(0.8, order="rotation_first").residual > 0.5


def test_qc_realises_bridge():
    check = qc_identity()
    assert check.residual < 1e-9
    assert is_unitary(check.witness_isometry.conj().T @ check.witness_isometry)


def test_noisy_counts():
    assert qb(0.3).noisy_count == 4
    assert qc().noisy_count == 3
    assert qeu().noisy_count == 0


def test_block_unitaries_are_unitary():
    for block in (qb(1.1), qc(), qeu()):
        assert is_unitary(block.unitary())


def test_wrong_ideal_is_detected():
    check = verify_identity(qb(0.5), gates.hz(0.9), {"M": gates.PLUS})
    assert not check.holds


def test_reordering_identities_as_expected():
    rows = reordering_identities()
    assert all(r["pass"] for r in rows)
    assert [r["holds"] for r in rows].count(False) == 1


def test_identity_report_all_pass():
    rows = identity_report(np.linspace(-np.pi, np.pi, 5))
    assert len(rows) == 5 + 1 + len(reordering_identities())
    assert all(r["pass"] for r in rows)


def test_block_validation():
    with pytest.raises(InvalidInput):
        BlockCircuit(("A", "A"), ())
    with pytest.raises(InvalidInput):
        BlockCircuit(("A",), (BlockGate("h", gates.H, ("B",)),))
    with pytest.raises(InvalidInput):
        BlockCircuit(("A",), (BlockGate("cz", gates.CZ, ("A",)),))
    with pytest.raises(InvalidInput):
        verify_identity(qb(0.1), gates.hz(0.1), {"Q": gates.PLUS})
    with pytest.raises(InvalidInput):
        verify_identity(qb(0.1), gates.CZ, {"M": gates.PLUS})
