"""Unitarised feedforward blocks and circuit-identity checks.

A block acts on named single-qubit registers; matrices are in kron order
over ``registers`` (first register most significant).  Frame registers X, Z
hold the byproduct bits coherently, M is the freshly prepared cluster node.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from . import simulator as sim
from .linalg import InvalidInput, as_matrix, op_norm, polar_unitary

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class BlockGate:
    label: str
    matrix: np.ndarray
    targets: tuple
    noisy: bool = False


@dataclass(frozen=True)
class BlockCircuit:
    registers: tuple
    gates: tuple

    def __post_init__(self):
        regs = set(self.registers)
        if len(regs) != len(self.registers):
            raise InvalidInput("duplicate register name")
        for g in self.gates:
            missing = set(g.targets) - regs
            if missing:
                raise InvalidInput(f"gate {g.label} uses undeclared registers {sorted(missing)}")
            if g.matrix.shape != (2 ** len(g.targets),) * 2:
                raise InvalidInput(f"gate {g.label} has shape {g.matrix.shape} for {len(g.targets)} targets")

    @property
    def noisy_count(self) -> int:
        return sum(g.noisy for g in self.gates)

    def index(self, reg: str) -> int:
        return self.registers.index(reg)

    def unitary(self) -> np.ndarray:
        n = len(self.registers)
        u = np.eye(2**n, dtype=complex)
        for g in self.gates:
            u = embed_kron(g.matrix, [self.index(r) for r in g.targets], n) @ u
        return u

    def then(self, other: "BlockCircuit") -> "BlockCircuit":
        if other.registers != self.registers:
            raise InvalidInput("register mismatch")
        return BlockCircuit(self.registers, self.gates + other.gates)


def embed_kron(gate, positions, n: int) -> np.ndarray:
    """Gate on kron positions (0 = most significant) of an n-qubit space."""
    return sim.embed(gate, [n - 1 - p for p in positions], n)


def reorder_kron(u: np.ndarray, order, n: int) -> np.ndarray:
    """Re-express a kron-ordered operator with factor ``order[i]`` moved to position i."""
    t = np.asarray(u).reshape((2,) * (2 * n))
    return t.transpose(list(order) + [n + o for o in order]).reshape(2**n, 2**n)


def _g(label, matrix, *targets, noisy=False) -> BlockGate:
    return BlockGate(label, np.asarray(matrix, dtype=complex), tuple(targets), noisy)


def _cx(c, t):
    return _g(f"CNOT({c}->{t})", gates.CNOT, c, t)


def _cz(a, b, noisy=False):
    return _g(f"CZ({a},{b})", gates.CZ, a, b, noisy=noisy)


def qeu_gates(m="M", x="X", z="Z") -> list:
    """|m, x, z> -> |m, z + m, x>: swap the frame bits, then add m into x."""
    return [_g(f"SWAP({x},{z})", gates.SWAP, x, z), _cx(m, x)]


def qeu() -> BlockCircuit:
    return BlockCircuit(("M", "X", "Z"), tuple(qeu_gates()))


def _prepend(q, x, z) -> list:
    # realises the byproduct X^x Z^z on q: Z-control first
    return [_cz(z, q), _cx(x, q)]


def _append(q, x, z) -> list:
    # inverse byproduct (X^x Z^z)^dagger = Z^z X^x: X-control first
    return [_cx(x, q), _cz(z, q)]


def controlled_rotation(alpha: float) -> np.ndarray:
    """On (X, Q): HZ_alpha when x = 0, HZ_-alpha when x = 1."""
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = gates.hz(alpha)
    out[2:, 2:] = gates.hz(-alpha)
    return out


QB_ORDERS = ("cz_first", "rotation_first")


def qb(alpha: float, order: str = "cz_first") -> BlockCircuit:
    """Unitarised teleport step on (Q, M, X, Z).

    ``cz_first`` entangles Q with M before the measurement-basis rotation;
    this is the order for which Q's output is HZ_alpha of its input.
    ``rotation_first`` rotates before the CZ and is kept for comparison.
    Noisy-capable: M's preparation memory step, CZ(Q, M), the rotation and
    Q's memory step before measurement.
    """
    if order not in QB_ORDERS:
        raise InvalidInput(f"order must be one of {QB_ORDERS}")
    prep_mem = _g("mem(M)", gates.I2, "M", noisy=True)
    cz = _cz("Q", "M", noisy=True)
    rot = _g(f"C-HZ(±{alpha:g})", controlled_rotation(alpha), "X", "Q", noisy=True)
    meas_mem = _g("mem(Q)", gates.I2, "Q", noisy=True)
    core = [prep_mem, cz, rot] if order == "cz_first" else [prep_mem, rot, cz]
    seq = (
        _prepend("Q", "X", "Z")
        + core
        + [meas_mem, _g("SWAP(Q,M)", gates.SWAP, "Q", "M")]
        + qeu_gates("M", "X", "Z")
        + _append("Q", "X", "Z")
    )
    return BlockCircuit(("Q", "M", "X", "Z"), tuple(seq))


def qeu_prime_gates() -> list:
    """Two-level update: each level's z picks up the other level's x (from
    pushing the byproducts through the bridge CZ), then per-level updates."""
    return [_cx("X2", "Z1"), _cx("X1", "Z2")] + qeu_gates("M3", "X1", "Z1") + qeu_gates("M4", "X2", "Z2")


QC_REGISTERS = ("Q1", "M3", "X1", "Z1", "Q2", "M4", "X2", "Z2")


def qc() -> BlockCircuit:
    """Unitarised bridge step; noisy-capable gates are the two Hadamards
    and the bridge CZ between the level qubits."""
    seq = (
        _prepend("Q1", "X1", "Z1")
        + _prepend("Q2", "X2", "Z2")
        + [
            _cz("Q1", "Q2", noisy=True),
            _cz("Q1", "M3"),
            _cz("Q2", "M4"),
            _g("H(Q1)", gates.H, "Q1", noisy=True),
            _g("H(Q2)", gates.H, "Q2", noisy=True),
            _g("SWAP(Q1,M3)", gates.SWAP, "Q1", "M3"),
            _g("SWAP(Q2,M4)", gates.SWAP, "Q2", "M4"),
        ]
        + qeu_prime_gates()
        + _append("Q1", "X1", "Z1")
        + _append("Q2", "X2", "Z2")
    )
    return BlockCircuit(QC_REGISTERS, tuple(seq))


@dataclass(frozen=True)
class IdentityCheck:
    residual: float
    witness_isometry: np.ndarray

    @property
    def holds(self) -> bool:
        return self.residual < IDENTITY_TOL


def verify_identity(block: BlockCircuit, ideal, fixed_inputs: dict, data=None, unitary=None) -> IdentityCheck:
    """Residual of block|_S against ideal ⊗ W, S = pinned registers fixed.

    ``data`` lists the registers ``ideal`` acts on (default: registers whose
    name starts with Q).  W is the best isometry from the free registers
    into all non-data outputs, found by polar decomposition of the
    data-traced overlap.  ``unitary`` overrides the block's own matrix
    (used to check noisy realisations).
    """
    ideal = as_matrix(ideal, "ideal")
    data = tuple(data) if data is not None else tuple(r for r in block.registers if r.startswith("Q"))
    pinned = tuple(fixed_inputs)
    if set(data) & set(pinned):
        raise InvalidInput("a data register is also pinned")
    free = tuple(r for r in block.registers if r not in data and r not in pinned)
    d = 2 ** len(data)
    if ideal.shape != (d, d):
        raise InvalidInput(f"ideal has shape {ideal.shape}, data space has dim {d}")
    n = len(block.registers)
    u = block.unitary() if unitary is None else as_matrix(unitary)
    if u.shape != (2**n, 2**n):
        raise InvalidInput("unitary does not match the block's registers")
    u_ord = reorder_kron(u, [block.index(r) for r in data + free + pinned], n)
    pin = np.ones(1, dtype=complex)
    for r in pinned:
        pin = np.kron(pin, np.asarray(fixed_inputs[r], dtype=complex).reshape(-1))
    f = 2 ** len(free)
    j = np.kron(np.eye(d * f), pin.reshape(-1, 1))
    k = u_ord @ j
    fp = k.shape[0] // d
    b = np.kron(ideal.conj().T, np.eye(fp)) @ k
    w0 = np.einsum("iaib->ab", b.reshape(d, fp, d, f)) / d
    w = polar_unitary(w0)
    residual = op_norm(k - np.kron(ideal, w))
    return IdentityCheck(residual, w)


def qb_identity(alpha: float, order: str = "cz_first") -> IdentityCheck:
    return verify_identity(qb(alpha, order), gates.hz(alpha), {"M": gates.PLUS})


def qc_identity() -> IdentityCheck:
    return verify_identity(qc(), gates.HH_CZ, {"M3": gates.PLUS, "M4": gates.PLUS})


def _restricted_residual(lhs, rhs, pins: dict, n: int) -> float:
    """||(lhs - rhs) J|| with J pinning qubits (kron positions) to given kets."""
    basis = np.ones((1, 1), dtype=complex)
    for p in range(n):
        factor = np.asarray(pins[p], dtype=complex).reshape(2, 1) if p in pins else np.eye(2)
        basis = np.kron(basis, factor)
    return op_norm((lhs - rhs) @ basis)


def reordering_identities() -> list:
    """Four reordering/simplification identities plus one non-identity."""
    i2 = gates.I2
    cnot12_3 = np.kron(gates.CNOT, i2)
    cnot23_3 = np.kron(i2, gates.CNOT)
    cnot13_3 = embed_kron(gates.CNOT, [0, 2], 3)
    cz23_3 = np.kron(i2, gates.CZ)
    cz13_3 = embed_kron(gates.CZ, [0, 2], 3)
    items = [
        (
            "teleport element with |+> ancilla: SWAP (H⊗I) CZ = (H⊗H) CNOT12 (I⊗H)",
            gates.SWAP @ np.kron(gates.H, i2) @ gates.CZ,
            np.kron(gates.H, gates.H) @ gates.CNOT @ np.kron(i2, gates.H),
            {1: gates.PLUS},
            2,
            True,
        ),
        (
            "CNOT12 CNOT23 = CNOT23 CNOT13 CNOT12",
            cnot12_3 @ cnot23_3,
            cnot23_3 @ cnot13_3 @ cnot12_3,
            {},
            3,
            True,
        ),
        ("CZ (X⊗I) = (X⊗Z) CZ", gates.CZ @ np.kron(gates.X, i2), np.kron(gates.X, gates.Z) @ gates.CZ, {}, 2, True),
        ("CZ (I⊗X) = (Z⊗X) CZ", gates.CZ @ np.kron(i2, gates.X), np.kron(gates.Z, gates.X) @ gates.CZ, {}, 2, True),
        ("CNOT12 CZ23 = CZ23 CZ13 CNOT12", cnot12_3 @ cz23_3, cz23_3 @ cz13_3 @ cnot12_3, {}, 3, True),
        ("CNOT12 CZ12 = CZ12 CNOT12 (candidate)", gates.CNOT @ gates.CZ, gates.CZ @ gates.CNOT, {}, 2, False),
    ]
    report = []
    for name, lhs, rhs, pins, n, expected in items:
        res = _restricted_residual(lhs, rhs, pins, n)
        holds = res < IDENTITY_TOL
        report.append(
            {"identity": name, "residual": float(res), "holds": holds, "expected": expected, "pass": holds == expected}
        )
    return report


def identity_report(angles=None) -> list:
    """Block identities (qb over angles, qc) and the gate reordering identities."""
    angles = np.linspace(-np.pi, np.pi, 20) if angles is None else angles
    out = []
    for a in angles:
        r = qb_identity(float(a))
        out.append({"identity": f"QB({a:.6f}) ~ HZ", "residual": r.residual, "holds": r.holds, "expected": True, "pass": r.holds})
    r = qc_identity()
    out.append({"identity": "QC ~ (H⊗H)CZ", "residual": r.residual, "holds": r.holds, "expected": True, "pass": r.holds})
    return out + reordering_identities()
