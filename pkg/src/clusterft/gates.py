"""Standard one- and two-qubit gate matrices.

Rotations are the symmetric ones, ``Z_a = exp(-i a Z / 2)``, so that
``Z_a X = X Z_{-a}`` holds with no phase.  Two-qubit matrices are written in
kron order: the first listed target is the most significant bit.
"""
from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def rx(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def hz(angle: float) -> np.ndarray:
    """The canonical single-qubit gate H·Z_angle (Z_angle acts first)."""
    return H @ rz(angle)


HH_CZ = np.kron(H, H) @ CZ


def controlled(u: np.ndarray) -> np.ndarray:
    """|0><0| ⊗ I + |1><1| ⊗ u, control as the most significant qubit."""
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


def pauli_xz(x: int, z: int) -> np.ndarray:
    """X^x Z^z (Z applied first)."""
    return np.linalg.matrix_power(X, x % 2) @ np.linalg.matrix_power(Z, z % 2)
