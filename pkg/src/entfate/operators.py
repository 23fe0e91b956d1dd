"""Shared qubit operators and distinguished states."""

from __future__ import annotations

import numpy as np

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SMINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
EYE2 = np.eye(2, dtype=complex)


def bell_vectors() -> list[np.ndarray]:
    """The four Bell vectors, Phi+ first."""
    s = 1.0 / np.sqrt(2.0)
    phi_p = s * np.array([1, 0, 0, 1], dtype=complex)
    phi_m = s * np.array([1, 0, 0, -1], dtype=complex)
    psi_p = s * np.array([0, 1, 1, 0], dtype=complex)
    psi_m = s * np.array([0, 1, -1, 0], dtype=complex)
    return [phi_p, phi_m, psi_p, psi_m]


def two_qubit_paulis(include_identity: bool = False) -> list[np.ndarray]:
    """Tensor products of single-qubit Paulis (identity pair optional)."""
    singles = [EYE2, SX, SY, SZ]
    out = []
    for i, a in enumerate(singles):
        for j, b in enumerate(singles):
            if not include_identity and i == 0 and j == 0:
                continue
            out.append(np.kron(a, b))
    return out


def single_qubit_probe_vectors() -> list[np.ndarray]:
    """|0>, |1>, |+>, |+i>: a tomographically spread set of pure states."""
    s = 1.0 / np.sqrt(2.0)
    return [
        np.array([1.0, 0.0], dtype=complex),
        np.array([0.0, 1.0], dtype=complex),
        s * np.array([1.0, 1.0], dtype=complex),
        s * np.array([1.0, 1.0j], dtype=complex),
    ]
