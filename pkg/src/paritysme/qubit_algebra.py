"""Dense 8x8 operator kernel for three qubits.

Basis ordering: label ``ijk`` sits at index ``4*i + 2*j + k``; qubit 1 is the
most significant bit. ``sigma_z`` has eigenvalue +1 on ``|1>`` and -1 on
``|0>``.
"""

from __future__ import annotations

import itertools

import numpy as np

DIM = 8

LABELS: tuple[str, ...] = tuple("".join(b) for b in itertools.product("01", repeat=3))

_SZ = np.diag([-1.0, 1.0]).astype(complex)
_SM = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
_ID = np.eye(2, dtype=complex)


def label_index(label: str) -> int:
    if len(label) != 3 or set(label) - {"0", "1"}:
        raise ValueError(f"invalid basis label {label!r}")
    return int(label, 2)


def index_label(index: int) -> str:
    if not 0 <= index < DIM:
        raise ValueError(f"basis index {index} out of range")
    return LABELS[index]


def bits(index: int) -> tuple[int, int, int]:
    return (index >> 2) & 1, (index >> 1) & 1, index & 1


def parity(label: str | int) -> int:
    """Return +1 for an even number of ones, -1 for odd."""
    idx = label_index(label) if isinstance(label, str) else label_index(index_label(label))
    return 1 - 2 * (sum(bits(idx)) % 2)


PARITIES = np.array([parity(i) for i in range(DIM)])
EVEN = tuple(i for i in range(DIM) if PARITIES[i] == 1)
ODD = tuple(i for i in range(DIM) if PARITIES[i] == -1)

# z_q(mu) for qubit q = 1..3 (rows) and basis index mu (columns)
Z_EIGS = np.array([[2 * bits(i)[q] - 1 for i in range(DIM)] for q in range(3)], dtype=float)
EXCITED = (Z_EIGS + 1) / 2


def embed_pauli(kind: str, qubit: int) -> np.ndarray:
    """Single-qubit ``sigma_z`` or ``sigma_-`` on ``qubit`` (1..3) in the 8-dim space."""
    if qubit not in (1, 2, 3):
        raise ValueError(f"qubit index must be 1, 2 or 3, got {qubit!r}")
    if kind == "z":
        op = _SZ
    elif kind == "minus":
        op = _SM
    else:
        raise ValueError(f"unknown Pauli kind {kind!r}")
    factors = [_ID, _ID, _ID]
    factors[qubit - 1] = op
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


def basis_projector(label: str | int) -> np.ndarray:
    idx = label_index(label) if isinstance(label, str) else label
    p = np.zeros((DIM, DIM), dtype=complex)
    p[idx, idx] = 1.0
    return p


def parity_projectors() -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the even and odd parity subspaces."""
    plus = np.diag((PARITIES == 1).astype(complex))
    minus = np.diag((PARITIES == -1).astype(complex))
    return plus, minus


def dissipator(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad increment ``c rho c^+ - (c^+ c rho + rho c^+ c)/2``."""
    cd = c.conj().T
    cdc = cd @ c
    return c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)


def meas_superop(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Homodyne back-action ``c rho + rho c^+ - <c + c^+> rho``."""
    cd = c.conj().T
    expect = np.trace((c + cd) @ rho).real
    return c @ rho + rho @ cd - expect * rho


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)


def overlap_fidelity(target: np.ndarray, rho: np.ndarray) -> float:
    """``sqrt(<psi|rho|psi>)``, clipped into [0, 1] against rounding."""
    val = np.vdot(target, rho @ target).real
    return float(np.sqrt(min(max(val, 0.0), 1.0)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    eig = np.linalg.eigvalsh(0.5 * ((a - b) + (a - b).conj().T))
    return float(0.5 * np.abs(eig).sum())


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(op - op.conj().T)) <= atol)


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def normalize_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (DIM,):
        raise ValueError(f"state must have {DIM} amplitudes, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero state vector")
    return psi / norm


def basis_state(label: str | int) -> np.ndarray:
    idx = label_index(label) if isinstance(label, str) else label
    psi = np.zeros(DIM, dtype=complex)
    psi[idx] = 1.0
    return psi


def psi_pre() -> np.ndarray:
    """Uniform superposition of all eight basis states."""
    return np.full(DIM, 1 / np.sqrt(DIM), dtype=complex)


def psi_plus() -> np.ndarray:
    return np.where(PARITIES == 1, 0.5, 0.0).astype(complex)


def psi_minus() -> np.ndarray:
    return np.where(PARITIES == -1, 0.5, 0.0).astype(complex)


def named_state(name: str) -> np.ndarray:
    """Resolve ``psi_pre``, ``psi_plus``, ``psi_minus`` or a basis label like ``"011"``."""
    if name == "psi_pre":
        return psi_pre()
    if name == "psi_plus":
        return psi_plus()
    if name == "psi_minus":
        return psi_minus()
    return basis_state(name)
