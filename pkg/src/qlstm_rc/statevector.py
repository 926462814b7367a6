"""Dense statevector simulation for small qubit registers.

Basis index ``b`` stores qubit 0 as its least-significant bit, so the
amplitude of ``|q_{n-1} ... q_1 q_0>`` lives at ``sum(q_k << k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, OracleSizeError, UsageError

MAX_QUBITS = 12
MAX_ORACLE_QUBITS = 4

GATE_KINDS = ("H", "RY", "RZ", "ROT", "CNOT")
_N_ANGLES = {"H": 0, "RY": 1, "RZ": 1, "ROT": 3, "CNOT": 0}

_SQRT_HALF = 1.0 / np.sqrt(2.0)
HADAMARD = np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0.0], [0.0, np.conj(e)]], dtype=complex)


def rot_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """General rotation RZ(alpha) @ RY(beta) @ RZ(gamma); RZ(gamma) acts first."""
    return rz_matrix(alpha) @ ry_matrix(beta) @ rz_matrix(gamma)


def rz_matrices(theta) -> np.ndarray:
    """Stacked RZ matrices, shape ``theta.shape + (2, 2)``."""
    e = np.exp(-0.5j * np.asarray(theta, dtype=float))
    out = np.zeros(e.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 1, 1] = e, np.conj(e)
    return out


def ry_matrices(theta) -> np.ndarray:
    """Stacked RY matrices, shape ``theta.shape + (2, 2)``."""
    half = 0.5 * np.asarray(theta, dtype=float)
    c, s = np.cos(half), np.sin(half)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(complex)


def rot_matrices(angles) -> np.ndarray:
    """Stacked ROT matrices for angles of shape ``(..., 3)``."""
    a = np.asarray(angles, dtype=float)
    return rz_matrices(a[..., 0]) @ ry_matrices(a[..., 1]) @ rz_matrices(a[..., 2])


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angles: tuple = ()
    control: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise UsageError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != _N_ANGLES[self.kind]:
            raise UsageError(
                f"{self.kind} takes {_N_ANGLES[self.kind]} angle(s), got {len(self.angles)}"
            )
        if (self.kind == "CNOT") != (self.control is not None):
            raise UsageError("a control qubit is required for CNOT and only for CNOT")
        if self.control is not None and self.control == self.target:
            raise UsageError("control and target must differ")

    def matrix(self) -> np.ndarray:
        """2x2 matrix of a single-qubit gate."""
        if self.kind == "H":
            return HADAMARD
        if self.kind == "RY":
            return ry_matrix(*self.angles)
        if self.kind == "RZ":
            return rz_matrix(*self.angles)
        if self.kind == "ROT":
            return rot_matrix(*self.angles)
        raise UsageError("CNOT has no single-qubit matrix")

    def qubits(self) -> tuple:
        return (self.target,) if self.control is None else (self.control, self.target)


def H(q: int) -> Gate:
    return Gate("H", q)


def RY(theta: float, q: int) -> Gate:
    return Gate("RY", q, (float(theta),))


def RZ(theta: float, q: int) -> Gate:
    return Gate("RZ", q, (float(theta),))


def ROT(alpha: float, beta: float, gamma: float, q: int) -> Gate:
    return Gate("ROT", q, (float(alpha), float(beta), float(gamma)))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", target, (), control)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise UsageError(
                f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def init_zero(n_qubits: int) -> StateVector:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(int(n_qubits), amps)


def apply_single(amps: np.ndarray, matrix: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a 2x2 matrix to ``qubit`` of a (possibly batched) amplitude array.

    ``amps`` has shape ``(..., 2**n_qubits)``. A stack of matrices with shape
    ``(..., 2, 2)`` broadcasting against the batch axes is also accepted.
    """
    lead = amps.shape[:-1]
    view = amps.reshape(lead + (2 ** (n_qubits - qubit - 1), 2, 2**qubit))
    if matrix.ndim == 2:
        out = np.einsum("ab,...ibj->...iaj", matrix, view)
    else:
        out = np.einsum("...ab,...ibj->...iaj", matrix, view)
        lead = out.shape[:-3]
    return out.reshape(lead + (2**n_qubits,))


def cnot_permutation(pairs: Sequence[tuple], n_qubits: int) -> np.ndarray:
    """Gather index ``g`` such that ``amps[..., g]`` applies the CNOTs in order."""
    idx = np.arange(2**n_qubits)
    image = idx.copy()
    for control, target in pairs:
        hit = (image >> control) & 1
        image = image ^ (hit << target)
    # image[b] is where basis state b ends up; gather needs its inverse
    gather = np.empty_like(image)
    gather[image] = idx
    return gather


def _check_gate(gate: Gate, n_qubits: int) -> None:
    for q in gate.qubits():
        if not 0 <= q < n_qubits:
            raise UsageError(f"qubit index {q} out of range for {n_qubits} qubits")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    n = state.n_qubits
    _check_gate(gate, n)
    if gate.kind == "CNOT":
        amps = state.amplitudes[cnot_permutation([(gate.control, gate.target)], n)]
    else:
        amps = apply_single(state.amplitudes, gate.matrix(), gate.target, n)
    return StateVector(n, amps)


def run_circuit(circuit: Sequence[Gate], n_qubits: int) -> StateVector:
    state = init_zero(n_qubits)
    for gate in circuit:
        state = apply_gate(state, gate)
    return state


def z_signs(n_qubits: int) -> np.ndarray:
    """Matrix of shape (2**n, n) whose entry [b, q] is the Z eigenvalue of qubit q in b."""
    b = np.arange(2**n_qubits)[:, None]
    return 1.0 - 2.0 * ((b >> np.arange(n_qubits)[None, :]) & 1)


def expect_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.n_qubits:
        raise UsageError(f"qubit index {qubit} out of range for {state.n_qubits} qubits")
    bit = (np.arange(2**state.n_qubits) >> qubit) & 1
    return float(np.dot(state.probabilities(), 1.0 - 2.0 * bit))


def expect_z_all(state: StateVector) -> np.ndarray:
    return state.probabilities() @ z_signs(state.n_qubits)


def _embed(gate: Gate, n_qubits: int) -> np.ndarray:
    if gate.kind == "CNOT":
        dim = 2**n_qubits
        perm = cnot_permutation([(gate.control, gate.target)], n_qubits)
        return np.eye(dim, dtype=complex)[perm]
    # np.kron(A, B) puts A on the more significant bits
    full = np.eye(1, dtype=complex)
    for q in reversed(range(n_qubits)):
        full = np.kron(full, gate.matrix() if q == gate.target else np.eye(2))
    return full


def oracle_unitary(circuit: Sequence[Gate], n_qubits: int) -> np.ndarray:
    """Full circuit unitary from explicit Kronecker products; test oracle only."""
    if n_qubits > MAX_ORACLE_QUBITS:
        raise OracleSizeError(f"oracle limited to {MAX_ORACLE_QUBITS} qubits, got {n_qubits}")
    if n_qubits < 1:
        raise ConfigurationError("n_qubits must be positive")
    unitary = np.eye(2**n_qubits, dtype=complex)
    for gate in circuit:
        _check_gate(gate, n_qubits)
        unitary = _embed(gate, n_qubits) @ unitary
    return unitary
