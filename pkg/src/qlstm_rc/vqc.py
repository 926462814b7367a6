"""Variational quantum circuit used inside every QLSTM gate.

Circuit on N qubits, all starting in |0>:

1. H on every qubit.
2. Encoding, once: RY(arctan x_i) then RZ(arctan x_i**2) on qubit i.
3. ``n_layers`` repetitions of a CNOT entangler (distance-1 ring followed by a
   distance-2 ring) and a column of general rotations ROT(alpha, beta, gamma).
4. Pauli-Z expectation on every qubit.

Gradients with respect to the rotation angles and the encoding angles use the
two-point parameter-shift rule. :class:`CompiledVqc` evaluates the unshifted
circuit and all shifted circuits together as one batch of statevectors; the
gate-by-gate functions with a ``_reference`` suffix exist for cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np

from . import statevector as sv
from .exceptions import ConfigurationError, UsageError

SHIFT = np.pi / 2


def entangler_pairs(n_qubits: int) -> List[Tuple[int, int]]:
    """(control, target) pairs of one entangler block, in application order."""
    pairs = []
    for distance in (1, 2):
        for i in range(n_qubits):
            target = (i + distance) % n_qubits
            if target != i:
                pairs.append((i, target))
    return pairs


@dataclass
class VqcParams:
    n_qubits: int
    n_layers: int
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ConfigurationError("n_qubits and n_layers must be positive")
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.shape != (self.n_layers, self.n_qubits, 3):
            raise ConfigurationError(
                f"angles must have shape {(self.n_layers, self.n_qubits, 3)}, got {self.angles.shape}"
            )
        if not np.all(np.isfinite(self.angles)):
            raise ConfigurationError("angles must be finite")

    @classmethod
    def zeros(cls, n_qubits: int, n_layers: int) -> "VqcParams":
        return cls(n_qubits, n_layers, np.zeros((n_layers, n_qubits, 3)))

    @classmethod
    def random(cls, n_qubits: int, n_layers: int, rng: np.random.Generator) -> "VqcParams":
        return cls(n_qubits, n_layers, rng.uniform(0.0, 2 * np.pi, size=(n_layers, n_qubits, 3)))

    @property
    def size(self) -> int:
        return self.angles.size


def _check_input(x, n_qubits: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n_qubits,):
        raise UsageError(f"input must have length {n_qubits}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise UsageError("input contains non-finite values")
    return x


def build_circuit(x, params: VqcParams) -> List[sv.Gate]:
    """Gate list for input ``x``; used by the reference path and the oracle."""
    n = params.n_qubits
    x = _check_input(x, n)
    gates = [sv.H(q) for q in range(n)]
    for q in range(n):
        gates.append(sv.RY(np.arctan(x[q]), q))
        gates.append(sv.RZ(np.arctan(x[q] ** 2), q))
    for layer in params.angles:
        gates.extend(sv.CNOT(c, t) for c, t in entangler_pairs(n))
        gates.extend(sv.ROT(*layer[q], q) for q in range(n))
    return gates


def encoded_qubit(u, v) -> np.ndarray:
    """RZ(v) RY(u) H|0> for arrays of angles; returns shape ``u.shape + (2,)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c, s = np.cos(u / 2), np.sin(u / 2)
    phase = np.exp(-0.5j * v)
    amp0 = (c - s) * sv._SQRT_HALF * phase
    amp1 = (s + c) * sv._SQRT_HALF * np.conj(phase)
    return np.stack([amp0, amp1], axis=-1)


def product_state(factors: np.ndarray) -> np.ndarray:
    """Batch of product states from per-qubit factors of shape (B, N, 2)."""
    batch, n, _ = factors.shape
    out = factors[:, n - 1]
    for q in range(n - 2, -1, -1):
        out = (out[:, :, None] * factors[:, q][:, None, :]).reshape(batch, -1)
    return out


PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _conjugate(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    return u @ p @ np.swapaxes(u, -1, -2).conj()


def _reduced(bra: np.ndarray, ket: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-qubit 2x2 contractions ``M[q, a, b] = sum conj(bra[..a..]) ket[..b..]``."""
    out = np.empty((n_qubits, 2, 2), dtype=complex)
    bra = bra.conj()
    for q in range(n_qubits):
        shape = (2 ** (n_qubits - q - 1), 2, 2**q)
        b = bra.reshape(shape).transpose(1, 0, 2).reshape(2, -1)
        k = ket.reshape(shape).transpose(1, 0, 2).reshape(2, -1)
        out[q] = b @ k.T
    return out


class CompiledVqc:
    """Precomputed layer operators for one fixed set of angles."""

    def __init__(self, params: VqcParams):
        self.params = params
        n = self.n_qubits = params.n_qubits
        self.n_layers = params.n_layers
        self._perm = sv.cnot_permutation(entangler_pairs(n), n)
        self._unperm = np.argsort(self._perm)
        self._lo = n // 2
        self._zs = sv.z_signs(n)
        self._rots = sv.rot_matrices(params.angles)
        self._columns = [self._blocks(r) for r in self._rots]

    # Tables below are only needed for gradients, so they are built on first use.

    @cached_property
    def _adjoint_columns(self):
        return [self._blocks(np.swapaxes(r, -1, -2).conj()) for r in self._rots]

    @cached_property
    def _generators(self) -> np.ndarray:
        """Generators of alpha, beta, gamma as seen from just after each ROT gate."""
        angles = self.params.angles
        rz_a = sv.rz_matrices(angles[..., 0])
        outer = rz_a @ sv.ry_matrices(angles[..., 1])
        gens = np.empty(angles.shape[:2] + (3, 2, 2), dtype=complex)
        gens[:, :, 0] = PAULI_Z
        gens[:, :, 1] = _conjugate(rz_a, PAULI_Y)
        gens[:, :, 2] = _conjugate(outer, PAULI_Z)
        return gens

    @cached_property
    def _shifts(self) -> np.ndarray:
        """``ROT^dagger ROT(shifted)`` for every angle and both shift signs."""
        angles = self.params.angles
        shifted = np.repeat(angles[:, :, None, :], 6, axis=2)
        for k in range(3):
            shifted[:, :, 2 * k, k] += SHIFT
            shifted[:, :, 2 * k + 1, k] -= SHIFT
        inv = np.swapaxes(self._rots, -1, -2).conj()[:, :, None]
        return inv @ sv.rot_matrices(shifted)

    def _blocks(self, mats):
        hi = np.eye(1, dtype=complex)
        for q in range(self.n_qubits - 1, self._lo - 1, -1):
            hi = np.kron(hi, mats[q])
        lo = np.eye(1, dtype=complex)
        for q in range(self._lo - 1, -1, -1):
            lo = np.kron(lo, mats[q])
        return hi, lo.T.copy()

    def _apply_column(self, states: np.ndarray, blocks) -> np.ndarray:
        hi, lo_t = blocks
        batch = states.shape[0]
        n_hi, n_lo = 2 ** (self.n_qubits - self._lo), 2**self._lo
        # two plain GEMMs; stacked matmul on small blocks is much slower
        out = states.reshape(batch * n_hi, n_lo) @ lo_t
        out = hi @ out.reshape(batch, n_hi, n_lo).transpose(1, 0, 2).reshape(n_hi, -1)
        return out.reshape(n_hi, batch, n_lo).transpose(1, 0, 2).reshape(batch, -1)

    def _encode(self, x: np.ndarray) -> np.ndarray:
        return product_state(encoded_qubit(np.arctan(x), np.arctan(x**2))[None])

    def evaluate(
        self, x, grad_input: bool = False, grad_params: bool = False
    ) -> Tuple[np.ndarray, Optional[np.ndarray], Optional[np.ndarray]]:
        """Expectations plus the requested shift-rule Jacobians.

        Returns ``(z, jac_input, jac_params)`` with shapes ``(N,)``, ``(N, N)``
        indexed ``[i, m] = d z_m / d x_i``, and ``(L, N, 3, N)``.
        """
        n = self.n_qubits
        x = _check_input(x, n)
        u, v = np.arctan(x), np.arctan(x**2)
        factors = encoded_qubit(u, v)[None]
        if grad_input:
            offsets = np.array([[SHIFT, 0.0], [-SHIFT, 0.0], [0.0, SHIFT], [0.0, -SHIFT]])
            moved = encoded_qubit(u[:, None] + offsets[:, 0], v[:, None] + offsets[:, 1])
            shifted = np.repeat(factors, 4 * n, axis=0).reshape(n, 4, n, 2)
            shifted[np.arange(n), :, np.arange(n)] = moved
            factors = np.concatenate([factors, shifted.reshape(4 * n, n, 2)])
        states = product_state(factors)
        n_base = states.shape[0]
        for l in range(self.n_layers):
            states = states[:, self._perm]
            if grad_params:
                base = states[0]
                spawned = [sv.apply_single(base, self._shifts[l, q], q, n) for q in range(n)]
                states = np.concatenate([states] + spawned)
            states = self._apply_column(states, self._columns[l])
        z = (states.real**2 + states.imag**2) @ self._zs
        jac_input = jac_params = None
        if grad_input:
            pairs = z[1:n_base].reshape(n, 2, 2, n)
            d = 0.5 * (pairs[:, :, 0] - pairs[:, :, 1])  # (N, [ry, rz], N)
            chain_ry = 1.0 / (1.0 + x**2)
            chain_rz = 2.0 * x / (1.0 + x**4)
            jac_input = d[:, 0] * chain_ry[:, None] + d[:, 1] * chain_rz[:, None]
        if grad_params:
            per_layer = z[n_base:].reshape(self.n_layers, n, 3, 2, n)
            jac_params = 0.5 * (per_layer[:, :, :, 0] - per_layer[:, :, :, 1])
        return z[0], jac_input, jac_params

    def forward(self, x) -> np.ndarray:
        return self.evaluate(x)[0]

    def vjp(self, x, out_grad, grad_params: bool = True):
        """Vector-Jacobian product ``out_grad @ J`` by one adjoint sweep.

        For a gate exp(-i t P / 2) the shifted states are (a -/+ i b)/sqrt(2)
        with b the circuit applied to P|phi>, so half the shift difference of
        <O> is Im<lambda|P|phi> where lambda is O|out> pulled back to the gate.
        This matches :meth:`evaluate` term by term at a fraction of the cost.
        Returns ``(z, input_grad, angle_grad or None)``.
        """
        n = self.n_qubits
        x = _check_input(x, n)
        out_grad = np.asarray(out_grad, dtype=float)
        if out_grad.shape != (n,):
            raise UsageError(f"out_grad must have length {n}")
        u, v = np.arctan(x), np.arctan(x**2)
        states = [product_state(encoded_qubit(u, v)[None])]
        for l in range(self.n_layers):
            states.append(self._apply_column(states[-1][:, self._perm], self._columns[l]))
        phi = states[-1]
        z = (phi.real**2 + phi.imag**2) @ self._zs
        lam = phi * (self._zs @ out_grad)[None]
        angle_grad = np.empty((self.n_layers, n, 3)) if grad_params else None
        for l in range(self.n_layers - 1, -1, -1):
            if grad_params:
                m = _reduced(lam[0], phi[0], n)
                angle_grad[l] = np.einsum("qkab,qab->qk", self._generators[l], m).imag
            lam = self._apply_column(lam, self._adjoint_columns[l])[:, self._unperm]
            phi = states[l]
        m = _reduced(lam[0], phi[0], n)
        # RZ(v) Y RZ(v)^+ has off-diagonals -i e^{-iv} and i e^{iv}
        d_rz = (m[:, 0, 0] - m[:, 1, 1]).imag
        d_ry = (-1j * np.exp(-1j * v) * m[:, 0, 1] + 1j * np.exp(1j * v) * m[:, 1, 0]).imag
        input_grad = d_ry / (1.0 + x**2) + d_rz * 2.0 * x / (1.0 + x**4)
        return z[0], input_grad, angle_grad


def vqc_forward(x, params: VqcParams) -> np.ndarray:
    """Pauli-Z expectation vector of the circuit for input ``x``."""
    return CompiledVqc(params).forward(x)


def vqc_grad_params(x, params: VqcParams) -> np.ndarray:
    """Array ``[l, q, k, m] = d<Z_m>/d angles[l, q, k]`` by parameter shift."""
    return CompiledVqc(params).evaluate(x, grad_params=True)[2]


def vqc_grad_input(x, params: VqcParams) -> np.ndarray:
    """Array ``[i, m] = d<Z_m>/d x_i`` by parameter shift on the encoding angles."""
    return CompiledVqc(params).evaluate(x, grad_input=True)[1]


def vqc_forward_reference(x, params: VqcParams) -> np.ndarray:
    state = sv.run_circuit(build_circuit(x, params), params.n_qubits)
    return sv.expect_z_all(state)


def vqc_grad_params_reference(x, params: VqcParams) -> np.ndarray:
    """Shift rule applied angle by angle on the gate-level simulator."""
    grad = np.empty(params.angles.shape + (params.n_qubits,))
    for idx in np.ndindex(params.angles.shape):
        plus = params.angles.copy()
        plus[idx] += SHIFT
        minus = params.angles.copy()
        minus[idx] -= SHIFT
        grad[idx] = 0.5 * (
            vqc_forward_reference(x, VqcParams(params.n_qubits, params.n_layers, plus))
            - vqc_forward_reference(x, VqcParams(params.n_qubits, params.n_layers, minus))
        )
    return grad
