"""Quantum LSTM cell built from five VQCs.

With ``v = concat(h_prev, x)``::

    f = sigmoid(VQC_0(v))    i = sigmoid(VQC_1(v))
    g = tanh(VQC_2(v))       o = sigmoid(VQC_3(v))
    c = f * c_prev + i * g
    h = VQC_4(o * tanh(c))[:hidden_dim]

In reservoir mode the VQC angles are frozen; gradients still flow through the
circuits to the inputs so the pre-network upstream can be trained.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ConfigurationError, UsageError
from .vqc import CompiledVqc, VqcParams

N_VQCS = 5
FORGET, INPUT, CANDIDATE, OUTPUT, HIDDEN = range(N_VQCS)
MODES = ("trainable", "reservoir")
GRAD_METHODS = ("adjoint", "shift")


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class QlstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int = 4, cell_dim: int = 8) -> "QlstmState":
        return cls(np.zeros(hidden_dim), np.zeros(cell_dim))

    def copy(self) -> "QlstmState":
        return QlstmState(self.h.copy(), self.c.copy())


class QlstmCell:
    """Five-VQC recurrent cell with ``input_dim + hidden_dim`` qubits per VQC.

    Parameters
    ----------
    n_layers : int
        Variational layers per VQC.
    mode : {"trainable", "reservoir"}
        Reservoir cells never produce or accept angle gradients.
    input_dim, hidden_dim : int
        Both 4 in the reference model, giving 8-qubit circuits.
    grad_method : {"adjoint", "shift"}
        How the backward pass obtains circuit derivatives. Both are exact;
        ``"shift"`` evaluates every shifted circuit explicitly.
    """

    def __init__(
        self,
        n_layers: int = 1,
        mode: str = "reservoir",
        input_dim: int = 4,
        hidden_dim: int = 4,
        vqcs: Optional[Sequence[VqcParams]] = None,
        rng: Optional[np.random.Generator] = None,
        grad_method: str = "adjoint",
    ):
        if mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
        if grad_method not in GRAD_METHODS:
            raise ConfigurationError(f"grad_method must be one of {GRAD_METHODS}")
        self.n_layers = n_layers
        self.mode = mode
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.n_qubits = self.cell_dim = input_dim + hidden_dim
        self.grad_method = grad_method
        if vqcs is None:
            rng = np.random.default_rng() if rng is None else rng
            vqcs = [VqcParams.random(self.n_qubits, n_layers, rng) for _ in range(N_VQCS)]
        if len(vqcs) != N_VQCS:
            raise ConfigurationError(f"a QLSTM cell needs {N_VQCS} VQCs")
        for p in vqcs:
            if (p.n_qubits, p.n_layers) != (self.n_qubits, n_layers):
                raise ConfigurationError("VQC shape does not match the cell")
        self.vqcs: List[VqcParams] = list(vqcs)
        self._compile()

    def _compile(self) -> None:
        self._circuits = [CompiledVqc(p) for p in self.vqcs]

    @property
    def n_angles(self) -> int:
        return N_VQCS * self.n_qubits * 3 * self.n_layers

    @property
    def n_trainable(self) -> int:
        return self.n_angles if self.mode == "trainable" else 0

    def flat(self) -> np.ndarray:
        """Angles ordered (vqc, layer, qubit, [alpha, beta, gamma])."""
        return np.concatenate([p.angles.ravel() for p in self.vqcs])

    def load_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_angles,):
            raise UsageError(f"expected {self.n_angles} angles, got shape {vec.shape}")
        blocks = vec.reshape(N_VQCS, self.n_layers, self.n_qubits, 3)
        for k, b in enumerate(blocks):
            if not np.array_equal(b, self.vqcs[k].angles):
                self.vqcs[k] = VqcParams(self.n_qubits, self.n_layers, b.copy())
                self._circuits[k] = CompiledVqc(self.vqcs[k])

    def _check_state(self, state: QlstmState) -> None:
        if state.h.shape != (self.hidden_dim,) or state.c.shape != (self.cell_dim,):
            raise UsageError("recurrent state has the wrong dimensions")

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.input_dim,):
            raise UsageError(f"x_t must have length {self.input_dim}, got shape {x.shape}")
        return x

    def _forward(self, x, state: QlstmState):
        v = np.concatenate([state.h, x])
        f = sigmoid(self._circuits[FORGET].forward(v))
        i = sigmoid(self._circuits[INPUT].forward(v))
        g = np.tanh(self._circuits[CANDIDATE].forward(v))
        o = sigmoid(self._circuits[OUTPUT].forward(v))
        c = f * state.c + i * g
        tc = np.tanh(c)
        u = o * tc
        h = self._circuits[HIDDEN].forward(u)[: self.hidden_dim]
        return h, c, (v, f, i, g, o, state.c, tc, u)

    def step(self, x, state: QlstmState):
        """One recurrence step; returns ``(h_t, new_state)``."""
        x = self._check_x(x)
        self._check_state(state)
        h, c, _ = self._forward(x, state)
        return h, QlstmState(h, c)

    def run(self, inputs, initial_state: QlstmState):
        """Unrolled forward; returns hidden outputs (T, hidden_dim) and the final state."""
        state = initial_state
        hs = []
        for x in inputs:
            h, state = self.step(x, state)
            hs.append(h)
        return np.array(hs).reshape(-1, self.hidden_dim), state

    def _vjp(self, k: int, x, out_grad, want_params: bool):
        circuit = self._circuits[k]
        if self.grad_method == "adjoint":
            _, gx, ga = circuit.vjp(x, out_grad, grad_params=want_params)
            return gx, ga
        _, jx, ja = circuit.evaluate(x, grad_input=True, grad_params=want_params)
        return jx @ out_grad, (ja @ out_grad if want_params else None)

    def backward(self, inputs, initial_state: QlstmState, output_grads):
        """Truncated BPTT over one segment.

        ``output_grads[t]`` is dLoss/dh_t. Returns ``(input_grads, param_grads)``
        where ``param_grads`` has shape (5, n_layers, n_qubits, 3), or is
        ``None`` for a reservoir cell. Gradients reaching the initial state are
        dropped.
        """
        inputs = [self._check_x(x) for x in inputs]
        output_grads = np.asarray(output_grads, dtype=float)
        if output_grads.shape != (len(inputs), self.hidden_dim):
            raise UsageError("output_grads must be aligned with inputs")
        self._check_state(initial_state)
        want_params = self.mode == "trainable"

        caches = []
        state = initial_state
        for x in inputs:
            h, c, cache = self._forward(x, state)
            caches.append(cache)
            state = QlstmState(h, c)

        input_grads = np.zeros((len(inputs), self.input_dim))
        param_grads = (
            np.zeros((N_VQCS, self.n_layers, self.n_qubits, 3)) if want_params else None
        )
        dh_next = np.zeros(self.hidden_dim)
        dc_next = np.zeros(self.cell_dim)
        for t in range(len(inputs) - 1, -1, -1):
            v, f, i, g, o, c_prev, tc, u = caches[t]
            dz = np.zeros(self.n_qubits)
            dz[: self.hidden_dim] = output_grads[t] + dh_next
            du, ga = self._vjp(HIDDEN, u, dz, want_params)
            if want_params:
                param_grads[HIDDEN] += ga
            do = du * tc
            dc = dc_next + du * o * (1.0 - tc**2)
            pre_grads = {
                FORGET: dc * c_prev * f * (1.0 - f),
                INPUT: dc * g * i * (1.0 - i),
                CANDIDATE: dc * i * (1.0 - g**2),
                OUTPUT: do * o * (1.0 - o),
            }
            dv = np.zeros(self.n_qubits)
            for k, grad in pre_grads.items():
                gv, ga = self._vjp(k, v, grad, want_params)
                dv += gv
                if want_params:
                    param_grads[k] += ga
            dc_next = dc * f
            dh_next = dv[: self.hidden_dim]
            input_grads[t] = dv[self.hidden_dim :]
        return input_grads, param_grads


def qlstm_step(cell: QlstmCell, x_t, state: QlstmState):
    return cell.step(x_t, state)


def qlstm_backward(cell: QlstmCell, inputs, initial_state: QlstmState, output_grads):
    return cell.backward(inputs, initial_state, output_grads)
