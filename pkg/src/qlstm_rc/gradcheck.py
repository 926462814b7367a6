"""Finite-difference and oracle checks runnable outside the test suite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import statevector as sv
from .model import DressedModel
from .qlstm import QlstmCell, QlstmState
from .vqc import CompiledVqc, VqcParams, vqc_forward_reference

BLOCKS = (
    "oracle_unitary",
    "vqc_params",
    "vqc_input",
    "vqc_adjoint",
    "qlstm_bptt",
    "model_trainable",
    "model_reservoir",
)
TOLERANCES = {
    "oracle_unitary": 1e-10,
    "vqc_params": 1e-5,
    "vqc_input": 1e-4,
    "vqc_adjoint": 1e-10,
    "qlstm_bptt": 1e-4,
    "model_trainable": 1e-4,
    "model_reservoir": 1e-4,
}


# Central differences at eps=1e-5 carry 1e-11..1e-10 of roundoff. Entries below
# this floor are judged on absolute error so that noise on exact zeros does not
# read as a relative error. Used for VQC parameters and the end-to-end check.
FD_FLOOR = 1e-5


def relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def central_difference(f: Callable[[np.ndarray], np.ndarray], x, eps: float = 1e-5):
    """Jacobian of ``f`` at ``x``; output index runs last."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        step = np.zeros_like(x)
        step.flat[j] = eps
        cols.append((np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2 * eps))
    return np.array(cols).reshape(x.shape + np.shape(cols[0]))


def random_circuit(rng: np.random.Generator, n_qubits: int, length: int) -> List[sv.Gate]:
    gates = []
    for _ in range(length):
        kind = rng.choice(sv.GATE_KINDS if n_qubits > 1 else sv.GATE_KINDS[:4])
        q = int(rng.integers(n_qubits))
        if kind == "CNOT":
            t = int(rng.choice([k for k in range(n_qubits) if k != q]))
            gates.append(sv.CNOT(q, t))
        else:
            n_angles = {"H": 0, "RY": 1, "RZ": 1, "ROT": 3}[kind]
            gates.append(sv.Gate(kind, q, tuple(rng.uniform(-np.pi, np.pi, n_angles))))
    return gates


@dataclass
class CheckResult:
    block: str
    max_error: float
    tolerance: float
    cases: int

    @property
    def passed(self) -> bool:
        return bool(self.max_error < self.tolerance)


def _corrupt(block, name, arr):
    if block == name:
        arr = np.array(arr, dtype=float)
        arr.flat[0] += 1.0
    return arr


def check_oracle(rng, cases: int) -> float:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 5))
        gates = random_circuit(rng, n, int(rng.integers(1, 30)))
        direct = sv.run_circuit(gates, n).amplitudes
        worst = max(worst, float(np.max(np.abs(direct - sv.oracle_unitary(gates, n)[:, 0]))))
    return worst


def run_gradcheck(seed: int = 0, cases: int = 3, corrupt: Optional[str] = None) -> List[CheckResult]:
    """Compare every analytic gradient path against central differences."""
    rng = np.random.default_rng(seed)
    results = []
    results.append(CheckResult("oracle_unitary", check_oracle(rng, 50 * cases),
                               TOLERANCES["oracle_unitary"], 50 * cases))

    errs = {"vqc_params": 0.0, "vqc_input": 0.0, "vqc_adjoint": 0.0}
    for _ in range(cases):
        n, layers = int(rng.integers(2, 6)), int(rng.integers(1, 3))
        params = VqcParams.random(n, layers, rng)
        x = rng.normal(size=n)
        z, jin, jpar = CompiledVqc(params).evaluate(x, grad_input=True, grad_params=True)
        fd_par = central_difference(
            lambda a: vqc_forward_reference(x, VqcParams(n, layers, a)), params.angles
        )
        fd_in = central_difference(lambda xx: vqc_forward_reference(xx, params), x)
        errs["vqc_params"] = max(errs["vqc_params"],
                                 relative_error(_corrupt(corrupt, "vqc_params", jpar), fd_par,
                                                floor=FD_FLOOR))
        errs["vqc_input"] = max(errs["vqc_input"],
                                relative_error(_corrupt(corrupt, "vqc_input", jin), fd_in))
        g = rng.normal(size=n)
        _, gx, ga = CompiledVqc(params).vjp(x, g)
        adj = np.concatenate([gx, ga.ravel()])
        ref = np.concatenate([jin @ g, (jpar @ g).ravel()])
        errs["vqc_adjoint"] = max(errs["vqc_adjoint"],
                                  relative_error(_corrupt(corrupt, "vqc_adjoint", adj), ref))
    for name, err in errs.items():
        results.append(CheckResult(name, err, TOLERANCES[name], cases))

    worst = 0.0
    for _ in range(cases):
        cell = QlstmCell(1, "trainable", rng=rng)
        T = int(rng.integers(1, 6))
        xs = rng.uniform(-1, 1, size=(T, 4))
        s0 = QlstmState(rng.uniform(-1, 1, 4), rng.normal(size=8))
        weights = rng.normal(size=(T, 4))
        gx, gp = cell.backward(xs, s0, weights)
        fd_x = central_difference(lambda a: np.sum(cell.run(a, s0)[0] * weights), xs)
        flat = cell.flat()

        def loss_params(a):
            cell.load_flat(a)
            return np.sum(cell.run(xs, s0)[0] * weights)

        fd_p = central_difference(loss_params, flat)
        cell.load_flat(flat)
        analytic = _corrupt(corrupt, "qlstm_bptt", np.concatenate([gx.ravel(), gp.ravel()]))
        worst = max(worst, relative_error(analytic, np.concatenate([fd_x.ravel(), fd_p])))
    results.append(CheckResult("qlstm_bptt", worst, TOLERANCES["qlstm_bptt"], cases))

    for mode in ("trainable", "reservoir"):
        name = f"model_{mode}"
        worst = 0.0
        for _ in range(cases):
            model = DressedModel(1, mode, seed=int(rng.integers(2**31)))
            worst = max(worst, model_gradient_error(model, rng, corrupt=corrupt == name))
        results.append(CheckResult(name, worst, TOLERANCES[name], cases))
    return results


def model_gradient_error(model: DressedModel, rng, steps: Optional[int] = None,
                         corrupt: bool = False) -> float:
    """Segment gradient vs central differences over every trainable parameter."""
    T = int(rng.integers(1, 6)) if steps is None else steps
    obs = [rng.integers(0, 9, size=model.obs_dim).astype(float) * 0.1 for _ in range(T)]
    s0 = QlstmState(rng.uniform(-1, 1, 4), rng.normal(size=8))
    lw = rng.normal(size=(T, model.actor.out_dim))
    vw = rng.normal(size=T)

    def loss(flat):
        model.set_flat(flat)
        state, total = s0, 0.0
        for t in range(T):
            out = model.step(obs[t], state)
            total += lw[t] @ out.logits + vw[t] * out.value
            state = out.state
        return total

    flat = model.get_flat()
    analytic = model.segment_backward(obs, s0, lw, vw)
    mask = model.trainable_mask()
    idx = np.flatnonzero(mask)
    numeric = np.empty(idx.size)
    for k, j in enumerate(idx):
        step = np.zeros_like(flat)
        step[j] = 1e-5
        numeric[k] = (loss(flat + step) - loss(flat - step)) / 2e-5
    model.set_flat(flat)
    if np.any(analytic[~mask] != 0.0):
        return np.inf
    got = analytic[idx]
    if corrupt:
        got = got.copy()
        got[0] += 1.0
    return relative_error(got, numeric, floor=FD_FLOOR)


def format_report(results: List[CheckResult]) -> str:
    lines = [f"{'block':<18}{'max rel err':>14}{'tolerance':>12}  status"]
    for r in results:
        lines.append(
            f"{r.block:<18}{r.max_error:>14.3e}{r.tolerance:>12.0e}  {'PASS' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)
