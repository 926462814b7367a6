"""Dressed actor-critic: pre-net -> QLSTM -> actor and critic heads."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .env import N_ACTIONS, OBS_DIM
from .exceptions import ConfigurationError, UsageError
from .nets import AffineLayer, affine_backward, affine_forward
from .qlstm import QlstmCell, QlstmState

CHECKPOINT_VERSION = 1


@dataclass
class StepOutput:
    logits: np.ndarray
    value: float
    state: QlstmState


class DressedModel:
    """Single trunk shared by the policy and value heads.

    Flat parameter layout: pre-net (weights row-major, then bias), QLSTM angles
    ordered (vqc, layer, qubit, angle), actor head, critic head.
    """

    def __init__(
        self,
        n_layers: int = 1,
        mode: str = "reservoir",
        obs_dim: int = OBS_DIM,
        n_actions: int = N_ACTIONS,
        latent_dim: int = 4,
        seed: Optional[int] = None,
        grad_method: str = "adjoint",
    ):
        rng = np.random.default_rng(seed)
        self.pre = AffineLayer.init(obs_dim, latent_dim, rng)
        self.cell = QlstmCell(
            n_layers, mode, input_dim=latent_dim, hidden_dim=latent_dim, rng=rng,
            grad_method=grad_method,
        )
        self.actor = AffineLayer.init(latent_dim, n_actions, rng)
        self.critic = AffineLayer.init(latent_dim, 1, rng)

    @property
    def mode(self) -> str:
        return self.cell.mode

    @property
    def n_layers(self) -> int:
        return self.cell.n_layers

    @property
    def obs_dim(self) -> int:
        return self.pre.in_dim

    def _sizes(self):
        return [self.pre.n_params, self.cell.n_angles, self.actor.n_params, self.critic.n_params]

    @property
    def n_params(self) -> int:
        return sum(self._sizes())

    @property
    def n_trainable(self) -> int:
        return self.pre.n_params + self.cell.n_trainable + self.actor.n_params + self.critic.n_params

    def qlstm_slice(self) -> slice:
        start = self.pre.n_params
        return slice(start, start + self.cell.n_angles)

    def trainable_mask(self) -> np.ndarray:
        mask = np.ones(self.n_params, dtype=bool)
        if self.mode == "reservoir":
            mask[self.qlstm_slice()] = False
        return mask

    def get_flat(self) -> np.ndarray:
        return np.concatenate(
            [self.pre.flat(), self.cell.flat(), self.actor.flat(), self.critic.flat()]
        )

    def set_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise UsageError(f"expected {self.n_params} parameters, got shape {vec.shape}")
        parts = np.split(vec, np.cumsum(self._sizes())[:-1])
        self.pre.load_flat(parts[0])
        self.cell.load_flat(parts[1])
        self.actor.load_flat(parts[2])
        self.critic.load_flat(parts[3])

    def initial_state(self) -> QlstmState:
        return QlstmState.zeros(self.cell.hidden_dim, self.cell.cell_dim)

    def _encode(self, obs) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (self.obs_dim,):
            raise UsageError(f"observation must have length {self.obs_dim}, got {obs.shape}")
        return np.tanh(affine_forward(self.pre, obs))

    def step(self, obs, state: QlstmState) -> StepOutput:
        h, new_state = self.cell.step(self._encode(obs), state)
        return StepOutput(
            affine_forward(self.actor, h), float(affine_forward(self.critic, h)[0]), new_state
        )

    def value(self, obs, state: QlstmState) -> float:
        return self.step(obs, state).value

    def segment_backward(
        self,
        observations: Sequence,
        initial_state: QlstmState,
        logit_grads,
        value_grads,
    ) -> np.ndarray:
        """Flat gradient for per-step loss gradients on logits and values."""
        T = len(observations)
        logit_grads = np.asarray(logit_grads, dtype=float).reshape(T, -1)
        value_grads = np.asarray(value_grads, dtype=float).reshape(T)
        if logit_grads.shape[1] != self.actor.out_dim:
            raise UsageError("logit_grads do not match the number of actions")
        xs = [self._encode(o) for o in observations]
        hs, _ = self.cell.run(xs, initial_state)

        grads = [np.zeros(n) for n in self._sizes()]
        h_grads = np.empty_like(hs)
        for t in range(T):
            gh_a, gw_a, gb_a = affine_backward(self.actor, hs[t], logit_grads[t])
            gh_c, gw_c, gb_c = affine_backward(self.critic, hs[t], value_grads[t : t + 1])
            h_grads[t] = gh_a + gh_c
            grads[2] += np.concatenate([gw_a.ravel(), gb_a])
            grads[3] += np.concatenate([gw_c.ravel(), gb_c])
        x_grads, angle_grads = self.cell.backward(xs, initial_state, h_grads)
        if angle_grads is not None:
            grads[1] += angle_grads.ravel()
        for t in range(T):
            pre_grad = x_grads[t] * (1.0 - xs[t] ** 2)
            _, gw, gb = affine_backward(self.pre, np.asarray(observations[t], float), pre_grad)
            grads[0] += np.concatenate([gw.ravel(), gb])
        return np.concatenate(grads)

    def metadata(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "mode": self.mode,
            "n_layers": self.n_layers,
            "obs_dim": self.obs_dim,
            "latent_dim": self.cell.input_dim,
            "n_actions": self.actor.out_dim,
        }


def model_step(model: DressedModel, obs, state: QlstmState) -> StepOutput:
    return model.step(obs, state)


def segment_backward(model: DressedModel, observations, initial_state, logit_grads, value_grads):
    return model.segment_backward(observations, initial_state, logit_grads, value_grads)


def save_checkpoint(path, model: DressedModel, extra: Optional[dict] = None) -> Path:
    """Write an ``.npz`` holding the flat float64 vector and JSON metadata."""
    path = Path(path)
    meta = dict(model.metadata(), **(extra or {}))
    with open(path, "wb") as fh:
        np.savez(fh, params=model.get_flat(), metadata=np.array(json.dumps(meta, sort_keys=True)))
    return path


def load_checkpoint(path, grad_method: str = "adjoint") -> DressedModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["metadata"]))
        params = data["params"]
    if meta.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {meta.get('version')!r}")
    model = DressedModel(
        n_layers=meta["n_layers"], mode=meta["mode"], obs_dim=meta["obs_dim"],
        n_actions=meta["n_actions"], latent_dim=meta["latent_dim"], seed=0,
        grad_method=grad_method,
    )
    if params.shape != (model.n_params,):
        raise ConfigurationError(
            f"checkpoint holds {params.shape[0]} parameters, model expects {model.n_params}"
        )
    model.set_flat(params)
    return model


def read_checkpoint_metadata(path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        return json.loads(str(data["metadata"]))
