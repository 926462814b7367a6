"""Quantum LSTM reservoir agents trained with asynchronous advantage actor-critic."""

__version__ = "0.1.0"

from .a3c import GlobalStore, Hyperparams, actor_critic_loss, compute_returns, train
from .env import GridConfig, MiniGridEmpty
from .estimators import QLSTMReservoir, QuantumA3CAgent
from .model import DressedModel, load_checkpoint, save_checkpoint
from .qlstm import QlstmCell, QlstmState
from .vqc import VqcParams, vqc_forward, vqc_grad_input, vqc_grad_params

__all__ = [
    "DressedModel",
    "GlobalStore",
    "GridConfig",
    "Hyperparams",
    "MiniGridEmpty",
    "QLSTMReservoir",
    "QlstmCell",
    "QlstmState",
    "QuantumA3CAgent",
    "VqcParams",
    "actor_critic_loss",
    "compute_returns",
    "load_checkpoint",
    "save_checkpoint",
    "train",
    "vqc_forward",
    "vqc_grad_input",
    "vqc_grad_params",
]
