"""Affine layers, softmax and categorical sampling for the dressed model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import UsageError


@dataclass
class AffineLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise UsageError(
                f"weights {self.weights.shape} and bias {self.bias.shape} are inconsistent"
            )

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "AffineLayer":
        """Uniform weights in +-1/sqrt(in_dim), zero bias."""
        bound = 1.0 / np.sqrt(in_dim)
        return cls(rng.uniform(-bound, bound, size=(out_dim, in_dim)), np.zeros(out_dim))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_params(self) -> int:
        return self.weights.size + self.bias.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.bias])

    def load_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_params,):
            raise UsageError(f"expected {self.n_params} values, got {vec.shape}")
        k = self.weights.size
        self.weights = vec[:k].reshape(self.weights.shape).copy()
        self.bias = vec[k:].copy()


def affine_forward(layer: AffineLayer, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (layer.in_dim,):
        raise UsageError(f"expected input of length {layer.in_dim}, got shape {x.shape}")
    return layer.weights @ x + layer.bias


def affine_backward(layer: AffineLayer, x, out_grad):
    """Returns ``(input_grad, weight_grad, bias_grad)``."""
    x = np.asarray(x, dtype=float)
    out_grad = np.asarray(out_grad, dtype=float)
    if x.shape != (layer.in_dim,) or out_grad.shape != (layer.out_dim,):
        raise UsageError("x or out_grad does not match the layer dimensions")
    return layer.weights.T @ out_grad, np.outer(out_grad, x), out_grad.copy()


def softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(logits)):
        raise UsageError("logits must be finite")
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def sample_categorical(probs, rng: np.random.Generator) -> int:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise UsageError("probs must be a non-negative vector summing to 1")
    # inverse CDF on one uniform draw keeps rng consumption fixed per call
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u * probs.sum(), side="right"))
    return min(idx, len(probs) - 1)
