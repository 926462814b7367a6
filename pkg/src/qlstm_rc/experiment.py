"""Training and evaluation runs for the MiniGrid-Empty scenarios."""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .a3c import Hyperparams, moving_average, train
from .env import GridConfig, MiniGridEmpty
from .exceptions import ConfigurationError
from .model import DressedModel, load_checkpoint, save_checkpoint
from .nets import sample_categorical, softmax

logger = logging.getLogger(__name__)

SCENARIOS = {
    f"empty{n}-{start}": GridConfig(n, start == "random")
    for n in (5, 6, 8)
    for start in ("fixed", "random")
}
LAYER_CHOICES = (1, 2, 4)
SCORE_COLUMNS = ("global_episode", "worker_id", "score", "steps", "wall_clock_seconds")


def parse_scenario(name: str, seed: int = 0) -> GridConfig:
    """``"empty8-random"`` -> ``GridConfig(8, random_start=True, seed=seed)``."""
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    base = SCENARIOS[name]
    return GridConfig(base.n, base.random_start, seed)


@dataclass
class RunConfig:
    scenario: str = "empty5-fixed"
    mode: str = "reservoir"
    n_layers: int = 1
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 0
    out: str = "runs/default"
    checkpoint_every: int = 500
    grad_method: str = "adjoint"
    timestamps: bool = True

    def __post_init__(self):
        parse_scenario(self.scenario)
        if self.mode not in ("trainable", "reservoir"):
            raise ConfigurationError(f"mode must be trainable or reservoir, got {self.mode!r}")
        if self.n_layers < 1:
            raise ConfigurationError("n_layers must be positive")
        if self.checkpoint_every < 0:
            raise ConfigurationError("checkpoint_every must be non-negative")

    @property
    def episodes(self) -> int:
        return self.hyperparams.max_episodes

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "hyperparams"}
        d["hyperparams"] = self.hyperparams.to_dict()
        return d

    def make_model(self) -> DressedModel:
        return DressedModel(self.n_layers, self.mode, seed=self.seed, grad_method=self.grad_method)


def write_scores(path, scores) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for index, worker, score, steps, clock in sorted(scores):
            writer.writerow([index, worker, repr(score), steps, f"{clock:.3f}"])


def read_scores(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["score"]) for r in rows])


def run_train(config: RunConfig) -> dict:
    """Train, then write config.json, scores.csv, checkpoints and summary.json."""
    out = Path(config.out)
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    env_config = parse_scenario(config.scenario, config.seed)
    template = config.make_model()

    def on_episode(index: int, worker) -> None:
        done = index + 1
        if config.checkpoint_every and done % config.checkpoint_every == 0:
            params, _ = worker.store.snapshot()
            snap = config.make_model()
            snap.set_flat(params)
            save_checkpoint(ckpt_dir / f"episode_{done:06d}.npz", snap, {"episodes": done})

    clock = None if config.timestamps else (lambda: 0.0)
    store = None
    try:
        store = train(config.make_model, env_config, config.hyperparams, seed=config.seed,
                      on_episode=on_episode, clock=clock)
    finally:
        if store is not None:
            _finish(config, out, store, template)
    return json.loads((out / "summary.json").read_text())


def _finish(config: RunConfig, out: Path, store, template: DressedModel) -> None:
    write_scores(out / "scores.csv", store.scores)
    template.set_flat(store.params)
    save_checkpoint(out / "final.npz", template, {"episodes": store.episodes})
    scores = np.array([s[2] for s in sorted(store.scores)])
    ma = moving_average(scores, 100) if len(scores) else np.zeros(1)
    summary = {
        "episodes": int(store.episodes),
        "updates": int(store.step),
        "final_moving_average_100": float(ma[-1]),
        "max_moving_average_100": float(ma.max()),
        "mean_score": float(scores.mean()) if len(scores) else 0.0,
        "trainable_parameters": template.n_trainable,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))


def evaluate_policy(model: DressedModel, env_config: GridConfig, episodes: int,
                    seed: int = 0, greedy: bool = True) -> np.ndarray:
    """Scores of ``episodes`` rollouts with argmax actions and no learning."""
    env = MiniGridEmpty(GridConfig(env_config.n, env_config.random_start, seed))
    rng = np.random.default_rng(seed)
    scores = np.empty(episodes)
    for e in range(episodes):
        obs, state, total, done = env.reset(), model.initial_state(), 0.0, False
        while not done:
            out = model.step(obs, state)
            if greedy:
                action = int(np.argmax(out.logits))
            else:
                action = sample_categorical(softmax(out.logits), rng)
            obs, reward, done = env.step(action)
            state = out.state
            total += reward
        scores[e] = total
    return scores


def run_eval(checkpoint, config: RunConfig, episodes: int = 100,
             out: Optional[str] = None) -> dict:
    model = load_checkpoint(checkpoint, grad_method=config.grad_method)
    if (model.mode, model.n_layers) != (config.mode, config.n_layers):
        raise ConfigurationError(
            f"checkpoint is {model.mode}/{model.n_layers} layer(s) but the config asks for "
            f"{config.mode}/{config.n_layers}"
        )
    scores = evaluate_policy(model, parse_scenario(config.scenario, config.seed), episodes,
                             seed=config.seed)
    stats = {
        "checkpoint": os.fspath(checkpoint),
        "scenario": config.scenario,
        "episodes": episodes,
        "mean": float(scores.mean()),
        "std": float(scores.std()),
    }
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "eval.json").write_text(json.dumps(stats, indent=2, sort_keys=True))
    return stats
