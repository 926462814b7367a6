"""Asynchronous advantage actor-critic over a lock-protected global store.

Workers own a private model and environment. Each loop iteration takes a
consistent snapshot of the global parameters, rolls out at most
``lookup_steps`` transitions, computes the segment gradient locally and
applies it to the shared Adam state inside one critical section.
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .env import GridConfig, MiniGridEmpty
from .exceptions import ConfigurationError, UsageError
from .model import DressedModel
from .nets import log_softmax, sample_categorical, softmax

logger = logging.getLogger(__name__)


@dataclass
class Hyperparams:
    learning_rate: float = 1e-4
    beta1: float = 0.92
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    gamma: float = 0.9
    lookup_steps: int = 5
    n_workers: int = 8
    value_loss_coef: float = 0.5
    entropy_coef: float = 0.0
    max_episodes: int = 3000

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.lookup_steps < 1:
            raise ConfigurationError("lookup_steps must be at least 1")
        if self.n_workers < 1:
            raise ConfigurationError("n_workers must be at least 1")
        if self.max_episodes < 1:
            raise ConfigurationError("max_episodes must be at least 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    done: bool


@dataclass
class Trajectory:
    transitions: List[Transition] = field(default_factory=list)
    initial_state: object = None
    bootstrap_value: float = 0.0

    def __len__(self):
        return len(self.transitions)

    @property
    def terminal(self) -> bool:
        return bool(self.transitions) and self.transitions[-1].done

    def returns(self, gamma: float) -> np.ndarray:
        return compute_returns(
            [t.reward for t in self.transitions], gamma, self.bootstrap_value, self.terminal
        )


def compute_returns(rewards: Sequence[float], gamma: float, bootstrap_value: float = 0.0,
                    terminal: bool = True) -> np.ndarray:
    """Discounted n-step returns, bootstrapped from ``bootstrap_value`` unless terminal."""
    if len(rewards) == 0:
        raise UsageError("cannot compute returns of an empty segment")
    running = 0.0 if terminal else float(bootstrap_value)
    out = np.empty(len(rewards))
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + gamma * running
        out[t] = running
    return out


def actor_critic_loss(logits, values, actions, returns, value_loss_coef: float = 0.5,
                      entropy_coef: float = 0.0):
    """Policy-gradient plus critic loss over one segment.

    Returns ``(loss, logit_grads, value_grads)``. The advantage is a constant
    in the policy term, so the critic only learns through the squared error.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    actions = np.asarray(actions, dtype=int).reshape(-1)
    returns = np.asarray(returns, dtype=float).reshape(-1)
    T = logits.shape[0]
    if not (len(values) == len(actions) == len(returns) == T):
        raise UsageError("logits, values, actions and returns must be aligned")
    logp = log_softmax(logits)
    probs = np.exp(logp)
    advantage = returns - values
    chosen = logp[np.arange(T), actions]
    entropy = -(probs * logp).sum(axis=1)
    loss = (
        -np.sum(chosen * advantage)
        + value_loss_coef * np.sum(advantage**2)
        - entropy_coef * np.sum(entropy)
    )
    onehot = np.zeros_like(probs)
    onehot[np.arange(T), actions] = 1.0
    logit_grads = advantage[:, None] * (probs - onehot)
    logit_grads += entropy_coef * probs * (logp + entropy[:, None])
    value_grads = -2.0 * value_loss_coef * advantage
    return float(loss), logit_grads, value_grads


class GlobalStore:
    """Shared parameters, Adam moments, counters and the episode score log.

    Reads go through :meth:`snapshot` and writes through :meth:`apply`; both
    hold the same lock, so every snapshot reflects a whole number of updates.
    With ``record_history`` the store keeps every applied gradient and every
    snapshot version for offline replay.
    """

    def __init__(self, params, trainable_mask=None, max_episodes: int = 3000,
                 record_history: bool = False, clock: Optional[Callable[[], float]] = None):
        self.params = np.array(params, dtype=float)
        self.mask = (
            np.ones(self.params.shape, dtype=bool)
            if trainable_mask is None
            else np.asarray(trainable_mask, dtype=bool)
        )
        self.m = np.zeros_like(self.params)
        self.v = np.zeros_like(self.params)
        self.step = 0
        self.episodes = 0
        self.max_episodes = max_episodes
        self.scores: List[tuple] = []
        self.updates_by_worker: dict = {}
        self.failures: List[tuple] = []
        self.stop_event = threading.Event()
        self._lock = threading.Lock()
        self._t0 = time.perf_counter()
        self._clock = clock if clock is not None else (lambda: time.perf_counter() - self._t0)
        self.record_history = record_history
        self.applied: List[tuple] = []
        self.snapshots: List[tuple] = []

    @property
    def exhausted(self) -> bool:
        return self.episodes >= self.max_episodes or self.stop_event.is_set()

    def snapshot(self, worker_id: Optional[int] = None):
        """Consistent copy of the parameters and the update count it reflects."""
        with self._lock:
            params = self.params.copy()
            version = self.step
            if self.record_history:
                self.snapshots.append((worker_id, version, params.copy()))
        return params, version

    def apply(self, gradient, hp: Hyperparams, worker_id: Optional[int] = None) -> int:
        """One Adam step with bias correction; returns the new step count."""
        g = np.asarray(gradient, dtype=float)
        if g.shape != self.params.shape:
            raise UsageError(f"gradient shape {g.shape} does not match parameters {self.params.shape}")
        k = self.mask
        with self._lock:
            self.step += 1
            t = self.step
            self.m[k] = hp.beta1 * self.m[k] + (1.0 - hp.beta1) * g[k]
            self.v[k] = hp.beta2 * self.v[k] + (1.0 - hp.beta2) * g[k] ** 2
            m_hat = self.m[k] / (1.0 - hp.beta1**t)
            v_hat = self.v[k] / (1.0 - hp.beta2**t)
            self.params[k] -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + hp.adam_epsilon)
            self.updates_by_worker[worker_id] = self.updates_by_worker.get(worker_id, 0) + 1
            if self.record_history:
                self.applied.append((worker_id, g.copy()))
        return t

    def record_episode(self, worker_id: int, score: float, steps: int) -> Optional[int]:
        """Claim the next global episode index, or ``None`` once the budget is spent."""
        with self._lock:
            if self.episodes >= self.max_episodes:
                return None
            index = self.episodes
            self.episodes += 1
            self.scores.append((index, worker_id, float(score), int(steps), float(self._clock())))
        return index


def adam_apply(store: GlobalStore, gradient, hp: Hyperparams) -> GlobalStore:
    store.apply(gradient, hp)
    return store


def moving_average(scores: Sequence[float], window: int = 100) -> np.ndarray:
    """Trailing mean over the last ``window`` entries (shorter at the start)."""
    scores = np.asarray(scores, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(scores)])
    idx = np.arange(1, len(scores) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


class Worker:
    """One asynchronous actor-learner bound to a global store."""

    def __init__(self, worker_id: int, store: GlobalStore, model: DressedModel,
                 env_config: GridConfig, hp: Hyperparams, seed: int = 0,
                 on_episode: Optional[Callable[[int, "Worker"], None]] = None):
        self.worker_id = worker_id
        self.store = store
        self.model = model
        self.hp = hp
        env_config = GridConfig(env_config.n, env_config.random_start, seed + worker_id)
        self.env = MiniGridEmpty(env_config)
        self.rng = np.random.default_rng([seed, worker_id])
        self.on_episode = on_episode
        self.segments = 0

    def rollout(self, obs, state):
        traj = Trajectory(initial_state=state.copy())
        logits, values = [], []
        for _ in range(self.hp.lookup_steps):
            out = self.model.step(obs, state)
            action = sample_categorical(softmax(out.logits), self.rng)
            next_obs, reward, done = self.env.step(action)
            traj.transitions.append(Transition(obs, action, reward, done))
            logits.append(out.logits)
            values.append(out.value)
            obs, state = next_obs, out.state
            if done:
                break
        if not done:
            traj.bootstrap_value = self.model.value(obs, state)
        return traj, np.array(logits), np.array(values), obs, state

    def run(self) -> None:
        store, hp = self.store, self.hp
        obs = self.env.reset()
        state = self.model.initial_state()
        ep_score, ep_steps = 0.0, 0
        while not store.exhausted:
            params, _ = store.snapshot(self.worker_id)
            self.model.set_flat(params)
            traj, logits, values, obs, state = self.rollout(obs, state)
            returns = traj.returns(hp.gamma)
            actions = [t.action for t in traj.transitions]
            _, logit_grads, value_grads = actor_critic_loss(
                logits, values, actions, returns, hp.value_loss_coef, hp.entropy_coef
            )
            grad = self.model.segment_backward(
                [t.obs for t in traj.transitions], traj.initial_state, logit_grads, value_grads
            )
            store.apply(grad, hp, self.worker_id)
            self.segments += 1
            ep_score += sum(t.reward for t in traj.transitions)
            ep_steps += len(traj)
            if traj.terminal:
                index = store.record_episode(self.worker_id, ep_score, ep_steps)
                if index is None:
                    break
                if self.on_episode is not None:
                    self.on_episode(index, self)
                obs = self.env.reset()
                state = self.model.initial_state()
                ep_score, ep_steps = 0.0, 0


def worker_loop(worker_id: int, store: GlobalStore, model: DressedModel, env_config: GridConfig,
                hp: Hyperparams, seed: int = 0, on_episode=None) -> List[tuple]:
    Worker(worker_id, store, model, env_config, hp, seed, on_episode).run()
    return store.scores


class WorkerFailure(RuntimeError):
    pass


def train(model_factory: Callable[[], DressedModel], env_config: GridConfig, hp: Hyperparams,
          seed: int = 0, store: Optional[GlobalStore] = None, on_episode=None,
          clock=None, record_history: bool = False) -> GlobalStore:
    """Run ``hp.n_workers`` workers until the global episode budget is spent.

    A single worker runs inline in the calling thread, which keeps the run
    deterministic. A failing worker is logged and the others carry on; the
    failure is re-raised as :class:`WorkerFailure` after they finish.
    """
    if store is None:
        template = model_factory()
        store = GlobalStore(template.get_flat(), template.trainable_mask(), hp.max_episodes,
                            record_history=record_history, clock=clock)
    workers = [
        Worker(i, store, model_factory(), env_config, hp, seed, on_episode)
        for i in range(hp.n_workers)
    ]

    def guarded(worker: Worker):
        try:
            worker.run()
        except Exception as exc:  # noqa: BLE001 - reported after join
            logger.exception("worker %d failed", worker.worker_id)
            store.failures.append((worker.worker_id, repr(exc)))

    try:
        if len(workers) == 1:
            guarded(workers[0])
        else:
            threads = [threading.Thread(target=guarded, args=(w,), daemon=True) for w in workers]
            for t in threads:
                t.start()
            for t in threads:
                while t.is_alive():
                    t.join(timeout=0.5)
    except KeyboardInterrupt:
        store.stop_event.set()
        raise
    store.segments_by_worker = {w.worker_id: w.segments for w in workers}
    if store.failures:
        raise WorkerFailure(f"{len(store.failures)} worker(s) failed: {store.failures}")
    return store
