"""A from-scratch MiniGrid-Empty room.

The grid side ``n`` counts the border walls, so the interior is
``(n - 2) x (n - 2)`` and the goal sits at ``(n - 2, n - 2)``. Positions are
``(col, row)`` with row 0 at the top. Directions follow MiniGrid:
0 east, 1 south, 2 west, 3 north.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError, UsageError

VIEW_SIZE = 7
OBS_DIM = VIEW_SIZE * VIEW_SIZE * 3
N_ACTIONS = 6
TURN_LEFT, TURN_RIGHT, FORWARD, PICKUP, DROP, TOGGLE = range(N_ACTIONS)
ACTION_NAMES = ("left", "right", "forward", "pickup", "drop", "toggle")

# object ids, colour ids (goal is green), state ids are always 0
UNSEEN, EMPTY, WALL, GOAL = 0, 1, 2, 8
GREEN = 1

DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))
DIR_GLYPH = (">", "v", "<", "^")


@dataclass(frozen=True)
class GridConfig:
    n: int = 5
    random_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise ConfigurationError(f"grid size must be at least 4, got {self.n}")

    @property
    def max_steps(self) -> int:
        return 4 * self.n * self.n

    @property
    def goal(self) -> Tuple[int, int]:
        return (self.n - 2, self.n - 2)


@dataclass(frozen=True)
class EnvState:
    pos: Tuple[int, int]
    direction: int
    step_count: int = 0
    done: bool = False


def _cell_code(config: GridConfig, col: int, row: int) -> Tuple[int, int, int]:
    n = config.n
    if not (0 <= col < n and 0 <= row < n):
        return (UNSEEN, 0, 0)
    if col in (0, n - 1) or row in (0, n - 1):
        return (WALL, 0, 0)
    if (col, row) == config.goal:
        return (GOAL, GREEN, 0)
    return (EMPTY, 0, 0)


@lru_cache(maxsize=None)
def _padded_codes(config: GridConfig) -> np.ndarray:
    """Code table of the whole grid padded with unseen cells on every side."""
    pad = VIEW_SIZE - 1
    size = config.n + 2 * pad
    codes = np.zeros((size, size, 3))
    for row in range(config.n):
        for col in range(config.n):
            codes[row + pad, col + pad] = _cell_code(config, col, row)
    return codes


_AHEAD = (VIEW_SIZE - 1 - np.arange(VIEW_SIZE))[:, None]
_LATERAL = (np.arange(VIEW_SIZE) - VIEW_SIZE // 2)[None, :]


def encode_observation(state: EnvState, config: GridConfig) -> np.ndarray:
    """Egocentric 7x7x3 view flattened row-major with channels fastest.

    View row 0 is farthest ahead, row 6 holds the agent at column 3, and view
    columns increase toward the agent's right. Cells off the grid are unseen.
    """
    fx, fy = DIR_VEC[state.direction]
    rx, ry = DIR_VEC[(state.direction + 1) % 4]
    pad = VIEW_SIZE - 1
    cols = state.pos[0] + _AHEAD * fx + _LATERAL * rx + pad
    rows = state.pos[1] + _AHEAD * fy + _LATERAL * ry + pad
    return _padded_codes(config)[rows, cols].ravel()


def env_reset(config: GridConfig, rng: np.random.Generator) -> Tuple[EnvState, np.ndarray]:
    if config.random_start:
        cells = [
            (c, r)
            for r in range(1, config.n - 1)
            for c in range(1, config.n - 1)
            if (c, r) != config.goal
        ]
        pos = cells[int(rng.integers(len(cells)))]
        direction = int(rng.integers(4))
    else:
        pos, direction = (1, 1), 0
    state = EnvState(pos, direction)
    return state, encode_observation(state, config)


def env_step(
    state: EnvState, action: int, config: GridConfig
) -> Tuple[EnvState, float, bool, np.ndarray]:
    if state.done:
        raise UsageError("episode is over; call reset first")
    if not 0 <= action < N_ACTIONS:
        raise UsageError(f"action must be in [0, {N_ACTIONS}), got {action}")
    steps = state.step_count + 1
    pos, direction = state.pos, state.direction
    reward, done = 0.0, False
    if action == TURN_LEFT:
        direction = (direction - 1) % 4
    elif action == TURN_RIGHT:
        direction = (direction + 1) % 4
    elif action == FORWARD:
        dx, dy = DIR_VEC[direction]
        ahead = (pos[0] + dx, pos[1] + dy)
        if _cell_code(config, *ahead)[0] != WALL:
            pos = ahead
        if pos == config.goal:
            reward, done = 1.0 - 0.9 * (steps / config.max_steps), True
    if steps >= config.max_steps:
        done = True
    new = EnvState(pos, direction, steps, done)
    return new, reward, done, encode_observation(new, config)


class MiniGridEmpty:
    """Stateful wrapper holding one episode and its private RNG."""

    def __init__(self, config: GridConfig, rng: Optional[np.random.Generator] = None):
        self.config = config
        self.rng = np.random.default_rng(config.seed) if rng is None else rng
        self.state: Optional[EnvState] = None

    def reset(self) -> np.ndarray:
        self.state, obs = env_reset(self.config, self.rng)
        return obs

    def step(self, action: int) -> Tuple[np.ndarray, float, bool]:
        if self.state is None:
            raise UsageError("call reset before step")
        self.state, reward, done, obs = env_step(self.state, int(action), self.config)
        return obs, reward, done

    def render(self) -> str:
        return render(self.state, self.config)


def render(state: EnvState, config: GridConfig) -> str:
    """ASCII map: ``#`` wall, ``G`` goal, ``.`` floor, arrow for the agent."""
    rows = []
    for r in range(config.n):
        line = []
        for c in range(config.n):
            if state is not None and (c, r) == state.pos:
                line.append(DIR_GLYPH[state.direction])
            else:
                code = _cell_code(config, c, r)[0]
                line.append({WALL: "#", GOAL: "G"}.get(code, "."))
        rows.append("".join(line))
    return "\n".join(rows)
