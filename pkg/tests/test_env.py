from collections import deque

import numpy as np
import pytest

from qlstm_rc.env import (
    EMPTY,
    FORWARD,
    GOAL,
    OBS_DIM,
    TURN_LEFT,
    TURN_RIGHT,
    UNSEEN,
    WALL,
    EnvState,
    GridConfig,
    MiniGridEmpty,
    encode_observation,
    env_reset,
    env_step,
    render,
)
from qlstm_rc.exceptions import ConfigurationError, UsageError


def bfs_shortest(config: GridConfig, start: EnvState) -> int:
    """Breadth-first search over (position, direction) with the three useful actions."""
    dirs = ((1, 0), (0, 1), (-1, 0), (0, -1))
    seen = {(start.pos, start.direction)}
    queue = deque([(start.pos, start.direction, 0)])
    while queue:
        pos, d, dist = queue.popleft()
        succ = [(pos, (d - 1) % 4), (pos, (d + 1) % 4)]
        nxt = (pos[0] + dirs[d][0], pos[1] + dirs[d][1])
        if 1 <= nxt[0] <= config.n - 2 and 1 <= nxt[1] <= config.n - 2:
            if nxt == config.goal:
                return dist + 1
            succ.append((nxt, d))
        else:
            succ.append((pos, d))
        for key in succ:
            if key not in seen:
                seen.add(key)
                queue.append((key[0], key[1], dist + 1))
    raise AssertionError("goal unreachable")


def test_config_validation():
    with pytest.raises(ConfigurationError):
        GridConfig(3)
    assert GridConfig(5).max_steps == 100
    assert GridConfig(8).max_steps == 256
    assert GridConfig(6).goal == (4, 4)


@pytest.mark.parametrize("seed", [0, 1, 99])
def test_fixed_start(seed):
    state, obs = env_reset(GridConfig(6), np.random.default_rng(seed))
    assert state.pos == (1, 1) and state.direction == 0 and state.step_count == 0
    assert obs.shape == (OBS_DIM,)


def test_random_start_uniform():
    config = GridConfig(5, random_start=True)
    rng = np.random.default_rng(0)
    counts = {}
    dirs = np.zeros(4)
    for _ in range(10000):
        state, _ = env_reset(config, rng)
        counts[state.pos] = counts.get(state.pos, 0) + 1
        dirs[state.direction] += 1
    assert len(counts) == 8 and config.goal not in counts
    for c in counts.values():
        assert abs(c / 10000 - 1 / 8) < 0.02
    assert np.all(np.abs(dirs / 10000 - 0.25) < 0.02)


def test_reward_formula_after_ten_steps():
    config = GridConfig(5)
    state, _ = env_reset(config, np.random.default_rng(0))
    # five no-op steps, then the optimal five
    for a in [3, 4, 5, 3, 4, FORWARD, FORWARD, TURN_RIGHT, FORWARD]:
        state, r, done, _ = env_step(state, a, config)
        assert r == 0 and not done
    state, r, done, _ = env_step(state, FORWARD, config)
    assert done and state.step_count == 10
    assert r == pytest.approx(1 - 0.9 * 10 / 100) and r == pytest.approx(0.91)


def test_forward_into_wall():
    config = GridConfig(5)
    state = EnvState((1, 1), 3)  # facing north toward the wall
    new, r, done, _ = env_step(state, FORWARD, config)
    assert new.pos == (1, 1) and new.step_count == 1 and r == 0 and not done


def test_noop_actions_cost_a_step():
    config = GridConfig(5)
    state = EnvState((2, 2), 1)
    for a in (3, 4, 5):
        new, r, _, _ = env_step(state, a, config)
        assert (new.pos, new.direction, new.step_count, r) == ((2, 2), 1, 1, 0.0)


def test_turns():
    config = GridConfig(5)
    s = EnvState((2, 2), 0)
    assert env_step(s, TURN_LEFT, config)[0].direction == 3
    assert env_step(s, TURN_RIGHT, config)[0].direction == 1


@pytest.mark.parametrize("n", [5, 6, 8])
def test_bfs_optimal_fixed_start(n):
    config = GridConfig(n)
    start, _ = env_reset(config, np.random.default_rng(0))
    best = bfs_shortest(config, start)
    # forward to the east wall, turn right, forward to the goal
    plan = [FORWARD] * (n - 3) + [TURN_RIGHT] + [FORWARD] * (n - 3)
    state = start
    for a in plan:
        state, r, done, _ = env_step(state, a, config)
    assert done and state.step_count == len(plan) == best
    assert r == pytest.approx(1 - 0.9 * best / config.max_steps)


def test_bfs_fixed_start_five_by_five_is_five_steps():
    config = GridConfig(5)
    assert bfs_shortest(config, EnvState((1, 1), 0)) == 5
    assert 1 - 0.9 * 5 / 100 == pytest.approx(0.955)


def test_step_limit_truncates_with_zero_reward():
    config = GridConfig(5)
    state, _ = env_reset(config, np.random.default_rng(0))
    steps = 0
    done = False
    while not done:
        state, r, done, _ = env_step(state, TURN_LEFT, config)
        steps += 1
        assert r == 0.0
    assert steps == config.max_steps == 4 * 5 * 5
    with pytest.raises(UsageError):
        env_step(state, TURN_LEFT, config)


def test_rewards_and_episode_length_bounds():
    rng = np.random.default_rng(1)
    for n in (5, 6):
        env = MiniGridEmpty(GridConfig(n, random_start=True, seed=3))
        for _ in range(30):
            env.reset()
            done, steps = False, 0
            while not done:
                _, r, done = env.step(int(rng.integers(6)))
                steps += 1
                if r != 0:
                    assert done and 0.1 <= r < 1.0
            assert steps <= 4 * n * n


def test_transition_determinism(rng):
    config = GridConfig(6)
    for _ in range(100):
        s = EnvState((int(rng.integers(1, 5)), int(rng.integers(1, 5))), int(rng.integers(4)))
        if s.pos == config.goal:
            continue
        a = int(rng.integers(6))
        r1, r2 = env_step(s, a, config), env_step(s, a, config)
        assert r1[0] == r2[0] and r1[1] == r2[1] and np.array_equal(r1[3], r2[3])


def test_observation_fixture_five_by_five():
    config = GridConfig(5)
    view = encode_observation(EnvState((1, 1), 0), config).reshape(7, 7, 3)
    objects = np.array([
        [0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0],
        [0, 0, 2, 2, 2, 2, 2],
        [0, 0, 2, 1, 1, 8, 2],
        [0, 0, 2, 1, 1, 1, 2],
        [0, 0, 2, 1, 1, 1, 2],
    ])
    np.testing.assert_array_equal(view[:, :, 0], objects)
    colors = np.zeros((7, 7))
    colors[4, 5] = 1
    np.testing.assert_array_equal(view[:, :, 1], colors)
    assert not view[:, :, 2].any()


def test_observation_flattening_order():
    obs = encode_observation(EnvState((1, 1), 0), GridConfig(5))
    # goal is view row 4, column 5; channels are fastest
    assert obs[(4 * 7 + 5) * 3] == GOAL and obs[(4 * 7 + 5) * 3 + 1] == 1
    assert obs[(6 * 7 + 3) * 3] == EMPTY  # the agent's own cell
    assert obs[(6 * 7 + 2) * 3] == WALL  # the wall on its left
    assert obs[0] == UNSEEN


def test_four_left_turns_restore_observation(rng):
    config = GridConfig(8)
    state = EnvState((3, 4), 2)
    obs0 = encode_observation(state, config)
    for _ in range(4):
        state, _, _, obs = env_step(state, TURN_LEFT, config)
    assert np.array_equal(obs, obs0)


def test_reset_after_done():
    env = MiniGridEmpty(GridConfig(5))
    env.reset()
    for a in [FORWARD, FORWARD, TURN_RIGHT, FORWARD, FORWARD]:
        _, _, done = env.step(a)
    assert done
    env.reset()
    assert env.state.step_count == 0 and not env.state.done


def test_render():
    text = render(EnvState((1, 1), 0), GridConfig(5))
    assert text.splitlines() == ["#####", "#>..#", "#...#", "#..G#", "#####"]
