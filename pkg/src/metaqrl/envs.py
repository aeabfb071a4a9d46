"""Self-contained episodic environments: gridworld Empty 5x5 and cart-pole.

Both environments expose the same minimal interface:

- ``reset(seed) -> obs``
- ``step(action) -> (obs, reward, done)``
- ``n_actions``, ``obs_size``, ``max_steps`` class attributes

The gridworld is a 5x5 room whose outer ring is wall. The agent starts at
(1, 1) facing east, the goal sits at (3, 3). Actions: 0 turn left, 1 turn
right, 2 move forward (blocked by walls), 3-5 are legal no-ops that still
consume a step (the Empty variant has no objects to pick up, drop or use).
Reaching the goal ends the episode with reward 1 - 0.9 * steps / 100;
running out of the 100-step budget ends it with reward 0. Everything is
deterministic; the reset seed is accepted for interface uniformity only.

Observations are the full grid, one (object_id, color_id, state) triple
per cell in row-major order, each channel normalized by its maximum
(10, 5, 3), giving a 75-vector in [0, 1]. The id palette is kept in one
table below so it can be swapped wholesale.

The cart-pole uses the standard classic-control dynamics: force +-10 N,
gravity 9.8, cart mass 1.0, pole mass 0.1, pole half-length 0.5, explicit
Euler at tau = 0.02 s with accelerations computed from the pre-update
state. Reward is +1 per step (terminal step included); the episode ends
when |x| > 2.4, |theta| > 12 degrees, or after 500 steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# ---------------------------------------------------------------------------
# gridworld Empty 5x5
# ---------------------------------------------------------------------------

GRID_SIZE = 5

# Observation palette (object ids, color ids, channel maxima). Swapping the
# encoding means editing exactly this block.
OBJECT_IDS = {"empty": 1, "wall": 2, "goal": 8, "agent": 10}
COLOR_IDS = {"red": 0, "green": 1, "blue": 2, "purple": 3, "yellow": 4, "grey": 5}
CELL_CHANNELS = {
    "empty": (OBJECT_IDS["empty"], COLOR_IDS["red"], 0),
    "wall": (OBJECT_IDS["wall"], COLOR_IDS["grey"], 0),
    "goal": (OBJECT_IDS["goal"], COLOR_IDS["green"], 0),
}
CHANNEL_MAX = np.array([10.0, 5.0, 3.0])

START_POS = (1, 1)
START_DIR = 0  # 0=east, 1=south, 2=west, 3=north
GOAL_POS = (3, 3)

# (dx, dy) per direction; y grows southward (row index)
DIR_VECTORS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _background_grid() -> np.ndarray:
    """Static (5, 5, 3) channel grid: walls, goal, empty floor."""
    grid = np.empty((GRID_SIZE, GRID_SIZE, 3))
    grid[:, :] = CELL_CHANNELS["empty"]
    grid[0, :] = grid[-1, :] = CELL_CHANNELS["wall"]
    grid[:, 0] = grid[:, -1] = CELL_CHANNELS["wall"]
    gx, gy = GOAL_POS
    grid[gy, gx] = CELL_CHANNELS["goal"]
    return grid / CHANNEL_MAX


_BASE_GRID = _background_grid()


@dataclass(frozen=True)
class MiniGridState:
    agent_pos: tuple
    agent_dir: int
    step_count: int
    done: bool


def background_obs() -> np.ndarray:
    """The 75-vector of the agent-free grid (walls, floor, goal)."""
    obs = _BASE_GRID.reshape(-1).copy()
    obs.flags.writeable = False
    return obs


_OBS_CACHE: dict = {}  # (pos, dir) -> read-only obs; at most 100 entries


def encode_minigrid_obs(state: MiniGridState) -> np.ndarray:
    """Normalized 75-vector for the full grid with the agent drawn in.

    Observations are interned per (position, direction) and returned
    read-only; rollouts revisit the same few dozen grids constantly.
    """
    key = (state.agent_pos, state.agent_dir)
    obs = _OBS_CACHE.get(key)
    if obs is None:
        grid = _BASE_GRID.copy()
        x, y = state.agent_pos
        grid[y, x] = (
            OBJECT_IDS["agent"] / CHANNEL_MAX[0],
            COLOR_IDS["red"] / CHANNEL_MAX[1],
            state.agent_dir / CHANNEL_MAX[2],
        )
        obs = grid.reshape(-1)
        obs.flags.writeable = False
        _OBS_CACHE[key] = obs
    return obs


class MiniGridEnv:
    """Deterministic Empty 5x5 gridworld."""

    n_actions = 6
    obs_size = 75
    max_steps = 100

    def __init__(self):
        self._pos = START_POS
        self._dir = START_DIR
        self._steps = 0
        self._done = True  # require reset() before step()

    @property
    def state(self) -> MiniGridState:
        return MiniGridState(self._pos, self._dir, self._steps, self._done)

    def reset(self, seed=None) -> np.ndarray:
        self._pos = START_POS
        self._dir = START_DIR
        self._steps = 0
        self._done = False
        return encode_minigrid_obs(self.state)

    @staticmethod
    def _is_wall(pos) -> bool:
        x, y = pos
        return x in (0, GRID_SIZE - 1) or y in (0, GRID_SIZE - 1)

    def step(self, action: int):
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action must be in 0..{self.n_actions - 1}")
        if action == 0:
            self._dir = (self._dir - 1) % 4
        elif action == 1:
            self._dir = (self._dir + 1) % 4
        elif action == 2:
            dx, dy = DIR_VECTORS[self._dir]
            target = (self._pos[0] + dx, self._pos[1] + dy)
            if not self._is_wall(target):
                self._pos = target
        # actions 3..5: no-ops
        self._steps += 1

        reward = 0.0
        if self._pos == GOAL_POS:
            self._done = True
            reward = 1.0 - 0.9 * (self._steps / self.max_steps)
        elif self._steps >= self.max_steps:
            self._done = True
        return encode_minigrid_obs(self.state), reward, self._done


# ---------------------------------------------------------------------------
# cart-pole
# ---------------------------------------------------------------------------

GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
POLE_HALF_LENGTH = 0.5
POLEMASS_LENGTH = MASS_POLE * POLE_HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12.0 * math.pi / 180.0


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    step_count: int
    done: bool


class CartPoleEnv:
    """Classic cart-pole balancing with Euler-integrated dynamics."""

    n_actions = 2
    obs_size = 4
    max_steps = 500

    def __init__(self):
        self._x = self._x_dot = self._theta = self._theta_dot = 0.0
        self._steps = 0
        self._done = True

    @property
    def state(self) -> CartPoleState:
        return CartPoleState(
            self._x, self._x_dot, self._theta, self._theta_dot, self._steps, self._done
        )

    def _obs(self) -> np.ndarray:
        return np.array([self._x, self._x_dot, self._theta, self._theta_dot])

    def reset(self, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self._x, self._x_dot, self._theta, self._theta_dot = rng.uniform(
            -0.05, 0.05, size=4
        )
        self._steps = 0
        self._done = False
        return self._obs()

    def set_state(self, x, x_dot, theta, theta_dot):
        """Test hook: place the cart-pole at an arbitrary (live) state."""
        self._x, self._x_dot = float(x), float(x_dot)
        self._theta, self._theta_dot = float(theta), float(theta_dot)
        self._done = False

    def step(self, action: int):
        if action not in (0, 1):
            raise ValueError("action must be 0 (push left) or 1 (push right)")
        return self.step_with_force(FORCE_MAG if action == 1 else -FORCE_MAG)

    def step_with_force(self, force: float):
        """One Euler step under an arbitrary force (test hook for force 0)."""
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        cos_t = math.cos(self._theta)
        sin_t = math.sin(self._theta)
        temp = (
            force + POLEMASS_LENGTH * self._theta_dot**2 * sin_t
        ) / TOTAL_MASS
        theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
            POLE_HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t**2 / TOTAL_MASS)
        )
        x_acc = temp - POLEMASS_LENGTH * theta_acc * cos_t / TOTAL_MASS

        self._x += TAU * self._x_dot
        self._x_dot += TAU * x_acc
        self._theta += TAU * self._theta_dot
        self._theta_dot += TAU * theta_acc
        self._steps += 1

        self._done = (
            abs(self._x) > X_THRESHOLD
            or abs(self._theta) > THETA_THRESHOLD
            or self._steps >= self.max_steps
        )
        return self._obs(), 1.0, self._done


ENV_NAMES = ("minigrid5x5", "cartpole")


def make_env(name: str):
    if name == "minigrid5x5":
        return MiniGridEnv()
    if name == "cartpole":
        return CartPoleEnv()
    raise ValueError(f"unknown environment {name!r}; choose from {ENV_NAMES}")
