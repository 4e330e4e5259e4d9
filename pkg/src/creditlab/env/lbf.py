"""Level-based foraging gridworld.

A cooperative Dec-POMDP on a square grid: agents and food items carry
levels; a food is collected when the agents adjacent to it (4-neighborhood)
that choose Pickup in the same step have a combined level at least the food
level. In the coop variant every food's level equals the sum of all agent
levels, so collection needs everyone. Team reward is the level of food
collected that step.

Global state layout (raw cell indices, no normalization):

    [x, y, level] per agent, then [x, y, level] per food, then one
    last-action slot per agent (-1 before the first step).

A collected food's triple becomes (-1, -1, 0). Observations are fixed-length
masked views: own triple first, other agents' triples, then food triples,
with any entity beyond Chebyshev distance ``sight_radius`` masked to
(-1, -1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import StepAfterDone

N_ACTIONS = 6
NOOP, NORTH, SOUTH, WEST, EAST, PICKUP = range(N_ACTIONS)
# Grid moves in (dx, dy); y grows southward.
_MOVES = {NORTH: (0, -1), SOUTH: (0, 1), WEST: (-1, 0), EAST: (1, 0)}


@dataclass(frozen=True)
class LbfConfig:
    grid_size: int
    n_agents: int
    n_foods: int
    coop: bool
    sight_radius: int
    max_steps: int
    level_max: int

    def __post_init__(self) -> None:
        if self.grid_size < 4:
            raise ValueError("grid_size must be >= 4")
        if self.n_agents < 1 or self.n_foods < 1:
            raise ValueError("need at least one agent and one food")
        if self.sight_radius < 0 or self.max_steps < 1 or self.level_max < 1:
            raise ValueError("sight_radius >= 0, max_steps >= 1, level_max >= 1 required")
        if self.n_agents + self.n_foods > self.grid_size**2:
            raise ValueError("entities do not fit on the grid")

    @property
    def state_dim(self) -> int:
        return 3 * self.n_agents + 3 * self.n_foods + self.n_agents

    @property
    def obs_dim(self) -> int:
        return 3 * self.n_agents + 3 * self.n_foods


@dataclass
class LbfState:
    """Structured episode state; the flat vectors are derived views."""

    agent_pos: np.ndarray  # (n, 2) int cells (x, y)
    agent_levels: np.ndarray  # (n,) int
    food_pos: np.ndarray  # (m, 2) int
    food_levels: np.ndarray  # (m,) int
    collected: np.ndarray  # (m,) bool
    last_actions: np.ndarray  # (n,) int, -1 before the first step
    t: int = 0
    done: bool = False

    def copy(self) -> "LbfState":
        return LbfState(
            self.agent_pos.copy(),
            self.agent_levels.copy(),
            self.food_pos.copy(),
            self.food_levels.copy(),
            self.collected.copy(),
            self.last_actions.copy(),
            self.t,
            self.done,
        )


class LbfEnv:
    """Stateful wrapper; single-threaded, independently owned per instance."""

    def __init__(self, config: LbfConfig):
        self.config = config
        self.state: LbfState | None = None

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    @property
    def state_dim(self) -> int:
        return self.config.state_dim

    @property
    def obs_dim(self) -> int:
        return self.config.obs_dim

    def reset(self, seed: int | np.random.Generator) -> tuple[np.ndarray, list[np.ndarray]]:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        cfg = self.config
        cells = rng.choice(cfg.grid_size**2, size=cfg.n_agents + cfg.n_foods, replace=False)
        xy = np.stack([cells % cfg.grid_size, cells // cfg.grid_size], axis=1)
        agent_levels = rng.integers(1, cfg.level_max + 1, size=cfg.n_agents)
        if cfg.coop:
            food_levels = np.full(cfg.n_foods, int(agent_levels.sum()))
        else:
            food_levels = rng.integers(1, cfg.level_max + 1, size=cfg.n_foods)
        self.state = LbfState(
            agent_pos=xy[: cfg.n_agents],
            agent_levels=agent_levels,
            food_pos=xy[cfg.n_agents :],
            food_levels=food_levels,
            collected=np.zeros(cfg.n_foods, dtype=bool),
            last_actions=np.full(cfg.n_agents, -1, dtype=np.int64),
        )
        return self.global_state(), self.observations()

    def step(self, joint_action) -> tuple[np.ndarray, list[np.ndarray], float, bool]:
        if self.state is None:
            raise RuntimeError("reset() before step()")
        if self.state.done:
            raise StepAfterDone("episode already finished")
        actions = np.asarray(joint_action, dtype=np.int64)
        if actions.shape != (self.config.n_agents,) or not ((actions >= 0) & (actions < N_ACTIONS)).all():
            raise ValueError(f"joint action must be {self.config.n_agents} entries in [0, {N_ACTIONS})")

        st = self.state
        cfg = self.config
        occupied = {tuple(p) for p in st.agent_pos}
        food_cells = {tuple(p) for p, c in zip(st.food_pos, st.collected) if not c}

        # Movement: judged against current occupancy, symmetric and order-free.
        targets = []
        for i, act in enumerate(actions):
            pos = tuple(st.agent_pos[i])
            if int(act) in _MOVES:
                dx, dy = _MOVES[int(act)]
                cand = (pos[0] + dx, pos[1] + dy)
                in_grid = 0 <= cand[0] < cfg.grid_size and 0 <= cand[1] < cfg.grid_size
                if in_grid and cand not in occupied and cand not in food_cells:
                    targets.append(cand)
                    continue
            targets.append(pos)
        # Two agents targeting the same cell: neither moves.
        for i in range(len(targets)):
            for j in range(i + 1, len(targets)):
                if targets[i] == targets[j]:
                    targets[i] = tuple(st.agent_pos[i])
                    targets[j] = tuple(st.agent_pos[j])
        st.agent_pos = np.array(targets, dtype=np.int64)

        # Pickups: each food looks at adjacent agents that chose Pickup.
        reward = 0.0
        for f in range(cfg.n_foods):
            if st.collected[f]:
                continue
            fx, fy = st.food_pos[f]
            group_level = 0
            for i in range(cfg.n_agents):
                if actions[i] != PICKUP:
                    continue
                ax, ay = st.agent_pos[i]
                if abs(ax - fx) + abs(ay - fy) == 1:
                    group_level += int(st.agent_levels[i])
            if group_level >= st.food_levels[f] and group_level > 0:
                st.collected[f] = True
                reward += float(st.food_levels[f])
                st.food_pos[f] = (-1, -1)

        st.last_actions = actions.copy()
        st.t += 1
        st.done = bool(st.collected.all() or st.t >= cfg.max_steps)
        return self.global_state(), self.observations(), reward, st.done

    def global_state(self) -> np.ndarray:
        st = self.state
        parts = []
        for i in range(self.config.n_agents):
            parts.extend([st.agent_pos[i, 0], st.agent_pos[i, 1], st.agent_levels[i]])
        for f in range(self.config.n_foods):
            level = 0 if st.collected[f] else st.food_levels[f]
            parts.extend([st.food_pos[f, 0], st.food_pos[f, 1], level])
        parts.extend(st.last_actions)
        return np.array(parts, dtype=np.float64)

    def observations(self) -> list[np.ndarray]:
        st = self.state
        cfg = self.config
        obs_list = []
        for i in range(cfg.n_agents):
            ox, oy = st.agent_pos[i]
            triples = []

            def visible(x: int, y: int) -> bool:
                return max(abs(x - ox), abs(y - oy)) <= cfg.sight_radius

            triples.append((st.agent_pos[i, 0], st.agent_pos[i, 1], st.agent_levels[i]))
            for j in range(cfg.n_agents):
                if j == i:
                    continue
                x, y = st.agent_pos[j]
                if visible(x, y):
                    triples.append((x, y, st.agent_levels[j]))
                else:
                    triples.append((-1, -1, 0))
            for f in range(cfg.n_foods):
                x, y = st.food_pos[f]
                if not st.collected[f] and visible(x, y):
                    triples.append((x, y, st.food_levels[f]))
                else:
                    triples.append((-1, -1, 0))
            obs_list.append(np.array(triples, dtype=np.float64).reshape(-1))
        return obs_list

    def last_actions(self) -> np.ndarray:
        return self.state.last_actions.astype(np.float64)

    def is_success(self) -> bool:
        """All foods collected (used by greedy evaluation)."""
        return bool(self.state is not None and self.state.collected.all())

    def total_food_level(self) -> float:
        return float(self.state.food_levels.sum())


@dataclass
class LbfStateSampler:
    """Probe-state source: random resets advanced by a few random steps.

    Boundary states include all-zero, all minus-one, and a max-coordinate
    state (every coordinate at grid_size - 1, levels at level_max, last
    actions at the highest action index).
    """

    config: LbfConfig
    rollout_steps: int = 4
    _env: LbfEnv = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._env = LbfEnv(self.config)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        state, _ = self._env.reset(rng)
        for _ in range(int(rng.integers(0, self.rollout_steps + 1))):
            if self._env.state.done:
                break
            actions = rng.integers(0, N_ACTIONS, size=self.config.n_agents)
            state, _, _, _ = self._env.step(actions)
        return state

    def boundary_states(self) -> list[np.ndarray]:
        cfg = self.config
        dim = cfg.state_dim
        hi = np.empty(dim)
        triple_max = [cfg.grid_size - 1, cfg.grid_size - 1, cfg.level_max]
        coop_level = cfg.n_agents * cfg.level_max if cfg.coop else cfg.level_max
        pos = 0
        for _ in range(cfg.n_agents):
            hi[pos : pos + 3] = triple_max
            pos += 3
        for _ in range(cfg.n_foods):
            hi[pos : pos + 3] = [cfg.grid_size - 1, cfg.grid_size - 1, coop_level]
            pos += 3
        hi[pos:] = N_ACTIONS - 1
        return [np.zeros(dim), -np.ones(dim), hi]
