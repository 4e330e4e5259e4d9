"""Small cooperative matrix games with an exact Q* oracle.

Joint actions are flattened row-major (agent 0 most significant), so the
payoff and transition tables have shape (n_states, n_actions ** n_agents).
These games are the desk-scale substrate for the exact-decomposition studies
in :mod:`creditlab.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MatrixGame:
    n_states: int
    n_agents: int
    n_actions_per_agent: int
    payoff: np.ndarray  # (n_states, n_joint)
    transition: np.ndarray  # (n_states, n_joint) int state indices
    terminal: np.ndarray  # (n_states,) bool

    def __post_init__(self) -> None:
        self.payoff = np.asarray(self.payoff, dtype=np.float64)
        self.transition = np.asarray(self.transition, dtype=np.int64)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        n_joint = self.n_actions_per_agent**self.n_agents
        if self.payoff.shape != (self.n_states, n_joint):
            raise ValueError(f"payoff shape {self.payoff.shape} != {(self.n_states, n_joint)}")
        if self.transition.shape != (self.n_states, n_joint):
            raise ValueError("transition table shape mismatch")
        if not np.isfinite(self.payoff).all():
            raise ValueError("payoff must be finite")
        if ((self.transition < 0) | (self.transition >= self.n_states)).any():
            raise ValueError("transition indices out of range")
        if self.terminal.shape != (self.n_states,):
            raise ValueError("terminal flags shape mismatch")

    @property
    def n_joint(self) -> int:
        return self.n_actions_per_agent**self.n_agents

    def joint_index(self, actions) -> int:
        idx = 0
        for a in actions:
            if not 0 <= int(a) < self.n_actions_per_agent:
                raise IndexError(f"action {a} out of range")
            idx = idx * self.n_actions_per_agent + int(a)
        return idx

    def joint_actions(self) -> np.ndarray:
        """(n_joint, n_agents) table mapping flat index -> per-agent actions."""
        grids = np.indices([self.n_actions_per_agent] * self.n_agents)
        return np.stack([g.ravel() for g in grids], axis=1)


def matrix_reset(game: MatrixGame, start_state: int = 0) -> int:
    if not 0 <= start_state < game.n_states:
        raise IndexError(f"state {start_state} out of range")
    return start_state


def matrix_step(game: MatrixGame, state_index: int, joint_action) -> tuple[int, float, bool]:
    """Returns (next_state, reward, done); done iff the next state is terminal."""
    if not 0 <= state_index < game.n_states:
        raise IndexError(f"state {state_index} out of range")
    j = game.joint_index(joint_action)
    next_state = int(game.transition[state_index, j])
    reward = float(game.payoff[state_index, j])
    return next_state, reward, bool(game.terminal[next_state])


def oracle_joint_q(game: MatrixGame, gamma: float, tol: float = 1e-10) -> np.ndarray:
    """Exact Q*(s, a) by value iteration to sup-norm change < tol.

    Terminal next states contribute no future value.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must be in [0, 1)")
    q = np.zeros((game.n_states, game.n_joint))
    cont = ~game.terminal[game.transition]  # (n_states, n_joint)
    while True:
        v_next = q.max(axis=1)[game.transition]
        q_new = game.payoff + gamma * np.where(cont, v_next, 0.0)
        if np.max(np.abs(q_new - q)) < tol:
            return q_new
        q = q_new


class MatrixEnv:
    """Trainer-compatible wrapper around a MatrixGame.

    The state vector is one-hot(state) followed by one last-action slot per
    agent; observations are the state one-hot (full observability).
    """

    def __init__(self, game: MatrixGame, max_steps: int = 20, start_state: int = 0):
        self.game = game
        self.max_steps = max_steps
        self.start_state = start_state
        self._state_index = start_state
        self._last = np.full(game.n_agents, -1.0)
        self._t = 0
        self._done = False
        self._succeeded = False

    @property
    def n_agents(self) -> int:
        return self.game.n_agents

    @property
    def n_actions(self) -> int:
        return self.game.n_actions_per_agent

    @property
    def state_dim(self) -> int:
        return self.game.n_states + self.game.n_agents

    @property
    def obs_dim(self) -> int:
        return self.game.n_states

    def _state_vec(self) -> np.ndarray:
        vec = np.zeros(self.state_dim)
        vec[self._state_index] = 1.0
        vec[self.game.n_states :] = self._last
        return vec

    def reset(self, seed: int | np.random.Generator = 0) -> tuple[np.ndarray, list[np.ndarray]]:
        del seed  # deterministic start state
        self._state_index = matrix_reset(self.game, self.start_state)
        self._last = np.full(self.game.n_agents, -1.0)
        self._t = 0
        self._done = False
        self._succeeded = False
        obs = self._state_vec()[: self.game.n_states]
        return self._state_vec(), [obs.copy() for _ in range(self.game.n_agents)]

    def step(self, joint_action) -> tuple[np.ndarray, list[np.ndarray], float, bool]:
        if self._done:
            from ..errors import StepAfterDone

            raise StepAfterDone("episode already finished")
        next_state, reward, done = matrix_step(self.game, self._state_index, joint_action)
        self._state_index = next_state
        self._last = np.asarray(joint_action, dtype=np.float64)
        self._t += 1
        if done:
            self._succeeded = True
        if self._t >= self.max_steps:
            done = True
        self._done = done
        obs = self._state_vec()[: self.game.n_states]
        return self._state_vec(), [obs.copy() for _ in range(self.game.n_agents)], reward, done

    def last_actions(self) -> np.ndarray:
        return self._last.copy()

    def is_success(self) -> bool:
        return self._succeeded
