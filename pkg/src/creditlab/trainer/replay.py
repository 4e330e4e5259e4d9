"""Transition record and a fixed-capacity uniform replay buffer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: np.ndarray
    obs: list[np.ndarray]  # one vector per agent
    actions: np.ndarray  # (n_agents,) int
    reward: float
    next_state: np.ndarray
    next_obs: list[np.ndarray]
    done: bool


@dataclass
class Batch:
    states: np.ndarray  # (B, state_dim)
    obs: np.ndarray  # (B, n, obs_dim)
    actions: np.ndarray  # (B, n) int
    rewards: np.ndarray  # (B,)
    next_states: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray  # (B,) bool

    def __len__(self) -> int:
        return len(self.rewards)


class ReplayBuffer:
    """Ring buffer with FIFO eviction and seeded uniform sampling."""

    def __init__(self, capacity: int, n_agents: int, state_dim: int, obs_dim: int, seed: int):
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._obs = np.zeros((capacity, n_agents, obs_dim))
        self._actions = np.zeros((capacity, n_agents), dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._next_obs = np.zeros((capacity, n_agents, obs_dim))
        self._dones = np.zeros(capacity, dtype=bool)
        self._pos = 0
        self._size = 0
        self._rng = np.random.default_rng(seed)

    @property
    def size(self) -> int:
        return self._size

    def push(self, tr: Transition) -> None:
        i = self._pos
        self._states[i] = tr.state
        self._obs[i] = np.stack(tr.obs)
        self._actions[i] = tr.actions
        self._rewards[i] = tr.reward
        self._next_states[i] = tr.next_state
        self._next_obs[i] = np.stack(tr.next_obs)
        self._dones[i] = tr.done
        self._pos = (self._pos + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size: int) -> Batch:
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} < batch size {batch_size}")
        idx = self._rng.integers(0, self._size, size=batch_size)
        return Batch(
            states=self._states[idx],
            obs=self._obs[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
            next_obs=self._next_obs[idx],
            dones=self._dones[idx],
        )
