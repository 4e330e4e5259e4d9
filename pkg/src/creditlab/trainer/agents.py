"""Shared-parameter agent networks and action selection.

All agents share one MLP; the network input is the agent's observation with
its own last action appended (a cheap stand-in for action-observation
history) plus a one-hot agent id. The global state vector's trailing
n_agents entries are, by convention, the current last-action slots, so
encodings can be derived from stored (state, obs) pairs alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import MlpParams, mlp_forward_batch, mlp_init


@dataclass
class InputEncoder:
    n_agents: int
    obs_dim: int

    @property
    def input_dim(self) -> int:
        return self.obs_dim + 1 + self.n_agents

    def encode(self, obs_list, last_actions: np.ndarray) -> np.ndarray:
        """(n_agents, input_dim) block for one timestep."""
        n = self.n_agents
        out = np.zeros((n, self.input_dim))
        for i in range(n):
            out[i, : self.obs_dim] = obs_list[i]
            out[i, self.obs_dim] = last_actions[i]
            out[i, self.obs_dim + 1 + i] = 1.0
        return out

    def encode_batch(self, obs: np.ndarray, last_actions: np.ndarray) -> np.ndarray:
        """(B, n_agents, input_dim) from (B, n, obs_dim) and (B, n)."""
        B, n = obs.shape[0], self.n_agents
        out = np.zeros((B, n, self.input_dim))
        out[:, :, : self.obs_dim] = obs
        out[:, :, self.obs_dim] = last_actions
        out[:, :, self.obs_dim + 1 :] = np.eye(n)
        return out


def agent_net_init(
    encoder: InputEncoder, n_actions: int, rng: np.random.Generator, hidden: int = 64
) -> MlpParams:
    return mlp_init([encoder.input_dim, hidden, n_actions], rng)


def agent_q_values(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """(..., n_agents, input_dim) -> (..., n_agents, n_actions)."""
    flat = inputs.reshape(-1, inputs.shape[-1])
    q = mlp_forward_batch(params, flat)
    return q.reshape(*inputs.shape[:-1], q.shape[-1])


def epsilon_greedy(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Per-agent: uniform random action w.p. epsilon, else first-max argmax."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    q_values = np.asarray(q_values)
    n_agents, n_actions = q_values.shape
    actions = np.zeros(n_agents, dtype=np.int64)
    for i in range(n_agents):
        if rng.random() < epsilon:
            actions[i] = rng.integers(n_actions)
        else:
            actions[i] = int(np.argmax(q_values[i]))
    return actions
