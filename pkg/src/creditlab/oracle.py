"""Exact-decomposition study on enumerable games.

For a small cooperative game we compute exact joint Q-values, derive greedy
per-agent utilities by max-marginalization, and ask how well the team value
is reproduced by a linear combination of those utilities — once with weights
and bias free to vary per state, once with a single constant weight vector.
A gap between the two fits is the quantitative case for state-dependent
mixing weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .env.matrix import MatrixGame, oracle_joint_q

_CONST_TOL = 1e-12


@dataclass
class FitResult:
    per_state_weights: np.ndarray  # (n_states, n_agents)
    per_state_bias: np.ndarray  # (n_states,)
    residual_rms: float
    constant_weight_residual_rms: float
    constant_weights: np.ndarray  # (n_agents,)
    constant_bias: float
    degenerate_states: list[int] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_states)

    def to_dict(self) -> dict:
        return {
            "per_state_weights": self.per_state_weights.tolist(),
            "per_state_bias": self.per_state_bias.tolist(),
            "residual_rms": self.residual_rms,
            "constant_weight_residual_rms": self.constant_weight_residual_rms,
            "constant_weights": self.constant_weights.tolist(),
            "constant_bias": self.constant_bias,
            "degenerate_states": self.degenerate_states,
        }


def greedy_agent_utilities(game: MatrixGame, q_star: np.ndarray) -> np.ndarray:
    """Q_i(s, a_i) = max over the other agents' actions of Q*(s, a).

    Returns (n_states, n_agents, n_actions_per_agent).
    """
    joint = game.joint_actions()  # (J, n)
    utilities = np.full((game.n_states, game.n_agents, game.n_actions_per_agent), -np.inf)
    for i in range(game.n_agents):
        for a in range(game.n_actions_per_agent):
            mask = joint[:, i] == a
            utilities[:, i, a] = q_star[:, mask].max(axis=1)
    return utilities


def representability_fit(game: MatrixGame, gamma: float) -> FitResult:
    """Least-squares fit of Q* by w(s) . (Q_1..Q_n) + b(s), per state and
    with constant (state-independent) weights.

    Terminal states carry no decision for the mixer and are excluded from
    both fits (their rows stay zero in the per-state results).
    """
    if game.n_joint > 10**4:
        raise ValueError("game too large to enumerate (joint actions > 1e4 per state)")
    q_star = oracle_joint_q(game, gamma)
    utilities = greedy_agent_utilities(game, q_star)
    joint = game.joint_actions()
    active = np.nonzero(~game.terminal)[0]
    if len(active) == 0:
        raise ValueError("game has no non-terminal states to fit")

    n, J = game.n_agents, game.n_joint
    # features[s, j, i] = Q_i(s, joint[j, i])
    features = np.stack(
        [utilities[:, i, :][:, joint[:, i]] for i in range(n)], axis=2
    )  # (S, J, n)

    per_state_w = np.zeros((game.n_states, n))
    per_state_b = np.zeros(game.n_states)
    degenerate = []
    sq_sum = 0.0
    for s in active:
        X = np.concatenate([features[s], np.ones((J, 1))], axis=1)
        y = q_star[s]
        if np.ptp(features[s], axis=0).max() < _CONST_TOL:
            degenerate.append(int(s))
            per_state_b[s] = y.mean()
            resid = y - per_state_b[s]
        else:
            sol, *_ = np.linalg.lstsq(X, y, rcond=None)
            per_state_w[s] = sol[:n]
            per_state_b[s] = sol[n]
            resid = y - X @ sol
        sq_sum += float(resid @ resid)
    residual_rms = float(np.sqrt(sq_sum / (len(active) * J)))

    X_all = np.concatenate(
        [features[active].reshape(-1, n), np.ones((len(active) * J, 1))], axis=1
    )
    y_all = q_star[active].reshape(-1)
    sol_c, *_ = np.linalg.lstsq(X_all, y_all, rcond=None)
    resid_c = y_all - X_all @ sol_c
    constant_rms = float(np.sqrt(np.mean(resid_c**2)))

    return FitResult(
        per_state_weights=per_state_w,
        per_state_bias=per_state_b,
        residual_rms=residual_rms,
        constant_weight_residual_rms=constant_rms,
        constant_weights=sol_c[:n],
        constant_bias=float(sol_c[n]),
        degenerate_states=degenerate,
    )


# --- canonical study games ----------------------------------------------------


def specialist_game() -> MatrixGame:
    """Two active states, each rewarding a different agent's action.

    State 0 pays only by agent 0's choice, state 1 only by agent 1's, with
    different stakes; a single constant weight vector cannot absorb both,
    while per-state weights fit exactly.
    """
    g0 = np.array([0.0, 1.0])  # state 0: by agent 0's action
    g1 = np.array([0.0, 5.0])  # state 1: by agent 1's action
    payoff = np.zeros((3, 4))
    for j, (a0, a1) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        payoff[0, j] = g0[a0]
        payoff[1, j] = g1[a1]
    transition = np.full((3, 4), 2, dtype=np.int64)
    return MatrixGame(3, 2, 2, payoff, transition, np.array([False, False, True]))


def additive_game() -> MatrixGame:
    """Two active states with per-agent additive payoffs whose per-agent
    maxima match across states; both fits are exact here."""
    g_a = [np.array([0.0, 1.0]), np.array([1.0, 0.0])]
    g_b = [np.array([2.0, 0.0]), np.array([0.0, 2.0])]
    payoff = np.zeros((3, 4))
    for j, (a0, a1) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        payoff[0, j] = g_a[0][a0] + g_b[0][a1]
        payoff[1, j] = g_a[1][a0] + g_b[1][a1]
    transition = np.full((3, 4), 2, dtype=np.int64)
    return MatrixGame(3, 2, 2, payoff, transition, np.array([False, False, True]))


def matrix_game_from_json(path: str) -> MatrixGame:
    """Load a game description; payoff rows may be nested per-agent arrays
    (flattened row-major, agent 0 most significant)."""
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    n_states = int(spec["n_states"])
    n_agents = int(spec["n_agents"])
    n_actions = int(spec["n_actions_per_agent"])
    payoff = np.array([np.asarray(row, dtype=np.float64).reshape(-1) for row in spec["payoff"]])
    transition = np.array(
        [np.asarray(row, dtype=np.int64).reshape(-1) for row in spec["transition"]]
    )
    terminal = np.asarray(spec["terminal"], dtype=bool)
    return MatrixGame(n_states, n_agents, n_actions, payoff, transition, terminal)
