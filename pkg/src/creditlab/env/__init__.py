"""Desk-scale cooperative environments: a level-based foraging gridworld and
exactly-solvable matrix games."""

from .lbf import LbfConfig, LbfEnv, LbfState, LbfStateSampler, N_ACTIONS
from .matrix import MatrixEnv, MatrixGame, matrix_reset, matrix_step, oracle_joint_q

__all__ = [
    "LbfConfig",
    "LbfEnv",
    "LbfState",
    "LbfStateSampler",
    "MatrixEnv",
    "MatrixGame",
    "N_ACTIONS",
    "matrix_reset",
    "matrix_step",
    "oracle_joint_q",
]
