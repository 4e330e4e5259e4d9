"""Value-decomposition TD training with pluggable mixers."""

from .agents import InputEncoder, agent_net_init, agent_q_values, epsilon_greedy
from .replay import Batch, ReplayBuffer, Transition
from .train import (
    CSV_HEADER,
    MetricsLog,
    MetricsRow,
    TrainConfig,
    TrainState,
    evaluate_policy,
    rollout_policy,
    run_training,
    td_loss_and_grads,
    td_targets,
    train_step,
)

__all__ = [
    "Batch",
    "CSV_HEADER",
    "InputEncoder",
    "MetricsLog",
    "MetricsRow",
    "ReplayBuffer",
    "TrainConfig",
    "TrainState",
    "Transition",
    "agent_net_init",
    "agent_q_values",
    "epsilon_greedy",
    "evaluate_policy",
    "rollout_policy",
    "run_training",
    "td_loss_and_grads",
    "td_targets",
    "train_step",
]
