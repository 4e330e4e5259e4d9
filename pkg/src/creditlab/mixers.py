"""Mixing stage: combine per-agent Q-values into a team value.

Three interchangeable mixers sit behind one interface:

* ``VdnSum`` — unweighted sum, zero parameters.
* ``MonotonicHypernet`` — the learned reference baseline: state-conditioned
  hypernetworks emit nonnegative mixing weights (absolute value on the way
  out), so the team value is monotone in every agent's Q.
* ``TfcafMixer`` — a synthesized zero-parameter program producing
  state-dependent weights and bias; weights may take arbitrary sign.

``mix`` returns the team value, its exact gradient w.r.t. the agent Q-vector
(this is what routes credit during TD training), and, for the learned mixer,
gradients w.r.t. its own parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .autodiff import MlpParams, mlp_backward_batch, mlp_forward_batch, mlp_init, param_count
from .dsl import TfcafProgram, eval_weights_bias_batch
from .errors import DimensionMismatch

HYPER_HIDDEN = 64


@dataclass
class VdnSum:
    n_agents: int


@dataclass
class MonotonicHypernet:
    n_agents: int
    state_dim: int
    embed_dim: int
    hyper_w1: MlpParams  # state -> n_agents * embed_dim (abs applied at use)
    hyper_b1: MlpParams  # state -> embed_dim
    hyper_w2: MlpParams  # state -> embed_dim (abs applied at use)
    hyper_b2: MlpParams  # state -> 1

    def nets(self) -> dict[str, MlpParams]:
        return {
            "hyper_w1": self.hyper_w1,
            "hyper_b1": self.hyper_b1,
            "hyper_w2": self.hyper_w2,
            "hyper_b2": self.hyper_b2,
        }


@dataclass
class TfcafMixer:
    program: TfcafProgram
    source: str = ""

    def __post_init__(self) -> None:
        if self.program.n_agents is None:
            raise ValueError("program must be validated before it can mix")

    @property
    def n_agents(self) -> int:
        return self.program.n_agents


MixerSpec = VdnSum | MonotonicHypernet | TfcafMixer


def monotonic_init(
    n_agents: int,
    state_dim: int,
    embed_dim: int,
    rng: np.random.Generator,
    hidden: int = HYPER_HIDDEN,
) -> MonotonicHypernet:
    return MonotonicHypernet(
        n_agents=n_agents,
        state_dim=state_dim,
        embed_dim=embed_dim,
        hyper_w1=mlp_init([state_dim, hidden, n_agents * embed_dim], rng),
        hyper_b1=mlp_init([state_dim, hidden, embed_dim], rng),
        hyper_w2=mlp_init([state_dim, hidden, embed_dim], rng),
        hyper_b2=mlp_init([state_dim, hidden, 1], rng),
    )


@dataclass
class MixOutput:
    q_tot: float
    dq: np.ndarray  # (n_agents,) = d q_tot / d q
    state_param_grads: dict[str, MlpParams] = field(default_factory=dict)


@dataclass
class BatchMix:
    """Batched mixer evaluation with a deferred parameter-gradient hook."""

    q_tot: np.ndarray  # (B,)
    dq: np.ndarray  # (B, n_agents)
    param_grads: "callable[[np.ndarray], dict[str, MlpParams]] | None" = None


def mix_batch(spec: MixerSpec, q: np.ndarray, states: np.ndarray) -> BatchMix:
    """Mix a (B, n) block of agent Q-values with a (B, state_dim) state block."""
    q = np.asarray(q, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    if q.ndim != 2 or states.ndim != 2 or q.shape[0] != states.shape[0]:
        raise DimensionMismatch(f"batch shapes {q.shape} and {states.shape} do not align")

    if isinstance(spec, VdnSum):
        if q.shape[1] != spec.n_agents:
            raise DimensionMismatch(f"expected {spec.n_agents} agent values, got {q.shape[1]}")
        return BatchMix(q_tot=q.sum(axis=1), dq=np.ones_like(q))

    if isinstance(spec, TfcafMixer):
        if q.shape[1] != spec.n_agents:
            raise DimensionMismatch(f"expected {spec.n_agents} agent values, got {q.shape[1]}")
        weights, bias = eval_weights_bias_batch(spec.program, states)
        return BatchMix(q_tot=(weights * q).sum(axis=1) + bias, dq=weights)

    if isinstance(spec, MonotonicHypernet):
        n, e = spec.n_agents, spec.embed_dim
        if q.shape[1] != n:
            raise DimensionMismatch(f"expected {n} agent values, got {q.shape[1]}")
        if states.shape[1] != spec.state_dim:
            raise DimensionMismatch(f"expected state_dim {spec.state_dim}, got {states.shape[1]}")
        w1_raw = mlp_forward_batch(spec.hyper_w1, states)  # (B, n*e)
        w1 = np.abs(w1_raw).reshape(-1, n, e)
        b1 = mlp_forward_batch(spec.hyper_b1, states)  # (B, e)
        w2_raw = mlp_forward_batch(spec.hyper_w2, states)  # (B, e)
        w2 = np.abs(w2_raw)
        b2 = mlp_forward_batch(spec.hyper_b2, states)[:, 0]  # (B,)

        pre = np.einsum("bn,bne->be", q, w1) + b1
        hidden = np.maximum(pre, 0.0)
        act = (pre > 0.0).astype(np.float64)
        q_tot = (hidden * w2).sum(axis=1) + b2
        dq = np.einsum("bne,be->bn", w1, act * w2)

        def param_grads(upstream: np.ndarray) -> dict[str, MlpParams]:
            u = np.asarray(upstream, dtype=np.float64)[:, None]  # (B, 1)
            g_w1 = (u * act * w2)[:, None, :] * q[:, :, None] * np.sign(w1_raw).reshape(-1, n, e)
            g_b1 = u * act * w2
            g_w2 = u * hidden * np.sign(w2_raw)
            g_b2 = u
            return {
                "hyper_w1": mlp_backward_batch(spec.hyper_w1, states, g_w1.reshape(len(u), n * e))[0],
                "hyper_b1": mlp_backward_batch(spec.hyper_b1, states, g_b1)[0],
                "hyper_w2": mlp_backward_batch(spec.hyper_w2, states, g_w2)[0],
                "hyper_b2": mlp_backward_batch(spec.hyper_b2, states, g_b2)[0],
            }

        return BatchMix(q_tot=q_tot, dq=dq, param_grads=param_grads)

    raise TypeError(f"unknown mixer spec {type(spec).__name__}")


def mix(spec: MixerSpec, q: np.ndarray, state: np.ndarray) -> MixOutput:
    """Mix one agent Q-vector with one global state."""
    q = np.asarray(q, dtype=np.float64)
    state = np.asarray(state, dtype=np.float64)
    if q.ndim != 1 or state.ndim != 1:
        raise DimensionMismatch("mix expects vectors; use mix_batch for batches")
    out = mix_batch(spec, q[None, :], state[None, :])
    grads: dict[str, MlpParams] = {}
    if out.param_grads is not None:
        grads = out.param_grads(np.ones(1))
    return MixOutput(q_tot=float(out.q_tot[0]), dq=out.dq[0], state_param_grads=grads)


def copy_mixer(spec: MixerSpec) -> MixerSpec:
    """Snapshot for Bellman targets: the learned mixer is deep-copied, the
    parameter-free mixers are immutable and shared."""
    if isinstance(spec, MonotonicHypernet):
        return MonotonicHypernet(
            n_agents=spec.n_agents,
            state_dim=spec.state_dim,
            embed_dim=spec.embed_dim,
            hyper_w1=spec.hyper_w1.copy(),
            hyper_b1=spec.hyper_b1.copy(),
            hyper_w2=spec.hyper_w2.copy(),
            hyper_b2=spec.hyper_b2.copy(),
        )
    return spec


def learnable_param_count(spec: MixerSpec) -> int:
    """Trainable parameters introduced by the mixing stage itself."""
    if isinstance(spec, (VdnSum, TfcafMixer)):
        return 0
    if isinstance(spec, MonotonicHypernet):
        return sum(param_count(p) for p in spec.nets().values())
    raise TypeError(f"unknown mixer spec {type(spec).__name__}")


class JointSpaceTooLarge(ValueError):
    pass


def igm_check(spec: MixerSpec, state: np.ndarray, per_agent_q_tables: list[np.ndarray]) -> bool:
    """Brute-force individual-global-max test.

    True iff the joint action maximizing the mixed team value equals the
    tuple of per-agent argmaxes. Ties resolve to the lowest index on both
    sides (joint actions enumerate row-major, agent 0 most significant).
    """
    tables = [np.asarray(t, dtype=np.float64) for t in per_agent_q_tables]
    n_joint = 1
    for t in tables:
        n_joint *= len(t)
    if n_joint > 10**6:
        raise JointSpaceTooLarge(f"joint action space of {n_joint} exceeds 1e6")

    combos = np.array(list(itertools.product(*[range(len(t)) for t in tables])))
    q_rows = np.stack([t[combos[:, i]] for i, t in enumerate(tables)], axis=1)
    states = np.broadcast_to(state, (len(combos), len(state)))
    q_tot = mix_batch(spec, q_rows, np.ascontiguousarray(states)).q_tot

    joint_best = combos[int(np.argmax(q_tot))]
    individual_best = np.array([int(np.argmax(t)) for t in tables])
    return bool((joint_best == individual_best).all())
