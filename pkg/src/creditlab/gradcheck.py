"""Finite-difference verification of every gradient path.

Two layers of checking: plain agent-network gradients against central
differences, and the full TD-loss gradient (through the mixer's dQ_tot/dQ_i
and, for the learned mixer, its hypernetworks) on synthetic batches. Both
are used by the test suite and the ``gradcheck`` CLI subcommand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import MlpParams, finite_diff_check, mlp_forward_batch, mlp_init
from .dsl import parse, validate
from .mixers import MixerSpec, MonotonicHypernet, TfcafMixer, VdnSum, copy_mixer, monotonic_init
from .trainer.agents import InputEncoder, agent_q_values
from .trainer.replay import Batch
from .trainer.train import td_loss_and_grads

N_AGENTS = 2
OBS_DIM = 5
STATE_DIM = 7  # 5 informative slots + trailing n_agents last-action slots
N_ACTIONS = 4


def mlp_gradcheck(seed: int, dims: tuple[int, ...] = (14, 64, 6), epsilon: float = 1e-5) -> float:
    """Max relative error for one random net/input pair."""
    rng = np.random.default_rng(seed)
    params = mlp_init(list(dims), rng)
    x = rng.normal(size=dims[0])
    return finite_diff_check(params, x, epsilon, seed=seed + 1)


def _synthetic_batch(rng: np.random.Generator, batch_size: int = 4) -> Batch:
    states = rng.normal(size=(batch_size, STATE_DIM))
    states[:, -N_AGENTS:] = rng.integers(-1, N_ACTIONS, size=(batch_size, N_AGENTS))
    next_states = rng.normal(size=(batch_size, STATE_DIM))
    actions = rng.integers(0, N_ACTIONS, size=(batch_size, N_AGENTS))
    next_states[:, -N_AGENTS:] = actions
    return Batch(
        states=states,
        obs=rng.normal(size=(batch_size, N_AGENTS, OBS_DIM)),
        actions=actions,
        rewards=rng.normal(size=batch_size),
        next_states=next_states,
        next_obs=rng.normal(size=(batch_size, N_AGENTS, OBS_DIM)),
        dones=rng.random(batch_size) < 0.25,
    )


def _make_mixer(kind: str, rng: np.random.Generator) -> MixerSpec:
    if kind == "vdn":
        return VdnSum(N_AGENTS)
    if kind == "tfcaf":
        program = parse("weights: softmax([s[0] - s[2], s[1] * 0.5])\nbias: s[3] * 0.1")
        assert validate(program, N_AGENTS, STATE_DIM).ok
        return TfcafMixer(program)
    if kind == "monotonic":
        return monotonic_init(N_AGENTS, STATE_DIM, embed_dim=4, rng=rng, hidden=8)
    raise ValueError(f"unknown mixer kind {kind!r}")


@dataclass
class GradCheckResult:
    kind: str
    seed: int
    max_rel_error: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < 1e-4


_KINK_MARGIN = 5e-4


def _kink_margin(agent_params: MlpParams, mixer: MixerSpec, batch: Batch, encoder: InputEncoder) -> float:
    """Smallest |distance| of any relu/abs argument from its kink.

    Central differences are only meaningful where the loss is differentiable
    within the perturbation window, so check instances whose intermediates
    hug a kink are rejected and redrawn.
    """
    inputs = encoder.encode_batch(batch.obs, batch.states[:, -N_AGENTS:])
    flat = inputs.reshape(-1, inputs.shape[-1])
    w0, b0 = agent_params.layers[0]
    margin = float(np.abs(flat @ w0.data.T + b0).min())
    if isinstance(mixer, MonotonicHypernet):
        n, e = mixer.n_agents, mixer.embed_dim
        w1_raw = mlp_forward_batch(mixer.hyper_w1, batch.states)
        w2_raw = mlp_forward_batch(mixer.hyper_w2, batch.states)
        b1 = mlp_forward_batch(mixer.hyper_b1, batch.states)
        q_all = agent_q_values(agent_params, inputs)
        chosen = np.take_along_axis(q_all, batch.actions[:, :, None], axis=2)[:, :, 0]
        pre = np.einsum("bn,bne->be", chosen, np.abs(w1_raw).reshape(-1, n, e)) + b1
        margin = min(margin, float(np.abs(w1_raw).min()), float(np.abs(w2_raw).min()), float(np.abs(pre).min()))
    return margin


def td_gradcheck(
    seed: int,
    mixer_kind: str = "vdn",
    epsilon: float = 1e-5,
    inject_fault: bool = False,
) -> GradCheckResult:
    """Compare analytic TD-loss gradients with central differences.

    Checks every agent-network parameter and, for the learned mixer, every
    hypernetwork parameter. ``inject_fault`` doubles one analytic gradient
    entry to prove the check catches corruption.
    """
    encoder = InputEncoder(N_AGENTS, OBS_DIM)
    gamma = 0.95
    for attempt in range(50):
        rng = np.random.default_rng([seed, attempt])
        agent_params = mlp_init([encoder.input_dim, 16, N_ACTIONS], rng)
        target_params = mlp_init([encoder.input_dim, 16, N_ACTIONS], rng)
        mixer = _make_mixer(mixer_kind, rng)
        batch = _synthetic_batch(rng)
        if _kink_margin(agent_params, mixer, batch, encoder) <= _KINK_MARGIN:
            continue
        target_mixer = copy_mixer(mixer)
        loss0, agent_grads, mixer_grads = td_loss_and_grads(
            batch, agent_params, target_params, mixer, gamma, encoder, target_mixer=target_mixer
        )
        nets: list[tuple[MlpParams, MlpParams]] = [(agent_params, agent_grads)]
        if isinstance(mixer, MonotonicHypernet):
            nets.extend((net, mixer_grads[name]) for name, net in mixer.nets().items())
        # The difference quotient resolves gradients down to roughly
        # eps_machine * |loss| / (2 * epsilon); nonzero entries near that
        # floor make the comparison vacuous, so redraw the instance.
        flat = np.abs(np.concatenate([g.flat() for _, g in nets]))
        nonzero = flat[flat > 0]
        noise_floor = np.finfo(np.float64).eps * abs(loss0) / (2 * epsilon)
        if nonzero.size == 0 or nonzero.min() > 1e4 * noise_floor:
            break

    def loss_fn() -> float:
        return td_loss_and_grads(
            batch, agent_params, target_params, mixer, gamma, encoder, target_mixer=target_mixer
        )[0]

    analytic = np.concatenate([g.flat() for _, g in nets])
    if inject_fault:
        worst = int(np.argmax(np.abs(analytic)))
        analytic[worst] *= 2.0

    numeric = np.zeros_like(analytic)
    pos = 0
    for params, _ in nets:
        flat0 = params.flat()
        for i in range(len(flat0)):
            bumped = flat0.copy()
            bumped[i] = flat0[i] + epsilon
            params.assign_flat(bumped)
            f_plus = loss_fn()
            bumped[i] = flat0[i] - epsilon
            params.assign_flat(bumped)
            f_minus = loss_fn()
            numeric[pos + i] = (f_plus - f_minus) / (2 * epsilon)
        params.assign_flat(flat0)
        pos += len(flat0)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    err = float(np.max(np.abs(analytic - numeric) / denom))
    return GradCheckResult(kind=mixer_kind, seed=seed, max_rel_error=err)
