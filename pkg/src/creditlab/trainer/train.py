"""TD training through a pluggable mixing stage.

Centralized training, decentralized execution: agents act from local
observations; the TD loss is computed on the mixed team value using the
global state. Gradient flows into the shared agent network through the
mixer's exact dQ_tot/dQ_i; a synthesized mixer contributes no parameter
updates of its own, the monotonic baseline also trains its hypernetworks.

Runs are fully deterministic given the config seed: the seed spawns
independent streams for environment resets, action exploration, replay
sampling, and network init, so changing the mixer never perturbs the others.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from ..autodiff import AdaptiveState, MlpParams, mlp_backward_batch, sgd_adaptive_step
from ..errors import NonFiniteLoss
from ..mixers import MixerSpec, MonotonicHypernet, copy_mixer, mix_batch
from .agents import InputEncoder, agent_net_init, agent_q_values, epsilon_greedy
from .replay import Batch, ReplayBuffer, Transition


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    batch_size: int = 32
    buffer_capacity: int = 50_000
    lr: float = 5e-4
    target_update_interval: int = 200
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_anneal_steps: int = 50_000
    total_steps: int = 200_000
    eval_interval: int = 2_500
    eval_episodes: int = 20
    seed: int = 0
    warmup_steps: int = 1_000
    hidden_dim: int = 64
    reward_scale: float = 1.0  # return normalization, off by default
    stop_success_rate: float | None = None  # early stop once eval reaches this

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.epsilon_anneal_steps <= 0:
            raise ValueError("epsilon_anneal_steps must be positive")

    def epsilon_at(self, step: int) -> float:
        frac = min(1.0, step / self.epsilon_anneal_steps)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass
class MetricsRow:
    env_step: int
    loss: float | None
    epsilon: float
    eval_mean_return: float | None
    eval_success_rate: float | None


CSV_HEADER = "env_step,loss,epsilon,eval_mean_return,eval_success_rate"


@dataclass
class MetricsLog:
    rows: list[MetricsRow] = field(default_factory=list)

    def append(self, row: MetricsRow) -> None:
        if self.rows and row.env_step <= self.rows[-1].env_step:
            raise ValueError("env_step must be strictly increasing")
        self.rows.append(row)

    def to_csv(self) -> str:
        def cell(v: float | None) -> str:
            return "-" if v is None else repr(v)

        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.env_step},{cell(r.loss)},{repr(r.epsilon)},"
                f"{cell(r.eval_mean_return)},{cell(r.eval_success_rate)}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())

    def eval_rows(self) -> list[MetricsRow]:
        return [r for r in self.rows if r.eval_mean_return is not None]

    def steps_to_success_rate(self, threshold: float) -> int | None:
        for r in self.eval_rows():
            if r.eval_success_rate is not None and r.eval_success_rate >= threshold:
                return r.env_step
        return None


def td_targets(
    batch: Batch,
    target_agent_params: MlpParams,
    mixer: MixerSpec,
    gamma: float,
    encoder: InputEncoder,
) -> np.ndarray:
    """Bellman targets y = r + gamma * Q_tot(s', per-agent greedy maxima).

    The joint maximization is realized as the mixer applied to per-agent
    maxima of the target network; exact whenever the mixer satisfies the
    individual-global-max property.
    """
    n = encoder.n_agents
    next_inputs = encoder.encode_batch(batch.next_obs, batch.next_states[:, -n:])
    next_q = agent_q_values(target_agent_params, next_inputs)  # (B, n, A)
    per_agent_max = next_q.max(axis=2)  # (B, n)
    mixed = mix_batch(mixer, per_agent_max, batch.next_states).q_tot
    return batch.rewards + gamma * np.where(batch.dones, 0.0, mixed)


def _batch_digest(batch: Batch) -> str:
    return hashlib.sha256(np.ascontiguousarray(batch.states).tobytes()).hexdigest()[:12]


@dataclass
class TrainState:
    """Everything train_step mutates: agent net, its optimizer slot, frozen
    targets (agent net and mixer), and per-hypernet optimizer slots."""

    agent_params: MlpParams
    target_params: MlpParams
    target_mixer: MixerSpec
    agent_opt: AdaptiveState
    mixer_opts: dict[str, AdaptiveState] = field(default_factory=dict)


def td_loss_and_grads(
    batch: Batch,
    agent_params: MlpParams,
    target_params: MlpParams,
    mixer: MixerSpec,
    gamma: float,
    encoder: InputEncoder,
    target_mixer: MixerSpec | None = None,
) -> tuple[float, MlpParams, dict[str, MlpParams]]:
    """TD loss on a batch plus exact gradients, no parameter updates.

    Returns (loss, agent-network grads, mixer hypernet grads — empty for the
    zero-parameter mixers). Targets come from the frozen target net and the
    frozen target mixer (for the fixed mixers the live one is already
    frozen, so it doubles as its own target).
    """
    n = encoder.n_agents
    B = len(batch)
    y = td_targets(batch, target_params, target_mixer if target_mixer is not None else mixer, gamma, encoder)

    inputs = encoder.encode_batch(batch.obs, batch.states[:, -n:])  # (B, n, I)
    flat_inputs = inputs.reshape(B * n, -1)
    q_all = agent_q_values(agent_params, inputs)  # (B, n, A)
    chosen = np.take_along_axis(q_all, batch.actions[:, :, None], axis=2)[:, :, 0]  # (B, n)

    out = mix_batch(mixer, chosen, batch.states)
    diff = out.q_tot - y
    loss = float(np.mean(diff**2))
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"non-finite TD loss on batch {_batch_digest(batch)}")

    d_qtot = 2.0 * diff / B  # (B,)
    d_chosen = d_qtot[:, None] * out.dq  # (B, n)
    upstream = np.zeros_like(q_all)
    np.put_along_axis(upstream, batch.actions[:, :, None], d_chosen[:, :, None], axis=2)
    agent_grads, _ = mlp_backward_batch(agent_params, flat_inputs, upstream.reshape(B * n, -1))

    mixer_grads: dict[str, MlpParams] = {}
    if out.param_grads is not None:
        mixer_grads = out.param_grads(d_qtot)
    return loss, agent_grads, mixer_grads


def train_step(
    batch: Batch,
    ts: TrainState,
    mixer: MixerSpec,
    config: TrainConfig,
    encoder: InputEncoder,
) -> float:
    """One TD step on a sampled batch; returns the scalar loss."""
    loss, agent_grads, mixer_grads = td_loss_and_grads(
        batch,
        ts.agent_params,
        ts.target_params,
        mixer,
        config.gamma,
        encoder,
        target_mixer=ts.target_mixer,
    )
    sgd_adaptive_step(ts.agent_params, agent_grads, ts.agent_opt, config.lr)
    if isinstance(mixer, MonotonicHypernet):
        for name, net in mixer.nets().items():
            sgd_adaptive_step(net, mixer_grads[name], ts.mixer_opts[name], config.lr)
    return loss


def _greedy_actions(params: MlpParams, encoder: InputEncoder, obs_list, last_actions) -> np.ndarray:
    q = agent_q_values(params, encoder.encode(obs_list, last_actions))
    return q.argmax(axis=1)


def rollout_policy(
    policy_fn, env, episodes: int, seed: int | np.random.SeedSequence
) -> tuple[float, float]:
    """Run greedy episodes with policy_fn(obs_list, last_actions) -> actions."""
    rng = np.random.default_rng(seed)
    returns = np.zeros(episodes)
    successes = 0
    for k in range(episodes):
        state, obs = env.reset(rng)
        done = False
        while not done:
            actions = policy_fn(obs, state[-env.n_agents :])
            state, obs, reward, done = env.step(actions)
            returns[k] += reward
        if env.is_success():
            successes += 1
    return float(returns.mean()), successes / episodes


def evaluate_policy(
    agent_params: MlpParams, env, episodes: int, seed: int | np.random.SeedSequence
) -> tuple[float, float]:
    """Greedy evaluation: (mean episode return, success rate)."""
    encoder = InputEncoder(env.n_agents, env.obs_dim)

    def policy(obs_list, last_actions):
        return _greedy_actions(agent_params, encoder, obs_list, last_actions)

    return rollout_policy(policy, env, episodes, seed)


def _eval_seed(seed: int, env_step: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0x5EED, env_step])


def run_training(env, eval_env, mixer: MixerSpec, config: TrainConfig):
    """Full training loop; returns (MetricsLog, TrainState).

    ``env`` and ``eval_env`` must be distinct instances: evaluation runs
    mid-training on its own seeds without disturbing the training episode.
    """
    ss = np.random.SeedSequence(config.seed)
    env_ss, action_ss, buffer_ss, init_ss = ss.spawn(4)
    env_rng = np.random.default_rng(env_ss)
    action_rng = np.random.default_rng(action_ss)
    init_rng = np.random.default_rng(init_ss)

    encoder = InputEncoder(env.n_agents, env.obs_dim)
    agent_params = agent_net_init(encoder, env.n_actions, init_rng, hidden=config.hidden_dim)
    ts = TrainState(
        agent_params=agent_params,
        target_params=agent_params.copy(),
        target_mixer=copy_mixer(mixer),
        agent_opt=AdaptiveState.like(agent_params),
    )
    if isinstance(mixer, MonotonicHypernet):
        ts.mixer_opts = {name: AdaptiveState.like(net) for name, net in mixer.nets().items()}

    buffer = ReplayBuffer(
        config.buffer_capacity,
        env.n_agents,
        env.state_dim,
        env.obs_dim,
        seed=int(buffer_ss.generate_state(1)[0]),
    )

    log = MetricsLog()
    state, obs = env.reset(env_rng)
    for step in range(1, config.total_steps + 1):
        epsilon = config.epsilon_at(step)
        q = agent_q_values(ts.agent_params, encoder.encode(obs, state[-env.n_agents :]))
        actions = epsilon_greedy(q, epsilon, action_rng)
        next_state, next_obs, reward, done = env.step(actions)
        buffer.push(
            Transition(state, obs, actions, reward * config.reward_scale, next_state, next_obs, done)
        )
        if done:
            state, obs = env.reset(env_rng)
        else:
            state, obs = next_state, next_obs

        loss: float | None = None
        if step > config.warmup_steps and buffer.size >= config.batch_size:
            loss = train_step(buffer.sample(config.batch_size), ts, mixer, config, encoder)
        if step % config.target_update_interval == 0:
            ts.target_params = ts.agent_params.copy()
            ts.target_mixer = copy_mixer(mixer)

        eval_return: float | None = None
        eval_success: float | None = None
        if step % config.eval_interval == 0:
            eval_return, eval_success = evaluate_policy(
                ts.agent_params,
                eval_env,
                config.eval_episodes,
                seed=_eval_seed(config.seed, step),
            )

        if loss is not None or eval_return is not None:
            log.append(MetricsRow(step, loss, epsilon, eval_return, eval_success))
        if (
            config.stop_success_rate is not None
            and eval_success is not None
            and eval_success >= config.stop_success_rate
        ):
            break
    return log, ts
