"""Run configuration: a nested YAML file with env / mixer / train / synth
blocks. CLI flags override file values (flag > file > default)."""

from __future__ import annotations

import hashlib
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from .codegen import ProviderConfig, load_tfcaf
from .env import LbfConfig, LbfEnv, LbfStateSampler, MatrixEnv
from .mixers import MixerSpec, TfcafMixer, VdnSum, monotonic_init
from .oracle import matrix_game_from_json
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


def load_run_config(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        config = yaml.safe_load(fh)
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    config.setdefault("seed", 0)
    config.setdefault("output_dir", "runs/out")
    base = Path(path).parent
    _resolve_paths(config, base)
    _check_referenced_files(config, path)
    return config


_PATH_KEYS = {"artifact", "path", "transcript_path", "prompt_dir", "game"}


def _resolve_paths(block: dict, base: Path) -> None:
    for key, value in block.items():
        if isinstance(value, dict):
            _resolve_paths(value, base)
        elif key in _PATH_KEYS and isinstance(value, str) and not Path(value).is_absolute():
            block[key] = str((base / value).resolve())


def _check_referenced_files(config: dict, origin: str) -> None:
    mixer = config.get("mixer", {})
    if mixer.get("kind") == "tfcaf" and not Path(mixer.get("artifact", "")).exists():
        raise ConfigError(f"{origin}: mixer artifact {mixer.get('artifact')!r} does not exist")
    env = config.get("env", {})
    if env.get("kind") == "matrix" and "path" in env and not Path(env["path"]).exists():
        raise ConfigError(f"{origin}: matrix game file {env['path']!r} does not exist")
    synth = config.get("synth", {})
    provider = synth.get("provider", {})
    if provider.get("mode", "scripted") == "scripted" and "transcript_path" in provider:
        if not Path(provider["transcript_path"]).exists():
            raise ConfigError(
                f"{origin}: transcript {provider['transcript_path']!r} does not exist"
            )
    if "prompt_dir" in synth and not Path(synth["prompt_dir"]).is_dir():
        raise ConfigError(f"{origin}: prompt_dir {synth['prompt_dir']!r} does not exist")


def build_env(env_block: dict):
    """Fresh environment instance from the env block."""
    kind = env_block.get("kind", "lbf")
    if kind == "lbf":
        cfg = LbfConfig(
            grid_size=int(env_block.get("grid_size", 8)),
            n_agents=int(env_block.get("n_agents", 2)),
            n_foods=int(env_block.get("n_foods", 2)),
            coop=bool(env_block.get("coop", True)),
            sight_radius=int(env_block.get("sight_radius", 2)),
            max_steps=int(env_block.get("max_steps", 50)),
            level_max=int(env_block.get("level_max", 2)),
        )
        return LbfEnv(cfg)
    if kind == "matrix":
        game = matrix_game_from_json(env_block["path"])
        return MatrixEnv(game, max_steps=int(env_block.get("max_steps", 20)))
    raise ConfigError(f"unknown env kind {kind!r}")


def build_state_sampler(env_block: dict):
    kind = env_block.get("kind", "lbf")
    if kind == "lbf":
        return LbfStateSampler(build_env(env_block).config)
    raise ConfigError(f"no probe sampler for env kind {kind!r}")


def build_train_config(train_block: dict, seed: int) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    unknown = set(train_block) - known
    if unknown:
        raise ConfigError(f"unknown train keys: {sorted(unknown)}")
    return TrainConfig(**{**train_block, "seed": seed})


def build_mixer(mixer_block: dict, env, seed: int) -> MixerSpec:
    """Mixer from config; a synthesized program is cross-checked against the
    environment dimensions at load and refused on mismatch."""
    kind = mixer_block.get("kind", "vdn")
    if kind == "vdn":
        return VdnSum(env.n_agents)
    if kind == "tfcaf":
        program, source = load_tfcaf(mixer_block["artifact"], env.n_agents, env.state_dim)
        return TfcafMixer(program, source=source)
    if kind == "monotonic":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
        return monotonic_init(
            env.n_agents,
            env.state_dim,
            embed_dim=int(mixer_block.get("embed_dim", 32)),
            rng=rng,
            hidden=int(mixer_block.get("hyper_hidden", 64)),
        )
    raise ConfigError(f"unknown mixer kind {kind!r}")


def build_provider_config(provider_block: dict) -> ProviderConfig:
    known = {f.name for f in fields(ProviderConfig)}
    unknown = set(provider_block) - known
    if unknown:
        raise ConfigError(f"unknown provider keys: {sorted(unknown)}")
    return ProviderConfig(**provider_block)


def file_digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
