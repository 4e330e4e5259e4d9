"""Probe harness: run a validated program over sampled states before use.

A probe evaluates the program on states drawn from an environment's
reset/step distribution plus fixed boundary states, and reports failures and
weight statistics as data. A candidate with zero probe failures has executed
finitely on every probed state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .ast import TfcafProgram
from .interp import eval_collect


class StateSampler(Protocol):
    """Source of plausible global states for probing."""

    def sample(self, rng: np.random.Generator) -> np.ndarray: ...

    def boundary_states(self) -> list[np.ndarray]: ...


@dataclass
class ArraySampler:
    """Sampler over a fixed pool of states (tests, replay snapshots)."""

    pool: np.ndarray  # (N, state_dim)
    extra_boundaries: list[np.ndarray] = field(default_factory=list)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.pool[rng.integers(len(self.pool))]

    def boundary_states(self) -> list[np.ndarray]:
        dim = self.pool.shape[1]
        return [np.zeros(dim), -np.ones(dim)] + list(self.extra_boundaries)


@dataclass
class ProbeFailure:
    state_digest: str
    kind: str
    message: str


@dataclass
class ProbeReport:
    n_probes: int
    failures: list[ProbeFailure]
    weight_min: list[float]
    weight_max: list[float]
    weight_mean: list[float]
    negative_weight_seen: bool

    @property
    def ok(self) -> bool:
        return not self.failures

    def stats_text(self) -> str:
        if not self.weight_min:
            return "no successful evaluations"
        per_agent = ", ".join(
            f"agent {i}: min={lo:.4g} max={hi:.4g} mean={mu:.4g}"
            for i, (lo, hi, mu) in enumerate(zip(self.weight_min, self.weight_max, self.weight_mean))
        )
        return f"weights over {self.n_probes} probes: {per_agent}"


def probe(
    program: TfcafProgram,
    state_sampler: StateSampler,
    n_probes: int,
    seed: int,
) -> ProbeReport:
    """Evaluate ``program`` on ``n_probes`` sampled states plus boundaries."""
    rng = np.random.default_rng(seed)
    states = state_sampler.boundary_states()
    states += [state_sampler.sample(rng) for _ in range(n_probes)]
    batch = np.stack([np.asarray(s, dtype=np.float64) for s in states])

    weights, _, lane_errors = eval_collect(program, batch)
    failures = [
        ProbeFailure(err.state_digest, err.kind, str(err))
        for _, err in sorted(lane_errors.items())
    ]

    ok_mask = np.ones(len(batch), dtype=bool)
    for lane in lane_errors:
        ok_mask[lane] = False
    if ok_mask.any():
        good = weights[ok_mask]
        weight_min = good.min(axis=0).tolist()
        weight_max = good.max(axis=0).tolist()
        weight_mean = good.mean(axis=0).tolist()
        negative = bool((good < 0).any())
    else:
        weight_min, weight_max, weight_mean = [], [], []
        negative = False

    return ProbeReport(
        n_probes=len(batch),
        failures=failures,
        weight_min=weight_min,
        weight_max=weight_max,
        weight_mean=weight_mean,
        negative_weight_seen=negative,
    )
