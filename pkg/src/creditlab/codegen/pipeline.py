"""Coder-evaluator synthesis pipeline.

One writer role drafts K candidate weight programs per round; candidates that
fail to parse, validate, or probe are sent back for repair with the exact
error text; a second role picks among the survivors; the pick seeds the next
round as a reference, for T rounds. The result is an artifact carrying the
final program plus the full provenance of every round.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dsl import (
    GRAMMAR_REFERENCE,
    DslError,
    ProbeReport,
    StateSampler,
    TfcafProgram,
    ValidationReport,
    parse,
    pretty_print,
    probe,
    validate,
)

logger = logging.getLogger(__name__)


class NoCodeBlock(ValueError):
    pass


class MultipleCodeBlocks(ValueError):
    pass


class MalformedSelection(ValueError):
    pass


class RepairBudgetExhausted(RuntimeError):
    def __init__(self, record: "CandidateRecord"):
        self.record = record
        super().__init__(
            f"candidate {record.round}/{record.index} still failing after "
            f"{len(record.repair_history)} repair attempts: {record.error_text}"
        )


class NoViableCandidate(RuntimeError):
    pass


@dataclass
class PromptSet:
    coder_role: str
    evaluator_role: str
    task: str

    def __post_init__(self) -> None:
        if not (self.coder_role.strip() and self.evaluator_role.strip() and self.task.strip()):
            raise ValueError("prompt texts must be non-empty")


def load_prompts(prompt_dir: str, task_name: str) -> PromptSet:
    base = Path(prompt_dir)
    return PromptSet(
        coder_role=(base / "coder_role.txt").read_text(encoding="utf-8"),
        evaluator_role=(base / "evaluator_role.txt").read_text(encoding="utf-8"),
        task=(base / f"task_{task_name}.txt").read_text(encoding="utf-8"),
    )


@dataclass
class EnvBinding:
    """Dimensions and probe-state source the candidates are checked against."""

    n_agents: int
    state_dim: int
    sampler: StateSampler
    n_probes: int = 300


@dataclass
class CandidateRecord:
    round: int
    index: int
    raw_response: str
    source: str | None = None
    validation: ValidationReport | None = None
    probe: ProbeReport | None = None
    error_text: str | None = None
    repair_history: list[tuple[str, str]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return (
            self.error_text is None
            and self.validation is not None
            and self.validation.ok
            and self.probe is not None
            and self.probe.ok
        )


@dataclass
class SynthesisArtifact:
    final_source: str  # canonical program text
    digest: str  # sha256 hex of final_source bytes
    chosen_indices: list[int]  # per round: selected candidate's index
    records: list[CandidateRecord]
    config: dict
    provider_calls: int
    evaluator_calls: int
    warnings: list[str] = field(default_factory=list)


def assemble_coder_messages(
    prompts: PromptSet,
    previous_choice: str | None = None,
    error_feedback: str | None = None,
    nonce: str | None = None,
) -> list[dict[str, str]]:
    """System message carries the role; the user message carries the task,
    the language reference, the previous round's pick (as a reference), and
    any verbatim error feedback."""
    user = prompts.task + "\n\n" + GRAMMAR_REFERENCE
    if previous_choice is not None:
        user += (
            "\n\nReference: the currently selected program from the previous round. "
            "Improve on it or propose a better alternative.\n"
            "```tfcaf\n" + previous_choice.rstrip("\n") + "\n```"
        )
    if error_feedback is not None:
        user += (
            "\n\nYour previous attempt failed. Fix the problem and resubmit the "
            "full program.\nError:\n" + error_feedback
        )
    if nonce is not None:
        user += f"\n\n[request-id {nonce}]"
    return [
        {"role": "system", "content": prompts.coder_role},
        {"role": "user", "content": user},
    ]


_FENCE_RE = re.compile(r"```tfcaf[ \t]*\n(.*?)```", re.DOTALL)


def extract_code_block(response: str) -> str:
    """Contents of exactly one fenced block tagged ``tfcaf``."""
    blocks = _FENCE_RE.findall(response)
    if not blocks:
        raise NoCodeBlock("response contains no ```tfcaf``` code block")
    if len(blocks) > 1:
        raise MultipleCodeBlocks(f"response contains {len(blocks)} ```tfcaf``` blocks")
    return blocks[0].strip() + "\n"


def check_source(source: str, binding: EnvBinding, probe_seed: int) -> tuple[
    TfcafProgram | None, ValidationReport | None, ProbeReport | None, str | None
]:
    """Parse -> validate -> probe; returns (program, validation, probe, error_text)."""
    try:
        program = parse(source)
    except DslError as exc:
        return None, None, None, str(exc)
    report = validate(program, binding.n_agents, binding.state_dim)
    if not report.ok:
        return program, report, None, "validation failed: " + report.summary()
    probe_report = probe(program, binding.sampler, binding.n_probes, probe_seed)
    if not probe_report.ok:
        first = probe_report.failures[0]
        error = (
            f"probe failed on {len(probe_report.failures)} of {probe_report.n_probes} "
            f"states; first failure: {first.message}"
        )
        return program, report, probe_report, error
    return program, report, probe_report, None


def _apply_response(record: CandidateRecord, response: str, binding: EnvBinding, probe_seed: int) -> None:
    record.raw_response = response
    try:
        record.source = extract_code_block(response)
    except (NoCodeBlock, MultipleCodeBlocks) as exc:
        record.source = None
        record.validation = None
        record.probe = None
        record.error_text = str(exc)
        return
    _, record.validation, record.probe, record.error_text = check_source(
        record.source, binding, probe_seed
    )


def generate_candidates(
    provider,
    prompts: PromptSet,
    k: int,
    seed: int,
    binding: EnvBinding,
    round_index: int = 1,
    previous_choice: str | None = None,
    temperature: float = 0.7,
) -> list[CandidateRecord]:
    """K independent coder calls, each with a distinct nonce; every response
    runs through extract -> parse -> validate -> probe."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng([seed, round_index])
    records = []
    for index in range(1, k + 1):
        nonce = f"{rng.integers(0, 2**32):08x}"
        messages = assemble_coder_messages(prompts, previous_choice, nonce=nonce)
        response = provider.complete(messages, temperature)
        record = CandidateRecord(round=round_index, index=index, raw_response=response)
        _apply_response(record, response, binding, probe_seed=seed + round_index)
        records.append(record)
    return records


def repair_candidate(
    provider,
    prompts: PromptSet,
    record: CandidateRecord,
    r: int,
    binding: EnvBinding,
    previous_choice: str | None = None,
    temperature: float = 0.7,
) -> CandidateRecord:
    """Up to ``r`` regeneration calls, each carrying the latest error text.

    Raises RepairBudgetExhausted (carrying the record, history intact) when
    the candidate never comes clean.
    """
    attempts = 0
    while not record.clean:
        if attempts >= r:
            raise RepairBudgetExhausted(record)
        attempts += 1
        error_text = record.error_text or "unknown failure"
        if record.source is not None:
            error_text = f"{error_text}\nFailing program:\n{record.source}"
        messages = assemble_coder_messages(prompts, previous_choice, error_feedback=error_text)
        response = provider.complete(messages, temperature)
        _apply_response(record, response, binding, probe_seed=record.round + attempts)
        record.repair_history.append((error_text, record.source or record.raw_response))
    return record


_SELECT_RE = re.compile(r"\[(\d+)\]")


def _parse_selection(response: str, n: int) -> int:
    matches = _SELECT_RE.findall(response)
    if not matches:
        raise MalformedSelection(f"no bracketed selection in reply: {response!r}")
    choice = int(matches[0])
    if not 1 <= choice <= n:
        raise MalformedSelection(f"selection [{choice}] outside [1, {n}]")
    return choice


def assemble_evaluator_messages(
    prompts: PromptSet, candidates: list[CandidateRecord]
) -> list[dict[str, str]]:
    parts = [
        prompts.task,
        "\nCandidate credit-assignment programs (all executed cleanly on probe states):",
    ]
    for pos, record in enumerate(candidates, start=1):
        stats = record.probe.stats_text() if record.probe is not None else "no probe data"
        parts.append(f"\nCandidate [{pos}]:\n```tfcaf\n{record.source.rstrip()}\n```\n{stats}")
    parts.append(
        "\nReply with the single best candidate as a bracketed index, e.g. [1]. "
        "Judge how coherently the weights map the described state to agent credit."
    )
    return [
        {"role": "system", "content": prompts.evaluator_role},
        {"role": "user", "content": "\n".join(parts)},
    ]


def select_candidate(
    provider,
    prompts: PromptSet,
    candidates: list[CandidateRecord],
    temperature: float = 0.0,
) -> tuple[int, int, list[str]]:
    """Pick among clean candidates; returns (1-based index, evaluator calls,
    warnings). A single candidate is selected without a provider call; a
    malformed reply is re-asked once, then falls back to the lowest index."""
    if not candidates:
        raise ValueError("select_candidate needs at least one clean candidate")
    if len(candidates) == 1:
        return 1, 0, []
    messages = assemble_evaluator_messages(prompts, candidates)
    warnings: list[str] = []
    calls = 0
    for attempt in range(2):
        response = provider.complete(messages, temperature)
        calls += 1
        try:
            return _parse_selection(response, len(candidates)), calls, warnings
        except MalformedSelection as exc:
            warnings.append(str(exc))
            if attempt == 0:
                messages = messages + [
                    {"role": "assistant", "content": response},
                    {
                        "role": "user",
                        "content": "That reply was not a valid selection. Reply with "
                        f"only a bracketed index between [1] and [{len(candidates)}].",
                    },
                ]
    warnings.append("evaluator never produced a valid selection; falling back to [1]")
    logger.warning("malformed selection twice; falling back to candidate [1]")
    return 1, calls, warnings


def synthesize(
    provider,
    prompts: PromptSet,
    binding: EnvBinding,
    k: int = 3,
    t: int = 3,
    r: int = 3,
    seed: int = 0,
    coder_temperature: float = 0.7,
    evaluator_temperature: float = 0.0,
) -> SynthesisArtifact:
    """Run the full candidate -> repair -> select loop for ``t`` rounds."""
    if k < 1 or t < 1 or r < 0:
        raise ValueError("need k >= 1, t >= 1, r >= 0")
    if str(binding.n_agents) not in prompts.task or str(binding.state_dim) not in prompts.task:
        raise ValueError(
            "task prompt must state the bound agent count and state dimension "
            f"({binding.n_agents}, {binding.state_dim})"
        )

    start_calls = getattr(provider, "call_count", 0)
    all_records: list[CandidateRecord] = []
    chosen_indices: list[int] = []
    warnings: list[str] = []
    evaluator_calls = 0
    previous_choice: str | None = None

    for round_index in range(1, t + 1):
        records = generate_candidates(
            provider,
            prompts,
            k,
            seed,
            binding,
            round_index=round_index,
            previous_choice=previous_choice,
            temperature=coder_temperature,
        )
        clean: list[CandidateRecord] = []
        for record in records:
            if not record.clean:
                try:
                    repair_candidate(
                        provider,
                        prompts,
                        record,
                        r,
                        binding,
                        previous_choice=previous_choice,
                        temperature=coder_temperature,
                    )
                except RepairBudgetExhausted as exc:
                    warnings.append(str(exc))
                    logger.warning("dropping candidate %d/%d: %s", record.round, record.index, exc)
            if record.clean:
                clean.append(record)
        all_records.extend(records)
        if not clean:
            raise NoViableCandidate(f"round {round_index}: no candidate survived repair")

        pick, calls, select_warnings = select_candidate(
            provider, prompts, clean, temperature=evaluator_temperature
        )
        evaluator_calls += calls
        warnings.extend(select_warnings)
        chosen = clean[pick - 1]
        chosen_indices.append(chosen.index)
        previous_choice = chosen.source

        if chosen.probe is not None and chosen.probe.negative_weight_seen:
            warnings.append(
                f"round {round_index}: selected program produced negative weights on "
                "probe states; per-agent greedy maximisation may be inexact"
            )

    # Final program: canonicalize, then re-validate and re-probe before use.
    final_program = parse(previous_choice)
    final_source = pretty_print(final_program)
    final_program = parse(final_source)
    report = validate(final_program, binding.n_agents, binding.state_dim)
    if not report.ok:
        raise NoViableCandidate("final program failed re-validation: " + report.summary())
    final_probe = probe(final_program, binding.sampler, binding.n_probes, seed=seed + 10_000)
    if not final_probe.ok:
        raise NoViableCandidate(
            "final program failed re-probe: " + final_probe.failures[0].message
        )

    digest = hashlib.sha256(final_source.encode("utf-8")).hexdigest()
    provider_calls = getattr(provider, "call_count", 0) - start_calls
    return SynthesisArtifact(
        final_source=final_source,
        digest=digest,
        chosen_indices=chosen_indices,
        records=all_records,
        config={
            "k": k,
            "t": t,
            "r": r,
            "seed": seed,
            "n_agents": binding.n_agents,
            "state_dim": binding.state_dim,
            "n_probes": binding.n_probes,
        },
        provider_calls=provider_calls,
        evaluator_calls=evaluator_calls,
        warnings=warnings,
    )
