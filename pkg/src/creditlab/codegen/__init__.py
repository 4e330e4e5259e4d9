"""Candidate generation, error-driven repair, and evaluator selection."""

from .artifact import load_tfcaf, read_tfcaf_header, source_digest, tfcaf_text, write_artifact
from .pipeline import (
    CandidateRecord,
    EnvBinding,
    MalformedSelection,
    MultipleCodeBlocks,
    NoCodeBlock,
    NoViableCandidate,
    PromptSet,
    RepairBudgetExhausted,
    SynthesisArtifact,
    assemble_coder_messages,
    assemble_evaluator_messages,
    check_source,
    extract_code_block,
    generate_candidates,
    load_prompts,
    repair_candidate,
    select_candidate,
    synthesize,
)
from .provider import LiveProvider, ProviderConfig, ProviderError, ScriptedProvider, make_provider

__all__ = [
    "CandidateRecord",
    "EnvBinding",
    "LiveProvider",
    "MalformedSelection",
    "MultipleCodeBlocks",
    "NoCodeBlock",
    "NoViableCandidate",
    "PromptSet",
    "ProviderConfig",
    "ProviderError",
    "RepairBudgetExhausted",
    "ScriptedProvider",
    "SynthesisArtifact",
    "assemble_coder_messages",
    "assemble_evaluator_messages",
    "check_source",
    "extract_code_block",
    "generate_candidates",
    "load_prompts",
    "load_tfcaf",
    "make_provider",
    "read_tfcaf_header",
    "repair_candidate",
    "select_candidate",
    "source_digest",
    "synthesize",
    "tfcaf_text",
    "write_artifact",
]
