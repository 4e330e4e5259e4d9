"""On-disk artifact format.

``<name>.tfcaf``: comment header lines (digest, bound dimensions) followed by
the canonical program text. ``<name>.manifest.json``: full provenance — every
candidate record, repairs, selections, pipeline config, and the content
digest of the final source.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict
from pathlib import Path

from ..dsl import TfcafProgram, parse, pretty_print, validate
from .pipeline import SynthesisArtifact

_HEADER_RE = re.compile(r"^#\s*(digest|n_agents|state_dim):\s*(\S+)\s*$")


def source_digest(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def tfcaf_text(artifact: SynthesisArtifact) -> str:
    cfg = artifact.config
    header = (
        f"# digest: {artifact.digest}\n"
        f"# n_agents: {cfg['n_agents']}\n"
        f"# state_dim: {cfg['state_dim']}\n"
    )
    return header + artifact.final_source


def write_artifact(artifact: SynthesisArtifact, out_dir: str, name: str) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tfcaf_path = out / f"{name}.tfcaf"
    manifest_path = out / f"{name}.manifest.json"
    tfcaf_path.write_text(tfcaf_text(artifact), encoding="utf-8")

    manifest = {
        "final_source": artifact.final_source,
        "digest": artifact.digest,
        "chosen_indices": artifact.chosen_indices,
        "config": artifact.config,
        "provider_calls": artifact.provider_calls,
        "evaluator_calls": artifact.evaluator_calls,
        "warnings": artifact.warnings,
        "records": [asdict(r) for r in artifact.records],
    }
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return tfcaf_path, manifest_path


def read_tfcaf_header(text: str) -> dict[str, str]:
    header: dict[str, str] = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        m = _HEADER_RE.match(line)
        if m:
            header[m.group(1)] = m.group(2)
    return header


def load_tfcaf(path: str, n_agents: int, state_dim: int) -> tuple[TfcafProgram, str]:
    """Parse and validate a .tfcaf file against environment dimensions.

    Header-declared dimensions and digest, when present, are cross-checked;
    a mismatch is refused at load.
    """
    text = Path(path).read_text(encoding="utf-8")
    header = read_tfcaf_header(text)
    for key, bound in (("n_agents", n_agents), ("state_dim", state_dim)):
        declared = header.get(key)
        if declared is not None and int(declared) != bound:
            raise ValueError(
                f"{path}: program is bound to {key}={declared}, environment needs {bound}"
            )
    program = parse(text)
    canonical = pretty_print(program)
    declared_digest = header.get("digest")
    if declared_digest is not None and declared_digest != source_digest(canonical):
        raise ValueError(f"{path}: digest header does not match program body")
    report = validate(program, n_agents, state_dim)
    if not report.ok:
        raise ValueError(f"{path}: validation failed: {report.summary()}")
    return program, canonical
