"""Chat-completion providers: a live HTTP client and a scripted replayer.

The scripted provider replays a JSON transcript (an array of response
strings, consumed in order) so the whole synthesis pipeline runs offline and
byte-reproducibly; it is the first-class path for tests and fixtures.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field


class ProviderError(RuntimeError):
    """Transport/timeout failure after retries, or an exhausted transcript."""


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = ""
    model_id: str = ""
    api_key_env_name: str = ""
    temperature: float = 0.7  # coder sampling temperature
    evaluator_temperature: float = 0.0
    timeout: float = 60.0
    mode: str = "scripted"  # "live" | "scripted"
    transcript_path: str = ""

    def __post_init__(self) -> None:
        if self.mode not in ("live", "scripted"):
            raise ValueError(f"unknown provider mode {self.mode!r}")
        if self.mode == "live" and not (self.base_url and self.api_key_env_name):
            raise ValueError("live mode requires base_url and api_key_env_name")
        if self.mode == "scripted" and not self.transcript_path:
            raise ValueError("scripted mode requires a transcript_path")
        if self.temperature < 0 or self.evaluator_temperature < 0:
            raise ValueError("temperatures must be >= 0")


class LiveProvider:
    """POST {base_url}/chat/completions with bearer auth and retry/backoff."""

    MAX_RETRIES = 3

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.call_count = 0
        key = os.environ.get(config.api_key_env_name, "")
        if not key:
            raise ProviderError(f"environment variable {config.api_key_env_name} is not set")
        self._headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def complete(self, messages: list[dict[str, str]], temperature: float) -> str:
        import requests

        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = {"model": self.config.model_id, "messages": messages, "temperature": temperature}
        last_error: Exception | None = None
        for attempt in range(self.MAX_RETRIES):
            try:
                resp = requests.post(
                    url, json=body, headers=self._headers, timeout=self.config.timeout
                )
                resp.raise_for_status()
                self.call_count += 1
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - every transport failure retries
                last_error = exc
                if attempt < self.MAX_RETRIES - 1:
                    time.sleep(2.0**attempt)
        raise ProviderError(f"request failed after {self.MAX_RETRIES} attempts: {last_error}")


class ScriptedProvider:
    """Replays canned responses in order; records every message list sent."""

    def __init__(self, responses: list[str]):
        self.responses = list(responses)
        self.call_count = 0
        self.calls: list[list[dict[str, str]]] = []

    @classmethod
    def from_file(cls, path: str) -> "ScriptedProvider":
        with open(path, encoding="utf-8") as fh:
            responses = json.load(fh)
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            raise ValueError(f"transcript {path} must be a JSON array of strings")
        return cls(responses)

    def complete(self, messages: list[dict[str, str]], temperature: float) -> str:
        del temperature
        if self.call_count >= len(self.responses):
            raise ProviderError(
                f"scripted transcript exhausted after {len(self.responses)} responses"
            )
        self.calls.append(messages)
        response = self.responses[self.call_count]
        self.call_count += 1
        return response


def make_provider(config: ProviderConfig):
    if config.mode == "scripted":
        return ScriptedProvider.from_file(config.transcript_path)
    return LiveProvider(config)
