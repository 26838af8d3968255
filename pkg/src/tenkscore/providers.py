"""Completion providers: deterministic test doubles and an HTTP client.

The HTTP provider speaks the common chat-completion wire shape
(model, messages, temperature, max_tokens -> choices[0].message.content),
so any compatible endpoint can back the graders.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Sequence

import httpx

from .errors import ProviderFailure, ValidationError
from .grading import DEFAULT_CONTEXT_WINDOW, prompt_digest


class DeterministicStub:
    """Scripted provider: answers cycle through a fixed list.

    Thread-safe; ``calls`` counts every completion issued, which tests use
    to assert cache reuse and zero-network invariants.
    """

    def __init__(
        self,
        answers: Sequence[str] = ("1",),
        context_window_tokens: int = DEFAULT_CONTEXT_WINDOW,
    ) -> None:
        if not answers:
            raise ValidationError("stub needs at least one scripted answer")
        self.answers = list(answers)
        self.context_window_tokens = context_window_tokens
        self.calls = 0
        self._lock = threading.Lock()

    @property
    def provider_id(self) -> str:
        return "stub:" + ",".join(self.answers)

    def complete(self, prompt: str, max_output_tokens: int, temperature: float) -> str:
        with self._lock:
            answer = self.answers[self.calls % len(self.answers)]
            self.calls += 1
        return answer


class ReplayProvider:
    """Serve completions recorded earlier, keyed by prompt hash."""

    def __init__(
        self,
        directory: Path,
        context_window_tokens: int = DEFAULT_CONTEXT_WINDOW,
    ) -> None:
        self.directory = Path(directory)
        self.context_window_tokens = context_window_tokens
        self.calls = 0
        self._lock = threading.Lock()
        self._recordings: dict[str, str] = {}
        for path in sorted(self.directory.glob("*.ndjson")):
            for line in path.read_text(encoding="utf-8").split("\n"):
                if not line.strip():
                    continue
                record = json.loads(line)
                self._recordings[record["prompt_hash"]] = record["completion"]

    @property
    def provider_id(self) -> str:
        return f"replay:{self.directory.name}"

    def complete(self, prompt: str, max_output_tokens: int, temperature: float) -> str:
        with self._lock:
            self.calls += 1
        key = prompt_digest(prompt)
        try:
            return self._recordings[key]
        except KeyError:
            raise ProviderFailure(
                f"no recorded completion for prompt hash {key[:12]}…"
            ) from None


class RecordingProvider:
    """Wrap another provider and persist (prompt hash, completion) pairs."""

    def __init__(self, inner, directory: Path, filename: str = "recordings.ndjson") -> None:
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._path = self.directory / filename
        self._lock = threading.Lock()

    @property
    def context_window_tokens(self) -> int:
        return self.inner.context_window_tokens

    @property
    def provider_id(self) -> str:
        return getattr(self.inner, "provider_id", "unknown")

    @property
    def calls(self) -> int:
        return getattr(self.inner, "calls", 0)

    def complete(self, prompt: str, max_output_tokens: int, temperature: float) -> str:
        completion = self.inner.complete(prompt, max_output_tokens, temperature)
        record = json.dumps(
            {"prompt_hash": prompt_digest(prompt), "completion": completion},
            ensure_ascii=False,
        )
        with self._lock:
            with self._path.open("a", encoding="utf-8") as handle:
                handle.write(record + "\n")
        return completion


class HttpProvider:
    """Chat-completion HTTP provider (OpenAI-compatible wire shape)."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        context_window_tokens: int = DEFAULT_CONTEXT_WINDOW,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if not base_url or not model:
            raise ValidationError("http provider needs a base URL and model name")
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.context_window_tokens = context_window_tokens
        self.calls = 0
        self._lock = threading.Lock()
        self._http = httpx.Client(headers=headers, timeout=120.0, transport=transport)

    @classmethod
    def from_env(cls) -> "HttpProvider":
        base_url = os.environ.get("LLM_BASE_URL", "")
        model = os.environ.get("LLM_MODEL", "")
        if not base_url or not model:
            raise ValidationError("LLM_BASE_URL and LLM_MODEL are required")
        return cls(base_url, model, api_key=os.environ.get("LLM_API_KEY", ""))

    @property
    def provider_id(self) -> str:
        return f"http:{self.model}"

    def complete(self, prompt: str, max_output_tokens: int, temperature: float) -> str:
        with self._lock:
            self.calls += 1
        try:
            response = self._http.post(
                f"{self.base_url}/chat/completions",
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": temperature,
                    "max_tokens": max_output_tokens,
                },
            )
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderFailure(f"completion request failed: {exc}") from exc

    def close(self) -> None:
        self._http.close()


def max_concurrency_from_env(default: int = 4) -> int:
    raw = os.environ.get("LLM_MAX_CONCURRENCY", "")
    try:
        value = int(raw)
    except ValueError:
        return default
    return value if value > 0 else default
