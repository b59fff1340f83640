"""Text-generation backends and prompt-template rendering.

Two interchangeable backends expose ``complete(request) -> str``:

* ``RemoteBackend`` speaks a chat-completions-compatible wire format
  (configurable base URL / model / API key), with bounded retries and an
  optional requests-per-minute rate limiter. Safe to share across workers.
* ``ScriptedBackend`` replays a fixed list of responses in order and is the
  deterministic twin used by tests and fixture runs. Single consumer.

Context overflow is guarded with a character-count heuristic (four characters
per token) because no backend-independent tokenizer exists.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import requests

from .errors import (
    ContextOverflow,
    ContractViolation,
    MissingPlaceholder,
    RemoteError,
    ScriptExhausted,
    ScriptMismatch,
)

CHARS_PER_TOKEN = 4

_PLACEHOLDER_RE = re.compile(r"\{\{(\w+)\}\}")


@dataclass
class Message:
    role: str  # system | user | assistant
    content: str


@dataclass
class GenerationRequest:
    messages: list[Message]
    temperature: float = 0.5
    max_context_tokens: int = 4096

    def __post_init__(self) -> None:
        if not any(m.role == "user" for m in self.messages):
            raise ContractViolation("request needs at least one user message")
        if self.temperature < 0:
            raise ContractViolation("temperature must be >= 0")

    @classmethod
    def user(cls, text: str, temperature: float = 0.5, max_context_tokens: int = 4096) -> "GenerationRequest":
        return cls([Message("user", text)], temperature, max_context_tokens)


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / CHARS_PER_TOKEN)


def _check_context(request: GenerationRequest) -> None:
    total = sum(estimate_tokens(m.content) for m in request.messages)
    if total > request.max_context_tokens:
        raise ContextOverflow(
            f"estimated {total} prompt tokens exceed the {request.max_context_tokens}-token context"
        )


@dataclass(frozen=True)
class GenSettings:
    """Sampling parameters applied to every pipeline request."""

    temperature: float = 0.5
    max_context_tokens: int = 4096

    def request(self, prompt: str) -> GenerationRequest:
        return GenerationRequest.user(prompt, self.temperature, self.max_context_tokens)


@dataclass(frozen=True)
class PromptTemplate:
    """Template body with ``{{name}}`` placeholders."""

    name: str
    body: str

    @property
    def required_placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER_RE.findall(self.body))


def render(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; unbound required names are an error."""
    missing = template.required_placeholders - bindings.keys()
    if missing:
        raise MissingPlaceholder(sorted(missing)[0])
    return _PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], template.body)


class Backend(Protocol):
    def complete(self, request: GenerationRequest) -> str: ...


@dataclass
class ScriptEntry:
    response: str
    expect: str | None = None  # prompt substring asserted before replying


class ScriptedBackend:
    """Replays scripted responses in order; pure given (script, call index)."""

    def __init__(self, entries: list[ScriptEntry | str]):
        self.entries = [e if isinstance(e, ScriptEntry) else ScriptEntry(e) for e in entries]
        self.cursor = 0

    def complete(self, request: GenerationRequest) -> str:
        _check_context(request)
        if self.cursor >= len(self.entries):
            raise ScriptExhausted(f"script exhausted after {len(self.entries)} responses")
        entry = self.entries[self.cursor]
        if entry.expect is not None:
            prompt = "\n".join(m.content for m in request.messages)
            if entry.expect not in prompt:
                raise ScriptMismatch(
                    f"response #{self.cursor} expected prompt to contain {entry.expect!r}"
                )
        self.cursor += 1
        return entry.response


def load_script(path: str | Path) -> ScriptedBackend:
    """Load a script file: a JSON array of strings or {expect, response} objects."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ContractViolation("script file must hold a JSON array")
    entries: list[ScriptEntry] = []
    for item in raw:
        if isinstance(item, str):
            entries.append(ScriptEntry(item))
        elif isinstance(item, dict) and "response" in item:
            entries.append(ScriptEntry(item["response"], item.get("expect")))
        else:
            raise ContractViolation("script entries must be strings or {expect, response} objects")
    return ScriptedBackend(entries)


class RateLimiter:
    """Spaces calls so at most ``per_minute`` start in any rolling minute."""

    def __init__(self, per_minute: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if per_minute <= 0:
            raise ContractViolation("rate limit must be positive")
        self.interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_at = 0.0

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            delay = self._next_at - now
            self._next_at = max(now, self._next_at) + self.interval
        if delay > 0:
            self._sleep(delay)


@dataclass
class RemoteConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4-0613"
    api_key_env: str = "OPENAI_API_KEY"
    retries: int = 3
    rate_limit_per_min: float | None = None
    timeout_s: float = 120.0


class RemoteBackend:
    """Chat-completions client with retries, backoff, and rate limiting.

    ``post`` is injectable for tests; it must mimic ``requests.post``.
    """

    def __init__(self, config: RemoteConfig,
                 post: Callable = requests.post,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._post = post
        self._sleep = sleep
        self._limiter = (
            RateLimiter(config.rate_limit_per_min) if config.rate_limit_per_min else None
        )

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise RemoteError(f"API key env var {self.config.api_key_env} is not set")
        return key

    def complete(self, request: GenerationRequest) -> str:
        _check_context(request)
        body = {
            "model": self.config.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_context_tokens,
        }
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        headers = {
            "Authorization": f"Bearer {self._api_key()}",
            "Content-Type": "application/json",
        }
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            if self._limiter is not None:
                self._limiter.wait()
            try:
                resp = self._post(url, json=body, headers=headers, timeout=self.config.timeout_s)
            except requests.RequestException as exc:
                last_error = exc
            else:
                if resp.status_code == 200:
                    try:
                        return resp.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, ValueError) as exc:
                        raise RemoteError(f"malformed completion payload: {exc}") from exc
                if resp.status_code in (429, 500, 502, 503, 504):
                    last_error = RemoteError(f"HTTP {resp.status_code}")
                else:
                    raise RemoteError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if attempt < self.config.retries:
                self._sleep(min(2.0 ** attempt, 30.0))
        raise RemoteError(f"completion failed after {self.config.retries + 1} attempts: {last_error}")
