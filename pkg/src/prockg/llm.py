"""Provider-agnostic chat-completion client.

Backends share one interface: ``complete(messages, config) -> str``.

* LiveBackend speaks the standard chat-completion wire shape over HTTP
  with exponential-backoff retries on transient failures.
* ReplayBackend answers from a cassette file, fully offline.
* RecordingBackend wraps any backend and appends new responses to a
  cassette; identical requests never produce duplicate entries.
* FakeBackend returns canned or computed responses for tests.

A cassette is line-delimited JSON: {"fingerprint", "model", "response"}.
Fingerprints hash the ordered messages plus model and temperature over a
fixed serialization, so they are stable across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import requests

ROLES = ("system", "user", "assistant")

DEFAULT_AUTH_ENV = "PROCKG_API_TOKEN"


class LlmError(Exception):
    pass


class AuthMissing(LlmError):
    pass


class HttpError(LlmError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"HTTP {status}{': ' + detail if detail else ''}")
        self.status = status


class CompletionTimeout(LlmError):
    pass


class CassetteMiss(LlmError):
    def __init__(self, fp: str):
        super().__init__(f"no cassette entry for fingerprint {fp}")
        self.fingerprint = fp


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.role != "system" and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


Conversation = tuple[ChatMessage, ...]


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4"
    auth_env: str = DEFAULT_AUTH_ENV
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    retry_backoff: float = 1.0  # seconds; doubled per attempt

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not self.endpoint.startswith(("http://", "https://")):
            raise ValueError(f"endpoint must be an http(s) URL, got {self.endpoint!r}")


def fingerprint(messages: Sequence[ChatMessage], model: str, temperature: float) -> str:
    payload = {
        "model": model,
        "temperature": temperature,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_cassette(path: str | Path) -> dict[str, str]:
    """fingerprint -> response mapping; later duplicate lines win."""
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                entries[record["fingerprint"]] = record["response"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise LlmError(f"{path}:{line_no}: bad cassette line ({exc})") from exc
    return entries


def append_cassette(path: str | Path, fp: str, model: str, response: str) -> None:
    record = json.dumps(
        {"fingerprint": fp, "model": model, "response": response},
        sort_keys=True,
        ensure_ascii=True,
    )
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(record + "\n")


class LiveBackend:
    """Standard chat-completion JSON over HTTP. Retries 429/5xx, timeouts
    and connection failures with exponential backoff; other 4xx fail fast."""

    def complete(self, messages: Sequence[ChatMessage], config: ProviderConfig) -> str:
        token = os.environ.get(config.auth_env)
        if not token:
            raise AuthMissing(f"environment variable {config.auth_env} is not set")
        body = {
            "model": config.model,
            "temperature": config.temperature,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        headers = {"Authorization": f"Bearer {token}", "Content-Type": "application/json"}
        last_error: LlmError | None = None
        for attempt in range(config.max_retries + 1):
            if attempt and config.retry_backoff:
                time.sleep(config.retry_backoff * 2 ** (attempt - 1))
            try:
                resp = requests.post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
            except requests.Timeout:
                last_error = CompletionTimeout(f"no response within {config.timeout}s")
                continue
            except requests.ConnectionError as exc:
                last_error = HttpError(0, f"connection failed: {exc}")
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = HttpError(resp.status_code, resp.text[:200])
                continue
            if resp.status_code != 200:
                raise HttpError(resp.status_code, resp.text[:200])
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise LlmError(f"malformed completion response: {exc}") from exc
        assert last_error is not None
        raise last_error


class FakeBackend:
    """Fixed or computed responses; for tests and demo fixtures."""

    def __init__(self, responder: str | Callable[[Conversation], str]):
        self._responder = responder

    def complete(self, messages: Sequence[ChatMessage], config: ProviderConfig) -> str:
        if callable(self._responder):
            return self._responder(tuple(messages))
        return self._responder


class ReplayBackend:
    def __init__(self, cassette_path: str | Path):
        self.cassette_path = Path(cassette_path)
        self._entries = load_cassette(self.cassette_path)

    def complete(self, messages: Sequence[ChatMessage], config: ProviderConfig) -> str:
        fp = fingerprint(messages, config.model, config.temperature)
        if fp not in self._entries:
            raise CassetteMiss(fp)
        return self._entries[fp]


class RecordingBackend:
    """Wraps another backend; known fingerprints replay from the cassette,
    new ones are forwarded and appended. Writes are serialized through a
    per-instance lock, so keep one instance per cassette file."""

    def __init__(self, inner, cassette_path: str | Path):
        self.inner = inner
        self.cassette_path = Path(cassette_path)
        self._entries = load_cassette(self.cassette_path) if self.cassette_path.exists() else {}
        self._write_lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], config: ProviderConfig) -> str:
        fp = fingerprint(messages, config.model, config.temperature)
        with self._write_lock:
            if fp in self._entries:
                return self._entries[fp]
        response = self.inner.complete(messages, config)
        with self._write_lock:
            if fp not in self._entries:
                self._entries[fp] = response
                append_cassette(self.cassette_path, fp, config.model, response)
        return response


def complete(messages: Sequence[ChatMessage], config: ProviderConfig, backend=None) -> ChatMessage:
    """Run one completion and wrap the reply as an assistant message."""
    if not messages:
        raise ValueError("at least one message is required")
    backend = backend or LiveBackend()
    return ChatMessage("assistant", backend.complete(messages, config))


def record_session(
    messages: Sequence[ChatMessage],
    config: ProviderConfig,
    cassette_path: str | Path,
    inner=None,
) -> ChatMessage:
    """Complete via `inner` (live by default) and persist to the cassette."""
    backend = RecordingBackend(inner or LiveBackend(), cassette_path)
    return complete(messages, config, backend)
