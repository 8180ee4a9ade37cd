"""Completion backends: deterministic cassette replay and a generic HTTP chat client."""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Protocol

import yaml

from ._yamlfmt import quoted, scalar
from .prompt import Prompt

logger = logging.getLogger(__name__)

ENDPOINT_ENV = "SPIRES_LLM_ENDPOINT"
KEY_ENV = "SPIRES_LLM_KEY"
DEFAULT_MODEL = "gpt-3.5-turbo"

_DIGEST_RE = re.compile(r"^[0-9a-f]{64}$")


class GatewayError(RuntimeError):
    pass


class ReplayMiss(GatewayError):
    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no cassette entry for prompt digest {digest} (fixture is stale or incomplete)")


class TransportError(GatewayError):
    pass


class RateLimitError(GatewayError):
    pass


class _Transient(Exception):
    """Internal marker for failures worth retrying."""

    def __init__(self, error: GatewayError):
        self.error = error


@dataclass(frozen=True)
class CompletionRequest:
    prompt: Prompt
    model_id: str = DEFAULT_MODEL
    temperature: float = 0.0
    max_output_chars: int = 16000

    def __post_init__(self) -> None:
        if not 0 <= self.temperature <= 2:
            raise ValueError(f"temperature must be in [0, 2], got {self.temperature}")
        if self.max_output_chars <= 0:
            raise ValueError("max_output_chars must be positive")


@dataclass(frozen=True)
class Completion:
    text: str
    backend: str
    latency_ms: int = 0
    truncated: bool = False


# --- cassette ----------------------------------------------------------------


_LINE_BREAKS = ("\r", "\x85", "\u2028", "\u2029")


def _block(text: str, indent: str) -> str:
    """A literal block scalar when the text survives one, else a double-quoted scalar."""
    literal_ok = bool(text) and all(ch.isprintable() or ch in "\n\t" for ch in text)
    if (
        literal_ok
        and not text[0].isspace()
        and not text.endswith("\n")
        and not any(b in text for b in _LINE_BREAKS)
    ):
        body = "\n".join(indent + line if line else "" for line in text.split("\n"))
        return "|-\n" + body
    return quoted(text)


class CassetteError(ValueError):
    pass


@dataclass
class Cassette:
    """Prompt-digest -> completion-text store, persisted as YAML."""

    entries: dict[str, str] = field(default_factory=dict)
    model_id: str = DEFAULT_MODEL
    created_at: str = ""
    prompts: dict[str, str] = field(default_factory=dict)
    path: Path | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, digest: object) -> bool:
        return digest in self.entries

    def lookup(self, digest: str) -> str:
        try:
            return self.entries[digest]
        except KeyError:
            raise ReplayMiss(digest) from None

    def put(self, prompt: Prompt, text: str, keep_prompt: bool = True) -> None:
        with self._lock:
            self.entries[prompt.input_digest] = text
            if keep_prompt:
                self.prompts[prompt.input_digest] = prompt.text

    def dumps(self) -> str:
        with self._lock:
            lines = ["metadata:", f"  model_id: {scalar(self.model_id)}", f"  created_at: {scalar(self.created_at)}"]
            lines += [f"{scalar(d)}: {_block(t, '  ')}" for d, t in sorted(self.entries.items())]
            if self.prompts:
                lines.append("prompts:")
                lines += [f"  {scalar(d)}: {_block(t, '    ')}" for d, t in sorted(self.prompts.items())]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path | None = None) -> Path:
        target = Path(path or self.path or "")
        if not str(target):
            raise CassetteError("no path to save cassette to")
        text = self.dumps()
        tmp = target.with_name(target.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, target)
        return target

    @classmethod
    def loads(cls, text: str, path: Path | None = None) -> "Cassette":
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise CassetteError("cassette must be a YAML mapping")
        meta = data.pop("metadata", None) or {}
        prompts = data.pop("prompts", None) or {}
        entries = {}
        for key, value in data.items():
            key = str(key)
            if not _DIGEST_RE.match(key):
                raise CassetteError(f"cassette key {key!r} is not a 64-character SHA-256 hex digest")
            entries[key] = str(value)
        return cls(
            entries=entries,
            model_id=str(meta.get("model_id", DEFAULT_MODEL)),
            created_at=str(meta.get("created_at", "")),
            prompts={str(k): str(v) for k, v in prompts.items()},
            path=path,
        )

    @classmethod
    def load(cls, path: str | Path, missing_ok: bool = False) -> "Cassette":
        path = Path(path)
        if missing_ok and not path.exists():
            return cls(path=path, created_at=_now())
        return cls.loads(path.read_text(encoding="utf-8"), path)


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def record(req: CompletionRequest, c: Completion, cassette: Cassette) -> Cassette:
    cassette.put(req.prompt, c.text)
    return cassette


# --- rate limiting -----------------------------------------------------------


class TokenBucket:
    """Thread-safe token bucket shared by HTTP backends and annotators."""

    def __init__(
        self,
        capacity: float = 5,
        refill_per_second: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if capacity <= 0 or refill_per_second <= 0:
            raise ValueError("capacity and refill rate must be positive")
        self.capacity = capacity
        self.refill_per_second = refill_per_second
        self._clock = clock
        self._sleep = sleep
        self._tokens = float(capacity)
        self._stamp = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.refill_per_second)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.refill_per_second
            self._sleep(wait)


# --- backends ----------------------------------------------------------------


class Backend(Protocol):
    name: str

    def complete(self, req: CompletionRequest) -> str: ...


class ReplayBackend:
    name = "replay"

    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def complete(self, req: CompletionRequest) -> str:
        return self.cassette.lookup(req.prompt.input_digest)


class HttpBackend:
    """POSTs ``{"model", "temperature", "messages"}`` and reads ``choices[0].message.content``."""

    name = "http"

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        *,
        auth_header: str = "Authorization",
        auth_scheme: str = "Bearer",
        timeout: float = 60.0,
        client: Any = None,
    ):
        import httpx

        if not endpoint:
            raise GatewayError(f"HTTP backend needs an endpoint URL (set {ENDPOINT_ENV})")
        self.endpoint = endpoint
        headers = {}
        if api_key:
            headers[auth_header] = f"{auth_scheme} {api_key}".strip() if auth_scheme else api_key
        self._client = client or httpx.Client(timeout=timeout, headers=headers)

    @classmethod
    def from_env(cls, endpoint: str | None = None, api_key: str | None = None, **kw: Any) -> "HttpBackend":
        return cls(endpoint or os.environ.get(ENDPOINT_ENV, ""), api_key or os.environ.get(KEY_ENV), **kw)

    def complete(self, req: CompletionRequest) -> str:
        import httpx

        body = {
            "model": req.model_id,
            "temperature": req.temperature,
            "messages": [{"role": "user", "content": req.prompt.text}],
        }
        try:
            resp = self._client.post(self.endpoint, json=body)
        except httpx.TransportError as e:
            raise _Transient(TransportError(f"POST {self.endpoint}: {e}")) from e
        if resp.status_code == 429:
            raise _Transient(RateLimitError(f"POST {self.endpoint}: rate limited (429)"))
        if resp.status_code >= 400:
            raise TransportError(f"POST {self.endpoint}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"POST {self.endpoint}: unexpected response shape ({e})") from e


class RecordingBackend:
    """Forwards to a live backend and persists every exchange into a cassette."""

    def __init__(self, inner: Backend, cassette: Cassette, autosave: bool = True):
        self.inner = inner
        self.cassette = cassette
        self.autosave = autosave
        self.name = inner.name

    def complete(self, req: CompletionRequest) -> str:
        text = self.inner.complete(req)
        self.cassette.put(req.prompt, _normalize(text))
        if self.autosave and self.cassette.path is not None:
            self.cassette.save()
        return text


def _normalize(text: str) -> str:
    return text.rstrip("\n")


class Gateway:
    """Uniform ``complete`` over a backend with retry, rate limiting and truncation."""

    def __init__(
        self,
        backend: Backend,
        *,
        limiter: TokenBucket | None = None,
        attempts: int = 3,
        backoff_seconds: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
        deterministic: bool = False,
    ):
        self.backend = backend
        self.limiter = limiter
        self.attempts = attempts
        self.backoff_seconds = backoff_seconds
        self._sleep = sleep
        self.deterministic = deterministic

    def complete(self, req: CompletionRequest) -> Completion:
        start = time.monotonic()
        last: GatewayError | None = None
        for attempt in range(self.attempts):
            if self.limiter is not None and self.backend.name != "replay":
                self.limiter.acquire()
            try:
                raw = self.backend.complete(req)
                break
            except _Transient as t:
                last = t.error
                logger.warning("attempt %d/%d failed: %s", attempt + 1, self.attempts, t.error)
                if attempt + 1 < self.attempts:
                    self._sleep(self.backoff_seconds * 2**attempt)
        else:
            assert last is not None
            raise last
        text = _normalize(raw)
        truncated = len(text) > req.max_output_chars
        if truncated:
            logger.warning(
                "completion for %s truncated from %d to %d characters", req.prompt.input_digest[:12], len(text), req.max_output_chars
            )
            text = text[: req.max_output_chars]
        latency = 0 if self.deterministic else int((time.monotonic() - start) * 1000)
        return Completion(text=text, backend=self.backend.name, latency_ms=latency, truncated=truncated)


def complete(req: CompletionRequest, gateway: Gateway) -> Completion:
    return gateway.complete(req)
