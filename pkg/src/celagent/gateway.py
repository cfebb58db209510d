"""Text generation behind one interface.

Backends:

* :class:`RemoteBackend` -- OpenAI-compatible ``/chat/completions`` over HTTP(S).
* :class:`RecordingBackend` / :class:`ReplayBackend` -- content-addressed
  on-disk cache; replay answers only from the store.
* :class:`ScriptedBackend` -- a Python callable ``prompt -> text``.

:class:`Gateway` wraps a backend with a concurrency cap, an optional token
budget, a context-size guard and a call log.
"""
from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

log = logging.getLogger(__name__)

DEFAULT_MAX_TOKENS = 8192


class GatewayError(Exception):
    pass


class EndpointUnreachable(GatewayError):
    pass


class ReplayMiss(GatewayError, KeyError):
    pass


class BudgetExceeded(GatewayError):
    pass


class ContextOverflow(GatewayError, ValueError):
    pass


class RequestTag(str, enum.Enum):
    VALUE = "value"
    WORLD_MODEL = "world_model"
    RULE_INDUCTION = "rule_induction"
    PLAYBOOK = "playbook"
    ACTION_ONLY = "action_only"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    tag: RequestTag
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = 0.0
    stop_sequences: tuple[str, ...] = ()
    # Replay namespace (run/trial/episode); deliberately not part of the hash.
    session: str = ""

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        object.__setattr__(self, "tag", RequestTag(self.tag))
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))

    def hash_fields(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt,
            "max_tokens": self.max_tokens,
            "temperature": float(self.temperature),
            "stop": list(self.stop_sequences),
            "tag": self.tag.value,
        }


@dataclass(frozen=True)
class GenerationResponse:
    text: str
    backend_id: str
    latency: float = 0.0
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    cache_hit: bool = False


def prompt_hash(request: GenerationRequest) -> str:
    """SHA-256 hex digest of the request's content fields."""
    blob = json.dumps(request.hash_fields(), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Backend(Protocol):
    backend_id: str

    def complete(self, request: GenerationRequest) -> GenerationResponse: ...


class ScriptedBackend:
    def __init__(self, handler: Callable[[str], str], backend_id: str = "scripted") -> None:
        self.handler = handler
        self.backend_id = backend_id

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        t0 = time.perf_counter()
        text = self.handler(request.prompt)
        if text is None:
            raise GatewayError(f"{self.backend_id} handler returned None")
        return GenerationResponse(text, self.backend_id, time.perf_counter() - t0)


_RETRYABLE_STATUS = {408, 409, 425, 429, 500, 502, 503, 504}


class RemoteBackend:
    """OpenAI-compatible chat-completions client with bounded exponential backoff."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        max_attempts: int = 4,
        backoff: float = 1.0,
        timeout: float = 300.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.max_attempts = max_attempts
        self.backoff = backoff
        self.client = client or httpx.Client(timeout=timeout)
        self.sleep = sleep
        self.backend_id = f"remote:{model}"

    @classmethod
    def from_env(cls, **kwargs: Any) -> "RemoteBackend":
        env = os.environ
        base_url = kwargs.pop("base_url", None) or env.get("CELAGENT_BASE_URL") or env.get(
            "OPENAI_BASE_URL", "https://api.openai.com/v1"
        )
        model = kwargs.pop("model", None) or env.get("CELAGENT_MODEL") or env.get("OPENAI_MODEL")
        if not model:
            raise GatewayError("no model configured: set CELAGENT_MODEL or the backend 'model' field")
        api_key = env.get("CELAGENT_API_KEY") or env.get("OPENAI_API_KEY", "")
        return cls(base_url, model, api_key, **kwargs)

    def _payload(self, request: GenerationRequest) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.stop_sequences:
            body["stop"] = list(request.stop_sequences)
        return body

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last: str = ""
        for attempt in range(self.max_attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            t0 = time.perf_counter()
            try:
                resp = self.client.post(
                    f"{self.base_url}/chat/completions", json=self._payload(request), headers=headers
                )
            except httpx.TransportError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.max_attempts, last)
                continue
            if resp.status_code in _RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d/%d failed: %s", attempt + 1, self.max_attempts, last)
                continue
            if resp.status_code >= 400:
                raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:500]}")
            data = resp.json()
            try:
                text = data["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed completion payload: {str(data)[:500]}") from exc
            usage = data.get("usage") or {}
            return GenerationResponse(
                text,
                self.backend_id,
                time.perf_counter() - t0,
                usage.get("prompt_tokens"),
                usage.get("completion_tokens"),
            )
        raise EndpointUnreachable(f"{self.base_url} failed after {self.max_attempts} attempts ({last})")


class ReplayStore:
    """Directory of ``<sha256>.json`` files.

    Each file holds the hashed request fields and, per session, the list of
    responses in the order they were produced.  Repeated identical requests
    within a session are answered in recording order.
    """

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def _read(self, key: str) -> dict[str, Any] | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def lookup(self, key: str, session: str, index: int) -> str | None:
        entry = self._read(key)
        if entry is None:
            return None
        texts = entry["responses"].get(session, [])
        return texts[index] if index < len(texts) else None

    def append(self, key: str, request: GenerationRequest, session: str, text: str, index: int | None = None) -> None:
        """Store ``text`` as occurrence ``index`` (default: next) of ``key`` in ``session``.

        Later occurrences are discarded, so re-recording an interrupted
        session replaces the stale tail instead of extending it.
        """
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            entry = self._read(key) or {"request": request.hash_fields(), "responses": {}}
            texts = entry["responses"].setdefault(session, [])
            if index is not None:
                del texts[index:]
            texts.append(text)
            path = self._path(key)
            tmp = path.with_suffix(f".{threading.get_ident()}.tmp")
            tmp.write_text(json.dumps(entry, sort_keys=True, ensure_ascii=False, indent=1), encoding="utf-8")
            tmp.replace(path)


class _Occurrences:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counts: dict[tuple[str, str], int] = defaultdict(int)

    def next(self, session: str, key: str) -> int:
        with self._lock:
            i = self._counts[(session, key)]
            self._counts[(session, key)] = i + 1
            return i


class RecordingBackend:
    def __init__(self, inner: Backend, store: ReplayStore | str | Path) -> None:
        self.inner = inner
        self.store = store if isinstance(store, ReplayStore) else ReplayStore(store)
        self.backend_id = f"record({inner.backend_id})"
        self._seen = _Occurrences()

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        resp = self.inner.complete(request)
        key = prompt_hash(request)
        index = self._seen.next(request.session, key)
        self.store.append(key, request, request.session, resp.text, index)
        return resp


class ReplayBackend:
    def __init__(self, store: ReplayStore | str | Path) -> None:
        self.store = store if isinstance(store, ReplayStore) else ReplayStore(store)
        self.backend_id = "replay"
        self._seen = _Occurrences()

    def complete(self, request: GenerationRequest) -> GenerationResponse:
        key = prompt_hash(request)
        index = self._seen.next(request.session, key)
        text = self.store.lookup(key, request.session, index)
        if text is None:
            raise ReplayMiss(f"no recording for {request.tag} request {key[:12]} (session {request.session!r}, #{index})")
        return GenerationResponse(text, self.backend_id, 0.0, cache_hit=True)


@dataclass(frozen=True)
class CallRecord:
    session: str
    tag: RequestTag
    key: str
    cache_hit: bool
    tokens: int


def _estimate_tokens(text: str) -> int:
    return max(1, len(text) // 4)


@dataclass
class Gateway:
    backend: Backend
    max_concurrency: int = 4
    token_budget: int | None = None
    context_budget: int | None = None
    calls: list[CallRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._slots = threading.BoundedSemaphore(self.max_concurrency)
        self._lock = threading.Lock()
        self.tokens_used = 0

    def generate(self, request: GenerationRequest) -> GenerationResponse:
        if self.context_budget is not None and len(request.prompt) > self.context_budget:
            raise ContextOverflow(f"prompt of {len(request.prompt)} chars exceeds budget {self.context_budget}")
        if self.token_budget is not None and self.tokens_used >= self.token_budget:
            raise BudgetExceeded(f"token budget {self.token_budget} exhausted")
        with self._slots:
            resp = self.backend.complete(request)
        used = (resp.prompt_tokens or _estimate_tokens(request.prompt)) + (
            resp.completion_tokens or _estimate_tokens(resp.text)
        )
        with self._lock:
            self.tokens_used += used
            self.calls.append(CallRecord(request.session, request.tag, prompt_hash(request), resp.cache_hit, used))
        return resp

    def calls_for(self, session_prefix: str = "", tag: RequestTag | str | None = None) -> list[CallRecord]:
        with self._lock:
            return [
                c
                for c in self.calls
                if c.session.startswith(session_prefix) and (tag is None or c.tag == RequestTag(tag))
            ]

