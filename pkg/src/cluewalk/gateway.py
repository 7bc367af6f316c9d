"""Single chat-completion contract over interchangeable model backends.

Three backends share one ``complete(request)`` interface: a remote HTTP
chat-completions endpoint, a scripted replay backend for deterministic
tests, and a token-overlap oracle that needs no model at all. The
:class:`Gateway` wraps a backend with per-question call/token accounting
and a hard call budget.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Protocol

import requests

from . import scoring

logger = logging.getLogger(__name__)

PROMPT_KINDS = ("clue_extraction", "relation_mapping", "entity_mapping", "answering")

DEFAULT_CALL_BUDGET = 30
DEFAULT_API_KEY_ENV = "CLUEWALK_API_KEY"


class GatewayError(Exception):
    """Base error for backend and accounting failures."""


class BudgetExceededError(GatewayError):
    """Raised when a completion would exceed the per-question call budget."""


class ScriptError(GatewayError):
    """Raised on a scripted-backend miss or script exhaustion."""


class TransportError(GatewayError):
    """Raised when the HTTP backend fails after its bounded retries."""


class TransientTransportError(GatewayError):
    """Internal marker for a retryable HTTP failure."""


@dataclass(frozen=True)
class ChatRequest:
    """One chat completion request.

    ``tag`` names the prompt kind for ledger accounting. ``meta`` carries
    the structured slot values the prompt was rendered from; backends that
    answer without reading text (the oracle) use it, others ignore it.
    """

    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    tag: str = "answering"
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.tag not in PROMPT_KINDS:
            raise GatewayError(f"unknown prompt tag {self.tag!r}")
        if self.temperature < 0:
            raise GatewayError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise GatewayError("max_tokens must be positive")
        roles = [role for role, _ in self.messages]
        if "user" not in roles:
            raise GatewayError("request needs at least one user message")
        if any(role not in ("system", "user") for role in roles):
            raise GatewayError("message roles must be 'system' or 'user'")

    def user_text(self) -> str:
        return "\n".join(content for role, content in self.messages if role == "user")

    def canonical_key(self) -> str:
        """Stable short key identifying this request's message content."""
        digest = hashlib.sha256()
        for role, content in self.messages:
            digest.update(role.encode("utf-8"))
            digest.update(b"\x00")
            digest.update(content.encode("utf-8"))
            digest.update(b"\x00")
        return digest.hexdigest()[:12]


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise GatewayError("token counts must be non-negative")


class CallLedger:
    """Per-question counters: calls by prompt kind, tokens, model wall time.

    Updated atomically per call so concurrent branch workers can share it.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.calls_by_tag: Counter[str] = Counter()
        self.prompt_tokens = 0
        self.completion_tokens = 0
        self.llm_seconds = 0.0
        self.clamped_scores = 0
        self.transport_retries = 0

    @property
    def total_calls(self) -> int:
        return sum(self.calls_by_tag.values())

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def record(self, tag: str, response: ChatResponse, seconds: float) -> None:
        with self._lock:
            self.calls_by_tag[tag] += 1
            self.prompt_tokens += response.prompt_tokens
            self.completion_tokens += response.completion_tokens
            self.llm_seconds += seconds

    def flag_clamped(self, count: int) -> None:
        if count:
            with self._lock:
                self.clamped_scores += count

    def flag_retry(self, count: int = 1) -> None:
        with self._lock:
            self.transport_retries += count

    def snapshot(self) -> dict[str, Any]:
        with self._lock:
            return {
                "calls_by_tag": dict(self.calls_by_tag),
                "total_calls": self.total_calls,
                "prompt_tokens": self.prompt_tokens,
                "completion_tokens": self.completion_tokens,
                "total_tokens": self.total_tokens,
                "llm_seconds": self.llm_seconds,
                "clamped_scores": self.clamped_scores,
                "transport_retries": self.transport_retries,
            }


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class HttpBackend:
    """POSTs OpenAI-style chat-completion bodies to a configurable endpoint.

    The bearer token is read from ``api_key_env`` at call time; transient
    transport failures (connection errors, 5xx, 429) surface as
    :class:`TransientTransportError` so the gateway can retry them.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, request: ChatRequest) -> ChatResponse:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.api_key_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransientTransportError(f"transport failure: {exc}") from exc
        if resp.status_code in (429,) or resp.status_code >= 500:
            raise TransientTransportError(f"server returned {resp.status_code}")
        if resp.status_code != 200:
            raise TransportError(f"server returned {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            text = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        usage = payload.get("usage") or {}
        return ChatResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )


class ScriptedBackend:
    """Replays recorded responses for deterministic tests.

    Each record is ``{tag, key, text, prompt_tokens, completion_tokens}``;
    records with the same (tag, key) form a queue consumed in file order.
    ``key`` is a request's canonical key, or ``"*"`` to match any request
    of that tag. Consumption is serialized under a lock.
    """

    WILDCARD = "*"

    def __init__(self, records: Iterable[Mapping[str, Any]]) -> None:
        self._lock = threading.Lock()
        self._queues: dict[tuple[str, str], deque[Mapping[str, Any]]] = {}
        self.consumed = 0
        for record in records:
            tag = record["tag"]
            if tag not in PROMPT_KINDS:
                raise ScriptError(f"script record has unknown tag {tag!r}")
            key = record.get("key", self.WILDCARD)
            self._queues.setdefault((tag, key), deque()).append(record)

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        records = []
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ScriptError(f"{path}:{lineno}: bad script record: {exc}") from exc
        return cls(records)

    def complete(self, request: ChatRequest) -> ChatResponse:
        exact = (request.tag, request.canonical_key())
        wild = (request.tag, self.WILDCARD)
        with self._lock:
            queue = self._queues.get(exact)
            if not queue:
                queue = self._queues.get(wild)
            if queue is None and exact not in self._queues and wild not in self._queues:
                raise ScriptError(f"script miss for tag {request.tag!r}")
            if not queue:
                raise ScriptError(f"script exhausted for tag {request.tag!r}")
            record = queue.popleft()
            self.consumed += 1
        return ChatResponse(
            text=record["text"],
            prompt_tokens=int(record.get("prompt_tokens", 0)),
            completion_tokens=int(record.get("completion_tokens", 0)),
        )


class OracleBackend:
    """Deterministic stand-in model scoring by token overlap.

    Reads the structured slot values from ``request.meta`` and writes its
    assessment in the same textual format a real model is prompted for, so
    responses still travel through the normal parsers. Mapping scores are
    ``overlap_score`` of the best clue for each offered graph element.
    """

    def __init__(self, stopwords: frozenset[str] = scoring.STOPWORDS) -> None:
        self.stopwords = stopwords

    def complete(self, request: ChatRequest) -> ChatResponse:
        handler = {
            "clue_extraction": self._extract,
            "relation_mapping": self._map_relations,
            "entity_mapping": self._map_entities,
            "answering": self._answer,
        }[request.tag]
        text = handler(request.meta)
        return ChatResponse(
            text=text,
            prompt_tokens=len(request.user_text().split()),
            completion_tokens=len(text.split()),
        )

    def _extract(self, meta: Mapping[str, Any]) -> str:
        runs = scoring.extract_keyword_runs(meta["question"], self.stopwords)
        rendered = ", ".join(f"'{run}'" for run in runs)
        return f"entities: [{rendered}]"

    @staticmethod
    def _assess_line(element_rendered: str, clue_text: str, score: int) -> str:
        if score > 0:
            return (
                f"- {element_rendered} is related to '{clue_text}', "
                f"so it's a match, ({score}) score."
            )
        return (
            f"- {element_rendered} is not related to any information "
            f"in the sentence, ({score}) score."
        )

    def _map_relations(self, meta: Mapping[str, Any]) -> str:
        clues = list(meta["candidates"])
        lines = []
        for label in meta["relations"]:
            pos, score = scoring.best_clue(clues, label)
            lines.append(self._assess_line(f"'{label}'", clues[pos], score))
        return "\n".join(lines) if lines else "no relations to assess"

    def _map_entities(self, meta: Mapping[str, Any]) -> str:
        clues = list(meta["candidates"])
        # Best pair per distinct entity: a tail reachable over several
        # accepted relations is judged once, on its most favourable pair.
        best: dict[str, tuple[int, int, str]] = {}
        for rel_label, ent_label in meta["pairs"]:
            pos, score = scoring.best_clue(clues, f"{rel_label} {ent_label}")
            if ent_label not in best or score > best[ent_label][1]:
                best[ent_label] = (pos, score, rel_label)
        lines = []
        for rel_label, ent_label in meta["pairs"]:
            if best[ent_label][2] != rel_label:
                continue
            pos, score, _ = best[ent_label]
            lines.append(
                self._assess_line(f"('{rel_label}', '{ent_label}')", clues[pos], score)
            )
        return "\n".join(lines) if lines else "no candidate entities to assess"

    def _answer(self, meta: Mapping[str, Any]) -> str:
        triples = list(meta.get("triples", ()))
        if not triples:
            return "I am not sure."
        heads = {h for h, _, _ in triples}
        leaves: list[str] = []
        for _, _, tail in triples:
            if tail not in heads and tail not in leaves:
                leaves.append(tail)
        if not leaves:
            return "I could not determine the answer."
        return f"The answer is {', '.join(leaves)}."


class Gateway:
    """A backend handle plus per-question accounting and budget enforcement.

    ``complete`` refuses the call once ``budget`` completions were recorded,
    mirroring the evaluation cutoff that aborts runaway explorations. HTTP
    transport failures are retried up to ``max_retries`` times.
    """

    def __init__(
        self,
        backend: Backend,
        ledger: CallLedger | None = None,
        budget: int | None = DEFAULT_CALL_BUDGET,
        max_retries: int = 2,
    ) -> None:
        if budget is not None and budget < 1:
            raise GatewayError("call budget must be >= 1")
        self.backend = backend
        self.ledger = ledger if ledger is not None else CallLedger()
        self.budget = budget
        self.max_retries = max_retries

    def remaining_calls(self) -> int | None:
        if self.budget is None:
            return None
        return max(0, self.budget - self.ledger.total_calls)

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self.budget is not None and self.ledger.total_calls >= self.budget:
            raise BudgetExceededError(f"call budget of {self.budget} exhausted")
        start = time.perf_counter()
        attempts = 0
        while True:
            try:
                response = self.backend.complete(request)
                break
            except TransientTransportError as exc:
                attempts += 1
                self.ledger.flag_retry()
                if attempts > self.max_retries:
                    raise TransportError(
                        f"transport failed after {attempts} attempts: {exc}"
                    ) from exc
                logger.warning("retrying %s call after transport failure: %s", request.tag, exc)
        self.ledger.record(request.tag, response, time.perf_counter() - start)
        return response
