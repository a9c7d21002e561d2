"""Chat-completion client (live or replayed from fixtures) and response parsers."""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import httpx

from logicerr.errors import (
    AugmentationParseError,
    AugmentationSchemaError,
    ConfigurationError,
    CredentialError,
    FixtureError,
    TransportError,
)

logger = logging.getLogger(__name__)

API_KEY_ENV = "LOGICERR_API_KEY"
API_BASE_ENV = "LOGICERR_API_BASE"
DEFAULT_API_BASE = "https://api.openai.com/v1"

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}
EXCERPT_CHARS = 500


@dataclass(frozen=True)
class ModelConfig:
    model_id: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    endpoint_base: str | None = None
    timeout: float = 60.0
    max_attempts: int = 4
    backoff: float = 1.0
    transport: str = "live"
    fixture_path: str | None = None
    max_in_flight: int = 4

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigurationError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ConfigurationError("max_output_tokens must be positive")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be > 0")
        if self.max_attempts < 1:
            raise ConfigurationError("max_attempts must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be >= 1")
        if self.transport not in ("live", "mock"):
            raise ConfigurationError(f"unknown transport {self.transport!r}")
        if self.transport == "mock" and not self.fixture_path:
            raise ConfigurationError("mock transport needs a fixture_path")


@dataclass(frozen=True)
class ChatExchange:
    prompt_text: str
    raw_response: str
    model_id: str
    latency: float
    attempt_count: int

    @property
    def prompt_hash(self) -> str:
        return prompt_hash(self.prompt_text)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


# --- exchange log / fixtures ------------------------------------------------------

class ExchangeLog:
    """Append-only ``exchanges.jsonl``; the same file replays through :class:`MockTransport`."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, exchange: ChatExchange) -> None:
        record = {
            "hash": exchange.prompt_hash,
            "prompt": exchange.prompt_text,
            "response": exchange.raw_response,
            "model": exchange.model_id,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line)


def load_fixtures(path: str | os.PathLike) -> dict[str, str]:
    fixtures: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = rec.get("hash") or prompt_hash(rec["prompt"])
                fixtures[key] = rec["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ConfigurationError(f"{path}:{lineno}: bad fixture record ({e})") from e
    return fixtures


class MockTransport:
    def __init__(self, fixtures: dict[str, str]):
        self.fixtures = fixtures
        self.hits: list[str] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "MockTransport":
        return cls(load_fixtures(path))

    def respond(self, prompt: str) -> str:
        key = prompt_hash(prompt)
        with self._lock:
            self.hits.append(key)
        try:
            return self.fixtures[key]
        except KeyError:
            raise FixtureError(key) from None


# --- client -------------------------------------------------------------------

class ChatClient:
    """Sends one-message chat completions, bounded to ``max_in_flight`` concurrent calls.

    Rate-limit backoff is shared: a 429 on one thread delays every other
    thread's next attempt as well.
    """

    def __init__(
        self,
        config: ModelConfig,
        *,
        http: httpx.Client | None = None,
        log: ExchangeLog | None = None,
        mock: MockTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        env: dict[str, str] | None = None,
    ):
        self.config = config
        self.log = log
        self._sleep = sleep
        self._env = os.environ if env is None else env
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._state_lock = threading.Lock()
        self._resume_at = 0.0
        self.mock = mock
        if config.transport == "mock" and mock is None:
            self.mock = MockTransport.from_file(config.fixture_path)
        self._http = http

    @property
    def endpoint(self) -> str:
        base = self.config.endpoint_base or self._env.get(API_BASE_ENV) or DEFAULT_API_BASE
        return base.rstrip("/") + "/chat/completions"

    def _client(self) -> httpx.Client:
        if self._http is None:
            self._http = httpx.Client(timeout=self.config.timeout)
        return self._http

    def close(self) -> None:
        if self._http is not None:
            self._http.close()

    def complete(self, prompt: str) -> ChatExchange:
        if self.mock is not None:
            return ChatExchange(prompt, self.mock.respond(prompt), self.config.model_id, 0.0, 1)
        with self._slots:
            exchange = self._complete_live(prompt)
        if self.log is not None:
            self.log.append(exchange)
        return exchange

    def _wait_turn(self) -> None:
        with self._state_lock:
            delay = self._resume_at - time.monotonic()
        if delay > 0:
            self._sleep(delay)

    def _push_back(self, delay: float) -> None:
        with self._state_lock:
            self._resume_at = max(self._resume_at, time.monotonic() + delay)

    def _complete_live(self, prompt: str) -> ChatExchange:
        key = self._env.get(API_KEY_ENV)
        if not key:
            raise CredentialError(f"{API_KEY_ENV} is not set")
        body = {
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        headers = {"Authorization": f"Bearer {key}"}
        started = time.monotonic()
        last_error = "no attempt made"
        for attempt in range(1, self.config.max_attempts + 1):
            self._wait_turn()
            try:
                resp = self._client().post(self.endpoint, json=body, headers=headers, timeout=self.config.timeout)
            except httpx.TimeoutException as e:
                last_error = f"timeout: {e}"
            except httpx.TransportError as e:
                last_error = f"connection failure: {e}"
            else:
                if resp.status_code in (401, 403):
                    raise CredentialError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 200:
                    text = _message_text(resp)
                    return ChatExchange(prompt, text, self.config.model_id, time.monotonic() - started, attempt)
                if resp.status_code not in RETRYABLE_STATUS:
                    raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                last_error = f"HTTP {resp.status_code}"
                if resp.status_code == 429:
                    self._push_back(_retry_after(resp) or self._backoff(attempt))
            if attempt < self.config.max_attempts:
                logger.warning("attempt %d/%d failed (%s); retrying", attempt, self.config.max_attempts, last_error)
                self._push_back(self._backoff(attempt))
        raise TransportError(f"gave up after {self.config.max_attempts} attempts: {last_error}")

    def _backoff(self, attempt: int) -> float:
        return self.config.backoff * 2 ** (attempt - 1)


def _retry_after(resp: httpx.Response) -> float | None:
    try:
        return float(resp.headers["retry-after"])
    except (KeyError, ValueError):
        return None


def _message_text(resp: httpx.Response) -> str:
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise TransportError(f"malformed chat-completion response: {e}") from e
    return content or ""


def complete(prompt: str, config: ModelConfig) -> ChatExchange:
    client = ChatClient(config)
    try:
        return client.complete(prompt)
    finally:
        client.close()


# --- parsers ------------------------------------------------------------------

class VerdictValue(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    UNPARSEABLE = "Unparseable"


@dataclass(frozen=True)
class Verdict:
    value: VerdictValue
    reasoning_excerpt: str = ""

    @property
    def is_yes(self) -> bool:
        return self.value is VerdictValue.YES


_ANSWER_MARKER = re.compile(r"answer\s*(?:[:：]|-|\bis\b)", re.IGNORECASE)
_TOKEN = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def parse_verdict(raw_response: str) -> Verdict:
    """Extract the Yes/No verdict from a model response.

    After the last answer marker ("Answer:", "Final answer:", "the answer is")
    the first standalone yes/no wins; without a marker, the last one in the
    whole text does.  Anything else is Unparseable.
    """
    excerpt = raw_response[-EXCERPT_CHARS:]
    markers = list(_ANSWER_MARKER.finditer(raw_response))
    if markers:
        match = _TOKEN.search(raw_response, markers[-1].end())
    else:
        tokens = list(_TOKEN.finditer(raw_response))
        match = tokens[-1] if tokens else None
    if match is None:
        return Verdict(VerdictValue.UNPARSEABLE, excerpt)
    value = VerdictValue.YES if match.group(1).lower() == "yes" else VerdictValue.NO
    return Verdict(value, excerpt)


CODE_KEYS = ("code", "augmented_code", "source")


@dataclass(frozen=True)
class AugmentationPayload:
    code: str
    extra_fields: dict[str, Any] = field(default_factory=dict)


def _first_json_object(text: str) -> dict | None:
    decoder = json.JSONDecoder(strict=False)
    pos = text.find("{")
    while pos != -1:
        try:
            obj, _ = decoder.raw_decode(text, pos)
        except ValueError:
            obj = None
        if isinstance(obj, dict):
            return obj
        pos = text.find("{", pos + 1)
    return None


def parse_augmentation(raw_response: str) -> AugmentationPayload:
    obj = _first_json_object(raw_response)
    if obj is None:
        raise AugmentationParseError("no JSON object found in response")
    for key in CODE_KEYS:
        if isinstance(obj.get(key), str):
            extra = {k: v for k, v in obj.items() if k != key}
            return AugmentationPayload(obj[key], extra)
    raise AugmentationSchemaError(
        f"JSON object has no code field (expected one of {', '.join(CODE_KEYS)}; got {', '.join(obj) or 'none'})"
    )
