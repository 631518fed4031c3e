"""Chat-completion clients: an HTTP client with retries and token accounting,
and a deterministic scripted mock for tests and fixture replays."""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

DEFAULT_TEMPERATURE = 0.8
DEFAULT_MAX_TOKENS = 2048
RETRY_DELAYS_S = (0.5, 1.0, 2.0)
DEFAULT_INFLIGHT_CAP = 4

ENV_URL = "LLM_API_URL"
ENV_KEY = "LLM_API_KEY"
ENV_MODEL = "LLM_MODEL"


class LlmUnavailable(RuntimeError):
    pass


class MalformedResponse(RuntimeError):
    pass


class MockScriptViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple          # of {"role": ..., "content": ...}
    model: str = ""
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    @classmethod
    def user(cls, prompt: str, **kw) -> "ChatRequest":
        return cls(messages=({"role": "user", "content": prompt},), **kw)

    def prompt_text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int
    completion_tokens: int


class UsageLedger:
    """Thread-safe token accounting with optional named buckets."""

    def __init__(self):
        self._lock = threading.Lock()
        self.prompt_tokens = 0
        self.completion_tokens = 0
        self.call_count = 0
        self.retry_count = 0
        self.buckets: dict[str, dict[str, int]] = {}

    def record(self, prompt_tokens: int, completion_tokens: int, bucket: str | None = None):
        with self._lock:
            self.prompt_tokens += prompt_tokens
            self.completion_tokens += completion_tokens
            self.call_count += 1
            if bucket is not None:
                b = self.buckets.setdefault(bucket, {"prompt": 0, "completion": 0, "calls": 0})
                b["prompt"] += prompt_tokens
                b["completion"] += completion_tokens
                b["calls"] += 1

    def record_retry(self):
        with self._lock:
            self.retry_count += 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def tokens_per_call(self) -> float:
        return self.total_tokens / self.call_count if self.call_count else 0.0


class HttpChatClient:
    """OpenAI-style JSON chat endpoint with bounded retries and backoff."""

    def __init__(self, url: str, api_key: str = "", model: str = "",
                 session=None, sleep=time.sleep, inflight_cap: int = DEFAULT_INFLIGHT_CAP):
        if not url:
            raise LlmUnavailable("no endpoint URL configured")
        self.url = url
        self.api_key = api_key
        self.model = model
        self.session = session or requests.Session()
        self.sleep = sleep
        self.ledger = UsageLedger()
        self._gate = threading.BoundedSemaphore(inflight_cap)

    @classmethod
    def from_env(cls, **kw) -> "HttpChatClient":
        url = os.environ.get(ENV_URL, "")
        if not url:
            raise LlmUnavailable(f"{ENV_URL} is not set")
        return cls(url, api_key=os.environ.get(ENV_KEY, ""),
                   model=os.environ.get(ENV_MODEL, ""), **kw)

    def complete(self, req: ChatRequest, bucket: str | None = None) -> ChatResponse:
        body = {
            "model": req.model or self.model,
            "messages": list(req.messages),
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error = None
        with self._gate:
            for attempt in range(len(RETRY_DELAYS_S) + 1):
                if attempt:
                    self.ledger.record_retry()
                    self.sleep(RETRY_DELAYS_S[attempt - 1])
                try:
                    resp = self.session.post(self.url, json=body, headers=headers, timeout=120)
                except requests.RequestException as exc:
                    last_error = f"transport error: {exc}"
                    continue
                if resp.status_code >= 500:
                    last_error = f"server error {resp.status_code}"
                    continue
                if resp.status_code != 200:
                    raise LlmUnavailable(f"endpoint returned {resp.status_code}: {resp.text[:200]}")
                return self._parse(resp, bucket)
        raise LlmUnavailable(f"giving up after retries: {last_error}")

    def _parse(self, resp, bucket: str | None) -> ChatResponse:
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
            prompt_tokens = int(usage.get("prompt_tokens", 0))
            completion_tokens = int(usage.get("completion_tokens", 0))
        except (KeyError, IndexError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise MalformedResponse(f"cannot parse completion: {exc}") from exc
        if not content:
            raise MalformedResponse("empty completion content")
        self.ledger.record(prompt_tokens, completion_tokens, bucket)
        return ChatResponse(content, prompt_tokens, completion_tokens)


@dataclass(frozen=True)
class ScriptStep:
    hint: str
    response: str
    prompt_tokens: int = 100
    completion_tokens: int = 50


class ScriptedMockClient:
    """Replays a fixed script; each step asserts its hint appears in the prompt."""

    def __init__(self, script: list[ScriptStep]):
        if not script:
            raise ValueError("script must be nonempty")
        self.script = list(script)
        self._pos = 0
        self._lock = threading.Lock()
        self.ledger = UsageLedger()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedMockClient":
        rows = json.loads(Path(path).read_text())
        return cls([
            ScriptStep(
                hint=r.get("hint", ""),
                response=r["response"],
                prompt_tokens=int(r.get("prompt_tokens", 100)),
                completion_tokens=int(r.get("completion_tokens", 50)),
            )
            for r in rows
        ])

    def complete(self, req: ChatRequest, bucket: str | None = None) -> ChatResponse:
        with self._lock:
            if self._pos >= len(self.script):
                raise MockScriptViolation("exhausted: no scripted response left")
            step = self.script[self._pos]
            self._pos += 1
        if step.hint and step.hint not in req.prompt_text():
            raise MockScriptViolation(f"expected hint {step.hint!r} in prompt")
        self.ledger.record(step.prompt_tokens, step.completion_tokens, bucket)
        return ChatResponse(step.response, step.prompt_tokens, step.completion_tokens)

    def assert_exhausted(self):
        if self._pos != len(self.script):
            raise MockScriptViolation(
                f"script not fully consumed: {self._pos}/{len(self.script)}"
            )
