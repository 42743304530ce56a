"""Deterministic chat-completions client.

Decoding is pinned: temperature 0, one choice, no sampling knobs exposed.
Credentials are read from the environment variable named in the profile at
request time and never stored.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx

from rankfleet.errors import LlmEndpointError, LlmTransportError, ValidationError

logger = logging.getLogger(__name__)

# Status codes worth another attempt.
_RETRYABLE = {408, 409, 425, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class LlmProfile:
    endpoint: str
    model_name: str
    mode: str = "chat"
    max_reply_tokens: int = 64
    retry_limit: int = 3
    backoff_base: float = 0.5
    request_timeout: float = 60.0
    credentials_env: str | None = None

    # Fixed decoding settings, not constructor arguments.
    @property
    def temperature(self) -> float:
        return 0.0

    @property
    def sampling(self) -> bool:
        return False

    def __post_init__(self):
        if self.mode not in ("chat", "completion"):
            raise ValidationError(f"llm mode must be 'chat' or 'completion', got {self.mode!r}")
        if self.max_reply_tokens < 1:
            raise ValidationError("max_reply_tokens must be >= 1")
        if self.retry_limit < 0:
            raise ValidationError("retry_limit must be >= 0")


def to_messages(prompt, mode: str) -> list[dict[str, str]]:
    if isinstance(prompt, str):
        return [{"role": "user", "content": prompt}]
    if mode == "chat":
        return [dict(m) for m in prompt]
    # completion mode sends a single user turn
    return [{"role": "user", "content": "\n\n".join(m["content"] for m in prompt)}]


class LlmClient:
    """Sends prompts to one endpoint; counts attempts for observability."""

    def __init__(self, profile: LlmProfile, transport: httpx.BaseTransport | None = None):
        self.profile = profile
        self._http = httpx.Client(transport=transport, timeout=profile.request_timeout)
        self._lock = threading.Lock()
        self.attempts = 0
        self.requests = 0

    def close(self):
        self._http.close()

    def payload(self, prompt) -> dict:
        return {
            "model": self.profile.model_name,
            "messages": to_messages(prompt, self.profile.mode),
            "temperature": 0.0,
            "n": 1,
            "max_tokens": self.profile.max_reply_tokens,
        }

    def _headers(self) -> dict[str, str]:
        env = self.profile.credentials_env
        if env:
            token = os.environ.get(env)
            if token:
                return {"Authorization": f"Bearer {token}"}
        return {}

    def complete(self, prompt) -> str:
        body = self.payload(prompt)
        with self._lock:
            self.requests += 1
        last: Exception | None = None
        for attempt in range(self.profile.retry_limit + 1):
            if attempt:
                time.sleep(self.profile.backoff_base * 2 ** (attempt - 1))
            with self._lock:
                self.attempts += 1
            try:
                resp = self._http.post(self.profile.endpoint, json=body, headers=self._headers())
            except httpx.TransportError as exc:
                last = LlmTransportError(f"{self.profile.endpoint}: {exc!r}")
                logger.debug("attempt %d failed: %r", attempt + 1, exc)
                continue
            if resp.status_code in _RETRYABLE:
                last = LlmEndpointError(f"{self.profile.endpoint}: HTTP {resp.status_code}", resp.status_code)
                continue
            if resp.status_code != 200:
                raise LlmEndpointError(f"{self.profile.endpoint}: HTTP {resp.status_code}", resp.status_code)
            return _extract_text(resp)
        assert last is not None
        raise last


def _extract_text(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        choice = data["choices"][0]
        if "message" in choice:
            return choice["message"]["content"] or ""
        return choice["text"] or ""
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise LlmEndpointError(f"unexpected reply shape: {exc!r}", resp.status_code) from exc
