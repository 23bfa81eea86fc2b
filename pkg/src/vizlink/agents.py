"""Client layer for the three pipeline agents with pluggable backends.

Roles: a vision agent that interprets free-drawing sketches, a linker
agent that ties trigger phrases to manipulations, and the chart-code
generator. Tests and offline runs use the deterministic ScriptedBackend;
production uses a chat-completions-style HTTP backend.
"""

from __future__ import annotations

import base64
import hashlib
import os
import re
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import AgentTimeout, AgentUnavailable, RateLimited, UnknownModel

DEFAULT_TIMEOUT_SECS = 120.0

ENV_API_URL = "AGENT_API_URL"
ENV_API_KEY = "AGENT_API_KEY"
ENV_TIMEOUT = "AGENT_TIMEOUT_SECS"


class AgentRole(str, Enum):
    DESCRIPTOR_VISION = "DescriptorVision"
    LINKER = "Linker"
    VIS_GENERATOR = "VisGenerator"


@dataclass(frozen=True)
class AgentRequest:
    """One agent call. Only vision requests carry an image."""

    role: AgentRole
    prompt: str
    model_id: str
    image: bytes | None = None

    def __post_init__(self):
        has_image = self.image is not None
        if has_image != (self.role == AgentRole.DESCRIPTOR_VISION):
            raise ValueError(
                "image must be present exactly when role is DescriptorVision"
            )


def _normalize_whitespace(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def request_fingerprint(request: AgentRequest) -> str:
    """Stable fixture key: role, model, whitespace-normalized prompt, image hash."""
    image_hash = hashlib.sha256(request.image or b"").hexdigest()
    payload = "\x00".join(
        [
            request.role.value,
            request.model_id,
            _normalize_whitespace(request.prompt),
            image_hash,
        ]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class AgentLogEntry:
    """Append-only record reconstructing one request byte-exactly."""

    seq: int
    role: str
    model_id: str
    prompt: str
    image_b64: str | None
    response: str
    backend_kind: str
    timestamp: str

    def to_doc(self) -> dict:
        return {
            "seq": self.seq,
            "role": self.role,
            "modelId": self.model_id,
            "prompt": self.prompt,
            "imageB64": self.image_b64,
            "response": self.response,
            "backendKind": self.backend_kind,
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_doc(doc: dict) -> "AgentLogEntry":
        return AgentLogEntry(
            seq=doc["seq"],
            role=doc["role"],
            model_id=doc["modelId"],
            prompt=doc["prompt"],
            image_b64=doc.get("imageB64"),
            response=doc["response"],
            backend_kind=doc["backendKind"],
            timestamp=doc["timestamp"],
        )

    def reconstruct_request(self) -> AgentRequest:
        image = base64.b64decode(self.image_b64) if self.image_b64 is not None else None
        return AgentRequest(
            role=AgentRole(self.role),
            prompt=self.prompt,
            model_id=self.model_id,
            image=image,
        )


class AgentBackend(Protocol):
    kind: str

    def complete(self, request: AgentRequest) -> str: ...


class ScriptedBackend:
    """Deterministic fixture-driven backend.

    Responses are keyed by request fingerprint; a directory of files named
    by fingerprint can seed the table. An optional responder function may
    answer requests with no exact fixture — it must be a pure function of
    the request so replays stay deterministic.
    """

    kind = "scripted"

    def __init__(
        self,
        responses: dict[str, str] | None = None,
        responder: Callable[[AgentRequest], str | None] | None = None,
    ):
        self.responses = dict(responses or {})
        self.responder = responder
        self.calls = 0

    @classmethod
    def from_dir(cls, fixture_dir: str | Path) -> "ScriptedBackend":
        responses = {}
        for path in sorted(Path(fixture_dir).iterdir()):
            if path.is_file():
                responses[path.stem] = path.read_text(encoding="utf-8")
        return cls(responses)

    def add(self, request: AgentRequest, response: str) -> str:
        fingerprint = request_fingerprint(request)
        self.responses[fingerprint] = response
        return fingerprint

    def complete(self, request: AgentRequest) -> str:
        self.calls += 1
        fingerprint = request_fingerprint(request)
        if fingerprint in self.responses:
            return self.responses[fingerprint]
        if self.responder is not None:
            scripted = self.responder(request)
            if scripted is not None:
                return scripted
        raise AgentUnavailable(
            f"no scripted fixture for fingerprint {fingerprint} "
            f"(role={request.role.value}, model={request.model_id})"
        )


class HttpBackend:
    """Chat-completions-style HTTP backend; endpoint fully configurable.

    One automatic retry on transport errors; malformed content is never
    retried here (the pipeline surfaces it to the user instead).
    """

    kind = "live"

    def __init__(
        self,
        api_url: str | None = None,
        api_key: str | None = None,
        timeout_secs: float | None = None,
    ):
        self.api_url = api_url or os.environ.get(ENV_API_URL, "")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        if timeout_secs is None:
            timeout_secs = float(os.environ.get(ENV_TIMEOUT, DEFAULT_TIMEOUT_SECS))
        self.timeout_secs = timeout_secs

    def _payload(self, request: AgentRequest) -> dict:
        if request.image is not None:
            image_b64 = base64.b64encode(request.image).decode("ascii")
            content = [
                {"type": "text", "text": request.prompt},
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{image_b64}"},
                },
            ]
        else:
            content = request.prompt
        return {
            "model": request.model_id,
            "messages": [{"role": "user", "content": content}],
            # provider's most deterministic setting; recorded in the agent log
            "temperature": 0,
        }

    def complete(self, request: AgentRequest) -> str:
        if not self.api_url:
            raise AgentUnavailable(f"{ENV_API_URL} is not configured")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = self._payload(request)
        last_error: Exception | None = None
        for attempt in range(2):
            try:
                response = httpx.post(
                    self.api_url,
                    json=payload,
                    headers=headers,
                    timeout=self.timeout_secs,
                )
            except httpx.TimeoutException as exc:
                raise AgentTimeout(
                    f"agent call timed out after {self.timeout_secs}s"
                ) from exc
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt == 0:
                    time.sleep(0.2)
                    continue
                raise AgentUnavailable(f"transport error: {exc}") from exc
            if response.status_code == 429:
                retry_after = response.headers.get("Retry-After")
                raise RateLimited(
                    "agent rate limited",
                    retry_after=float(retry_after) if retry_after else None,
                )
            if response.status_code >= 400:
                raise AgentUnavailable(
                    f"agent returned HTTP {response.status_code}: {response.text[:200]}"
                )
            body = response.json()
            try:
                return body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise AgentUnavailable(
                    f"unexpected response shape from agent endpoint: {exc}"
                ) from exc
        raise AgentUnavailable(f"transport error: {last_error}")


def complete(
    backend: AgentBackend,
    request: AgentRequest,
    log: list[AgentLogEntry] | None = None,
) -> str:
    """Run one agent call and append the request/response pair to the log."""
    response = backend.complete(request)
    if log is not None:
        image_b64 = (
            base64.b64encode(request.image).decode("ascii")
            if request.image is not None
            else None
        )
        log.append(
            AgentLogEntry(
                seq=len(log),
                role=request.role.value,
                model_id=request.model_id,
                prompt=request.prompt,
                image_b64=image_b64,
                response=response,
                backend_kind=backend.kind,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        )
    return response


@dataclass
class ModelRegistry:
    """Configured model ids; requests may only name registered models."""

    model_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.model_ids:
            raise ValueError("model registry must list at least one model id")

    @property
    def default(self) -> str:
        return self.model_ids[0]

    def require(self, model_id: str) -> str:
        if model_id not in self.model_ids:
            raise UnknownModel(f"model {model_id!r} is not registered")
        return model_id


def switch_model(session, model_id: str, registry: ModelRegistry):
    """Point a session's subsequent agent requests at another registered model.

    Prior agent-log entries keep the model id they were issued with.
    """
    registry.require(model_id)
    session.model_id = model_id
    return session
