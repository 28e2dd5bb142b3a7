"""OpenAI-compatible chat-completion backend with record/replay cassettes."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

from ..code import Origin, SourceText
from ..hdsl import HOLE
from .prompts import build_repair_prompt, build_semantic_prompt
from .types import (
    Completion,
    ProviderFailure,
    ProviderKind,
    RepairRequest,
    RepairResponse,
    SemanticRequest,
)

log = logging.getLogger(__name__)

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def extract_code(response: str) -> str:
    """First fenced block of ``response``, or the whole text if there is none."""
    m = _FENCE.search(response)
    return (m.group(1) if m else response).strip() + "\n"


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RemoteSettings:
    base_url: str = "http://localhost:8000/v1"
    api_key: str = ""
    model: str = "qwen-flash"
    timeout_s: float = 60.0
    max_retries: int = 2
    backoff_s: float = 1.0
    temperature: float = 1.0
    max_in_flight: int = 4

    @classmethod
    def from_env(cls, env: Optional[dict[str, str]] = None) -> "RemoteSettings":
        env = dict(os.environ if env is None else env)
        base = cls()
        return cls(
            base_url=env.get("LLM_BASE_URL", base.base_url),
            api_key=env.get("LLM_API_KEY", base.api_key),
            model=env.get("LLM_MODEL", base.model),
            timeout_s=float(env.get("LLM_TIMEOUT_S", base.timeout_s)),
            max_retries=int(env.get("LLM_MAX_RETRIES", base.max_retries)),
            max_in_flight=int(env.get("LLM_MAX_IN_FLIGHT", base.max_in_flight)),
        )


class ChatClient:
    """Single-turn ``POST {base_url}/chat/completions`` with bounded retries."""

    def __init__(self, settings: RemoteSettings, transport: Optional[httpx.BaseTransport] = None) -> None:
        self.settings = settings
        self.attempts = 0
        headers = {"Content-Type": "application/json"}
        if settings.api_key:
            headers["Authorization"] = f"Bearer {settings.api_key}"
        self._http = httpx.Client(
            base_url=settings.base_url.rstrip("/") + "/",
            headers=headers,
            timeout=settings.timeout_s,
            transport=transport,
        )

    def complete(self, prompt: str) -> Completion:
        body = {
            "model": self.settings.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.settings.temperature,
        }
        last: Optional[Exception] = None
        for attempt in range(self.settings.max_retries + 1):
            self.attempts += 1
            try:
                resp = self._http.post("chat/completions", json=body)
                resp.raise_for_status()
                data = resp.json()
                text = data["choices"][0]["message"]["content"] or ""
                usage = data.get("usage") or {}
                return Completion(text, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0)))
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last = exc
                log.warning("chat completion attempt %d failed: %s", attempt + 1, exc)
                if attempt < self.settings.max_retries and self.settings.backoff_s > 0:
                    time.sleep(self.settings.backoff_s * 2**attempt)
        raise ProviderFailure(f"chat completion failed after {self.settings.max_retries + 1} attempts: {last}")

    def close(self) -> None:
        self._http.close()


class Cassette:
    """JSONL log of prompt -> response, for recording or replaying a run.

    Lines are ``{prompt_hash, response_text, tokens_in, tokens_out}``. Replay
    serves repeated prompts in recorded order and cycles once exhausted.
    """

    def __init__(self, path: Path, mode: str) -> None:
        if mode not in ("record", "replay"):
            raise ValueError("cassette mode must be 'record' or 'replay'")
        self.path = Path(path)
        self.mode = mode
        self._lock = threading.Lock()
        self._entries: dict[str, list[Completion]] = {}
        self._cursor: dict[str, int] = {}
        if mode == "replay":
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    d = json.loads(line)
                    c = Completion(d["response_text"], int(d["tokens_in"]), int(d["tokens_out"]))
                    self._entries.setdefault(d["prompt_hash"], []).append(c)
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")

    def lookup(self, prompt: str) -> Completion:
        key = prompt_hash(prompt)
        with self._lock:
            hits = self._entries.get(key)
            if not hits:
                raise ProviderFailure(f"cassette {self.path} has no response for prompt {key[:12]}")
            i = self._cursor.get(key, 0)
            self._cursor[key] = i + 1
            return hits[i % len(hits)]

    def record(self, prompt: str, c: Completion) -> None:
        line = json.dumps(
            {"prompt_hash": prompt_hash(prompt), "response_text": c.text, "tokens_in": c.tokens_in, "tokens_out": c.tokens_out}
        )
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


class RemoteProvider:
    kind = ProviderKind.REMOTE

    def __init__(
        self,
        settings: Optional[RemoteSettings] = None,
        cassette: Optional[Cassette] = None,
        transport: Optional[httpx.BaseTransport] = None,
        complete: Optional[Callable[[str], Completion]] = None,
    ) -> None:
        self.settings = settings or RemoteSettings.from_env()
        self.cassette = cassette
        self.client: Optional[ChatClient] = None
        if complete is not None:
            self._complete = complete
        elif cassette is not None and cassette.mode == "replay":
            self._complete = cassette.lookup
        else:
            self.client = ChatClient(self.settings, transport)
            self._complete = self.client.complete

    def complete(self, prompt: str) -> Completion:
        c = self._complete(prompt)
        if self.cassette is not None and self.cassette.mode == "record":
            self.cassette.record(prompt, c)
        return c

    def _code_response(self, prompt: str, variants: int) -> RepairResponse:
        texts, tin, tout = [], 0, 0
        for _ in range(variants):
            c = self.complete(prompt)
            tin += c.tokens_in
            tout += c.tokens_out
            text = extract_code(c.text) if c.text.strip() else ""
            if HOLE in text:  # still broken; the hole token is reserved for unparser output
                log.warning("dropping a response that still contains the hole token")
                continue
            if text.strip():
                texts.append(SourceText(text, Origin.LLM))
        return RepairResponse(tuple(texts), tin, tout, self.kind, prompt)

    def repair(self, req: RepairRequest) -> RepairResponse:
        return self._code_response(build_repair_prompt(req), req.want_variants)

    def semantic(self, req: SemanticRequest) -> RepairResponse:
        return self._code_response(build_semantic_prompt(req), 1)

    def reflect(self, prompt: str, fallback: str) -> Completion:
        c = self.complete(prompt)
        return c if c.text.strip() else Completion(fallback, c.tokens_in, c.tokens_out)

    def repair_many(self, reqs: Sequence[RepairRequest]) -> list[RepairResponse]:
        """Issue requests concurrently; results come back in request order."""
        with ThreadPoolExecutor(max_workers=max(1, self.settings.max_in_flight)) as pool:
            return list(pool.map(self.repair, reqs))
