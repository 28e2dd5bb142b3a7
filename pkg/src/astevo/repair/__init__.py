"""Turning I-Codes back into heuristics: policy, prompts, and providers."""

from __future__ import annotations

import enum
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..code import HeuristicCode
from .mock import MockProvider, fallback_source, mock_repair_rules, mock_semantic
from .prompts import build_repair_prompt, build_semantic_prompt
from .remote import Cassette, ChatClient, RemoteProvider, RemoteSettings, extract_code
from .types import (
    Completion,
    Context,
    Framing,
    Provider,
    ProviderFailure,
    ProviderKind,
    RepairRequest,
    RepairResponse,
    SemanticRequest,
    estimate_tokens,
)


class RepairMode(str, enum.Enum):
    ALWAYS = "Always"
    PROBABILISTIC = "Probabilistic"
    NEVER = "Never"


@dataclass
class RepairPolicy:
    mode: RepairMode = RepairMode.ALWAYS
    p: float = 1.0
    seed: int = 0
    _rng: random.Random = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self._rng = random.Random(self.seed)


def repair_needed(icode: HeuristicCode, policy: RepairPolicy) -> bool:
    """Whether to repair now (True) or add the I-Code to the population as is."""
    if policy.mode is RepairMode.ALWAYS:
        return True
    if policy.mode is RepairMode.NEVER:
        return False
    return policy._rng.random() < policy.p


def repair(req: RepairRequest, provider: Provider) -> RepairResponse:
    return provider.repair(req)


def make_provider(env: Optional[dict[str, str]] = None) -> Provider:
    """Provider chosen by ``PROVIDER`` (``mock`` or ``remote``).

    ``LLM_CASSETTE`` names a cassette file; ``LLM_CASSETTE_MODE`` is ``record``
    or ``replay`` (default ``replay``).
    """
    env = dict(os.environ if env is None else env)
    kind = env.get("PROVIDER", "mock").lower()
    if kind == "mock":
        return MockProvider()
    if kind != "remote":
        raise ValueError(f"PROVIDER must be 'mock' or 'remote', got {kind!r}")
    cassette = None
    if env.get("LLM_CASSETTE"):
        cassette = Cassette(Path(env["LLM_CASSETTE"]), env.get("LLM_CASSETTE_MODE", "replay"))
    return RemoteProvider(RemoteSettings.from_env(env), cassette)


__all__ = [
    "Cassette",
    "ChatClient",
    "Completion",
    "Context",
    "Framing",
    "MockProvider",
    "Provider",
    "ProviderFailure",
    "ProviderKind",
    "RemoteProvider",
    "RemoteSettings",
    "RepairMode",
    "RepairPolicy",
    "RepairRequest",
    "RepairResponse",
    "SemanticRequest",
    "build_repair_prompt",
    "build_semantic_prompt",
    "estimate_tokens",
    "extract_code",
    "fallback_source",
    "make_provider",
    "mock_repair_rules",
    "mock_semantic",
    "repair",
    "repair_needed",
]
