"""Populations, repair-aware fitness, and the framework drivers."""

from .engine import Deps, fitness
from .frameworks import (
    OPERATORS,
    ast_offspring,
    baseline_semantic_generation,
    complementary_survivors,
    eoh_i_generation,
    eohs_i_generation,
    final_set,
    ii_strategy,
    reevo_i_generation,
    semantic_offspring,
    short_reflection_text,
)
from .run import TIMING_KEY, RunResult, run, seed_population
from .selection import dedupe, exhaustive_best_subset, greedy_complementary, set_objective, tournament, truncate
from .types import (
    ConfigError,
    Framework,
    Individual,
    Population,
    ReflectionState,
    RunConfig,
    TokenLedger,
)

__all__ = [
    "OPERATORS",
    "TIMING_KEY",
    "ConfigError",
    "Deps",
    "Framework",
    "Individual",
    "Population",
    "ReflectionState",
    "RunConfig",
    "RunResult",
    "TokenLedger",
    "ast_offspring",
    "baseline_semantic_generation",
    "complementary_survivors",
    "dedupe",
    "eoh_i_generation",
    "eohs_i_generation",
    "exhaustive_best_subset",
    "final_set",
    "fitness",
    "greedy_complementary",
    "ii_strategy",
    "reevo_i_generation",
    "run",
    "seed_population",
    "semantic_offspring",
    "set_objective",
    "short_reflection_text",
    "tournament",
    "truncate",
]
