"""Run driver: seeding, the generation loop, the JSONL log and the manifest."""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from ..code import HeuristicCode, Origin
from ..problems import PROBLEMS, evaluate_suite, resolve_suite
from ..repair import Provider, make_provider
from ..seeds import seed_sources
from .engine import Deps
from .frameworks import (
    baseline_semantic_generation,
    eoh_i_generation,
    eohs_i_generation,
    final_set,
    objective_matrix,
    reevo_i_generation,
)
from .selection import set_objective, truncate
from .types import Framework, Individual, Population, ReflectionState, RunConfig

log = logging.getLogger(__name__)

# manifest key that holds wall-clock data; determinism checks ignore it
TIMING_KEY = "timing"


@dataclass
class RunResult:
    config: RunConfig
    population: Population
    best: Individual
    final_set: Optional[list[Individual]]
    set_objective: Optional[float]
    deps: Deps
    generations: list[dict] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def ledger(self):
        return self.deps.ledger

    def best_series(self) -> list[float]:
        return [g["best_fitness"] for g in self.generations]

    def log_lines(self) -> list[str]:
        return [json.dumps(g, sort_keys=True) for g in self.generations]

    def write(self, out_dir: Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log_path = out / "generations.jsonl"
        log_path.write_text("".join(line + "\n" for line in self.log_lines()), encoding="utf-8")
        man_path = out / "manifest.json"
        man_path.write_text(json.dumps(self.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return log_path, man_path


def seed_population(cfg: RunConfig, deps: Deps) -> Population:
    inds = []
    for text in seed_sources(cfg.problem):
        code = HeuristicCode.from_text(text, Origin.SEED, deps.arity)
        if not code.is_valid:
            raise ValueError(f"bundled seed is invalid:\n{code.violations_summary()}")
        inds.append(deps.scored(code, "seed"))
    return Population(truncate(inds, cfg.pop_size), cfg.pop_size, cfg.seed)


def _entry(gen: int, pop: Population, deps: Deps, extra: Optional[dict] = None) -> dict:
    d = {
        "gen": gen,
        "best_fitness": pop.best().fitness,
        "population": [m.log_entry() for m in sorted(pop.members, key=Individual.rank_key)],
        "ledger_snapshot": deps.ledger.snapshot(),
    }
    d.update(extra or {})
    return d


def _describe(ind: Individual, deps: Deps) -> dict:
    d = {
        "fingerprint": ind.fingerprint,
        "fitness": ind.fitness,
        "valid": ind.code.is_valid,
        "operator": ind.operator,
        "source": ind.code.text,
    }
    twin = deps.twin_of(ind)
    if twin is not None:
        d["repaired_twin"] = {"fingerprint": twin.fingerprint, "fitness": twin.fitness, "source": twin.code.text}
    return d


def _valid_code(ind: Individual, deps: Deps) -> Optional[HeuristicCode]:
    if ind.code.is_valid:
        return ind.code
    twin = deps.twin_of(ind)
    return twin.code if twin is not None else None


def run(
    cfg: RunConfig,
    provider: Optional[Provider] = None,
    suite: Optional[Sequence] = None,
    suite_name: Optional[str] = None,
) -> RunResult:
    """Evolve from the bundled seeds under ``cfg``.

    ``provider`` and ``suite`` override what the config would build, which
    is how tests inject fakes.
    """
    cfg.check()
    started = time.perf_counter()
    started_at = datetime.now(timezone.utc).isoformat()
    problem = PROBLEMS[cfg.problem]
    if suite is None:
        suite_name, suite = resolve_suite(cfg.problem, cfg.suite, cfg.suite_seed)
    if provider is None:
        provider = make_provider({**os.environ, "PROVIDER": cfg.provider})
    deps = Deps(problem, list(suite), provider, cfg.limits)

    pop = seed_population(cfg, deps)
    generations = [_entry(0, pop, deps)]
    refl = ReflectionState(cap=cfg.reflection_cap)
    fw = cfg.framework
    gen = 0
    while True:
        if fw is Framework.REEVO_I:
            if deps.ledger.heuristics_generated >= cfg.budget or (cfg.iterations and gen >= cfg.iterations):
                break
        elif gen >= cfg.iterations:
            break
        gen += 1
        deps.gen = gen
        before = deps.ledger.heuristics_generated
        extra = None
        if fw is Framework.EOH_I:
            pop = eoh_i_generation(pop, cfg, deps)
        elif fw is Framework.REEVO_I:
            pop, refl = reevo_i_generation(pop, cfg, deps, refl)
            extra = {"reflection": {"short_term": refl.short_term, "long_term": refl.long_term}}
        elif fw is Framework.EOHS_I:
            pop = eohs_i_generation(pop, cfg, deps)
            extra = {"set_objective": set_objective(objective_matrix(deps, pop.members))}
        else:
            pop = baseline_semantic_generation(pop, cfg, deps)
        generations.append(_entry(gen, pop, deps, extra))
        if fw is Framework.REEVO_I and deps.ledger.heuristics_generated == before:
            log.info("reevo-i stopped at generation %d: nothing new was generated", gen)
            break

    best = pop.best()
    members: Optional[list[Individual]] = None
    set_obj: Optional[float] = None
    if fw is Framework.EOHS_I:
        members, set_obj = final_set(pop, deps, cfg.set_size)

    test = {}
    for source in cfg.test_suites:
        name, instances = resolve_suite(cfg.problem, source, cfg.suite_seed)
        if members is not None:
            rows = [evaluate_suite(problem, m.code.ast, instances, cfg.limits).objectives for m in members]
            test[name] = set_objective(rows)
        else:
            code = _valid_code(best, deps)
            test[name] = (
                evaluate_suite(problem, code.ast, instances, cfg.limits).mean_objective if code is not None else math.nan
            )

    ledger = deps.ledger
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "framework": fw.value,
        "problem": cfg.problem,
        "provider": getattr(provider.kind, "value", str(provider.kind)),
        "suite": suite_name,
        "generations": gen,
        "best": _describe(best, deps),
        "train": best.fitness if members is None else set_obj,
        "test": test,
        "tokens": {
            "total_in": ledger.total_in,
            "total_out": ledger.total_out,
            "total": ledger.total,
            "ast": ledger.path_totals("ast"),
            "baseline": ledger.path_totals("baseline"),
        },
        "heuristics_generated": ledger.heuristics_generated,
        "provider_failures": deps.provider_failures,
        "rejected_candidates": deps.rejected_candidates,
        TIMING_KEY: {"started_at": started_at, "wall_s": round(time.perf_counter() - started, 3)},
    }
    if members is not None:
        manifest["set"] = {"members": [_describe(m, deps) for m in members], "objective": set_obj}
    return RunResult(cfg, pop, best, members, set_obj, deps, generations, manifest)
