"""Generation steps for eoh-i, reevo-i, eohs-i and the prompt-only baseline.

Operator naming follows EoH. E1 and E2 are VI-crossover followed by IV, M1 and
M2 are VI-deletion followed by IV; the odd member of each pair repairs, the
even one asks for a novel heuristic. M3 labels the II steps in between.
"""

from __future__ import annotations

import logging
import random
from typing import Optional, Sequence

import numpy as np

from ..astops import IIStrategy, apply_ii, apply_vi
from ..code import HeuristicCode, Lineage, Origin
from ..repair import Context, Framing, ProviderFailure, SemanticRequest
from ..repair.prompts import build_long_reflection_prompt, build_short_reflection_prompt
from ..rng import make_rng
from .engine import Deps, fitness
from .selection import dedupe, greedy_complementary, set_objective, tournament, truncate
from .types import Individual, Population, ReflectionState, RunConfig

log = logging.getLogger(__name__)

OPERATORS = {(True, Framing.REPAIR): "E1", (True, Framing.NOVEL): "E2", (False, Framing.REPAIR): "M1", (False, Framing.NOVEL): "M2"}


def ii_strategy(rep: int) -> IIStrategy:
    """II repetitions alternate, starting with a purely structural one."""
    return IIStrategy.STRUCTURAL_ONLY if rep % 2 == 0 else IIStrategy.REPAIR_THEN_DESTROY


def _pick_parents(members: Sequence[Individual], rng: random.Random, two: bool) -> list[Individual]:
    first = tournament(members, rng)
    if not two:
        return [first]
    rest = [m for m in members if m is not first]
    return [first, tournament(rest, rng) if rest else first]


def _insert(deps: Deps, code: HeuristicCode, operator: str, **kw) -> Individual:
    ind = Individual(code, generation_born=deps.gen, operator=operator, serial=deps.next_serial())
    fitness(ind, deps, **kw)
    return ind


def ast_offspring(
    deps: Deps,
    parents: Sequence[Individual],
    rng: random.Random,
    framing: Framing = Framing.REPAIR,
    ii_repetitions: int = 0,
    context: Context = Context.PLAIN,
    reflection: str = "",
) -> list[Individual]:
    """Destroy, optionally keep destroying, then repair.

    Returns every I-Code produced along the way, each scored by its repaired
    version, followed by the repaired twin of the last one (the IV result).
    """
    crossover = len(parents) > 1
    base = deps.operable(parents[0])
    partner = deps.operable(parents[1]) if crossover else None
    icode = apply_vi(base, rng.getrandbits(64), partner, deps.arity)
    kw = {"context": context, "reflection": reflection, "framing": framing}
    out = [_insert(deps, icode, OPERATORS[(crossover, framing)], **kw)]

    current = icode
    for rep in range(ii_repetitions):
        spent = [0]

        def repairer(c: HeuristicCode) -> HeuristicCode:
            fixed, tokens = deps.repair_code(c, context, reflection, framing)
            spent[0] += tokens
            if fixed is None:
                raise ProviderFailure(f"no repair for {c.fingerprint}")
            return fixed

        try:
            current = apply_ii(current, rng.getrandbits(64), ii_strategy(rep), repairer, partner, deps.arity)
        except ProviderFailure:
            break
        ind = _insert(deps, current, "M3", **kw)
        ind.tokens_spent += spent[0]
        out.append(ind)

    twin = deps.twin_of(out[-1])
    if twin is not None:
        out.append(twin)
    return out


def semantic_offspring(deps: Deps, parents: Sequence[Individual]) -> Optional[Individual]:
    """One prompt-only crossover (two parents) or mutation (one parent)."""
    operator = "crossover" if len(parents) > 1 else "mutation"
    codes = tuple(deps.operable(p) for p in parents)
    req = SemanticRequest(codes, tuple(float(p.fitness or 0.0) for p in parents), deps.schema, operator)
    try:
        resp = deps.provider.semantic(req)
    except ProviderFailure as exc:
        deps.provider_failures += 1
        log.warning("semantic %s failed: %s", operator, exc)
        return None
    deps.ledger.record(deps.gen, "baseline", "semantic", resp.tokens_in, resp.tokens_out)
    lineage = (Lineage(f"semantic-{operator}", tuple(c.fingerprint for c in codes)),)
    for cand in resp.candidates:
        code = HeuristicCode.from_text(cand.text, Origin.LLM, deps.arity, lineage)
        if code.is_valid:
            deps.ledger.count_heuristic()
            return deps.scored(code, "E1" if len(parents) > 1 else "M1", resp.tokens_in + resp.tokens_out)
        deps.rejected_candidates += 1
    return None


def _eoh_offspring(pop: Population, cfg: RunConfig, deps: Deps, label: str) -> list[Individual]:
    out: list[Individual] = []
    for slot in range(cfg.pop_size):
        rng = make_rng(cfg.seed, label, deps.gen, slot)
        crossover = rng.random() < 0.5
        framing = Framing.NOVEL if rng.random() < 0.5 else Framing.REPAIR
        parents = _pick_parents(pop.members, rng, crossover)
        out.extend(ast_offspring(deps, parents, rng, framing, cfg.ii_repetitions))
    return out


def eoh_i_generation(pop: Population, cfg: RunConfig, deps: Deps) -> Population:
    offspring = _eoh_offspring(pop, cfg, deps, "eoh-i")
    return Population(truncate(pop.members + offspring, pop.capacity), pop.capacity, pop.seed)


def short_reflection_text(better: Individual, worse: Individual) -> str:
    return (
        f"{better.fingerprint} (objective {better.fitness:.6g}) beats {worse.fingerprint} "
        f"(objective {worse.fitness:.6g}): keep the scoring terms of {better.fingerprint} "
        f"and drop what {worse.fingerprint} adds."
    )


def _reflect(deps: Deps, prompt: str, fallback: str) -> str:
    try:
        c = deps.provider.reflect(prompt, fallback)
    except ProviderFailure as exc:
        deps.provider_failures += 1
        log.warning("reflection failed: %s", exc)
        return fallback
    deps.ledger.record(deps.gen, "ast", "reflection", c.tokens_in, c.tokens_out)
    return c.text


def budget_left(cfg: RunConfig, deps: Deps) -> int:
    return cfg.budget - deps.ledger.heuristics_generated


def reevo_i_generation(
    pop: Population, cfg: RunConfig, deps: Deps, refl: ReflectionState
) -> tuple[Population, ReflectionState]:
    """Reflection-guided crossover over the population, then mutation of the elite.

    Each offspring costs at most one repair, so checking the budget before
    each one keeps the heuristic count within it.
    """
    offspring: list[Individual] = []
    recent: list[str] = []
    for slot in range(cfg.pop_size):
        if budget_left(cfg, deps) <= 0:
            break
        rng = make_rng(cfg.seed, "reevo-i", deps.gen, "crossover", slot)
        a, b = _pick_parents(pop.members, rng, True)
        better, worse = sorted((a, b), key=Individual.rank_key)
        prompt = build_short_reflection_prompt(
            deps.schema,
            (better.fingerprint, deps.operable(better).text, float(better.fitness)),
            (worse.fingerprint, deps.operable(worse).text, float(worse.fitness)),
        )
        refl.short_term = _reflect(deps, prompt, short_reflection_text(better, worse))
        recent.append(refl.short_term)
        offspring.extend(
            ast_offspring(deps, [better, worse], rng, context=Context.SHORT_TERM, reflection=refl.short_term)
        )

    if recent:
        fallback = "\n".join([refl.long_term, *recent])
        prompt = build_long_reflection_prompt(deps.schema, refl.long_term, recent)
        refl.set_long_term(_reflect(deps, prompt, fallback))

    elite = min(pop.members + offspring, key=Individual.rank_key)
    for slot in range(max(1, cfg.pop_size // 2)):
        if budget_left(cfg, deps) <= 0:
            break
        rng = make_rng(cfg.seed, "reevo-i", deps.gen, "mutation", slot)
        offspring.extend(ast_offspring(deps, [elite], rng, context=Context.LONG_TERM, reflection=refl.long_term))
    return Population(truncate(pop.members + offspring, pop.capacity), pop.capacity, pop.seed), refl


def objective_matrix(deps: Deps, inds: Sequence[Individual]) -> np.ndarray:
    return np.array([deps.objectives(i) for i in inds], dtype=float)


def complementary_survivors(pool: Sequence[Individual], deps: Deps, k: int) -> list[Individual]:
    """Greedy set selection; rows go best-first so ties favour fitter, older members."""
    ranked = sorted(dedupe(pool), key=Individual.rank_key)
    idx = greedy_complementary(objective_matrix(deps, ranked), min(k, len(ranked)))
    return [ranked[i] for i in idx]


def eohs_i_generation(pop: Population, cfg: RunConfig, deps: Deps) -> Population:
    offspring = _eoh_offspring(pop, cfg, deps, "eohs-i")
    return Population(complementary_survivors(pop.members + offspring, deps, pop.capacity), pop.capacity, pop.seed)


def final_set(pop: Population, deps: Deps, k: int) -> tuple[list[Individual], float]:
    """The ``k`` valid heuristics that work best together, and their set objective.

    Invalid members stand in through their repaired twins; if that leaves too
    few candidates the archive of scored valid heuristics tops them up.
    """
    cands: list[Individual] = []
    for m in sorted(pop.members, key=Individual.rank_key):
        v = m if m.code.is_valid else deps.twin_of(m)
        if v is not None:
            cands.append(v)
    cands = dedupe(cands)
    if len(cands) < k:
        have = {c.fingerprint for c in cands}
        extra = sorted((a for a in deps.archive.values() if a.fingerprint not in have), key=Individual.rank_key)
        cands.extend(extra[: k - len(cands)])
    chosen = complementary_survivors(cands, deps, k)
    return chosen, set_objective(objective_matrix(deps, chosen))


def baseline_semantic_generation(pop: Population, cfg: RunConfig, deps: Deps) -> Population:
    offspring: list[Individual] = []
    for slot in range(cfg.pop_size):
        rng = make_rng(cfg.seed, "eoh", deps.gen, slot)
        parents = _pick_parents(pop.members, rng, rng.random() < 0.5)
        child = semantic_offspring(deps, parents)
        if child is not None:
            offspring.append(child)
    return Population(truncate(pop.members + offspring, pop.capacity), pop.capacity, pop.seed)
