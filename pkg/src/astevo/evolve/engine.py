"""Fitness with repair-aware scoring, plus the caches and accounting a run shares."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..code import HeuristicCode, Lineage, Origin
from ..interp import ExecLimits
from ..problems.base import EvalReport, InstanceResult, Problem, evaluate_suite
from ..repair import Context, Framing, Provider, ProviderFailure, RepairPolicy, RepairRequest, repair_needed
from .types import Individual, TokenLedger

log = logging.getLogger(__name__)


@dataclass
class Deps:
    """Everything a generation step needs besides the population itself."""

    problem: Problem
    suite: Sequence
    provider: Provider
    limits: ExecLimits = ExecLimits()
    policy: RepairPolicy = field(default_factory=RepairPolicy)
    ledger: TokenLedger = field(default_factory=TokenLedger)
    gen: int = 0
    eval_cache: dict[str, EvalReport] = field(default_factory=dict)
    repair_cache: dict[tuple, Optional[HeuristicCode]] = field(default_factory=dict)
    archive: dict[str, Individual] = field(default_factory=dict)  # every valid individual scored so far
    provider_failures: int = 0
    rejected_candidates: int = 0
    _serial: int = 0

    @property
    def schema(self):
        return self.problem.schema

    @property
    def arity(self) -> int:
        return self.problem.schema.arity

    def next_serial(self) -> int:
        self._serial += 1
        return self._serial

    def penalty_report(self) -> EvalReport:
        return EvalReport(tuple(InstanceResult(inst.instance_id, self.problem.penalty(inst), 0) for inst in self.suite))

    def evaluate(self, code: HeuristicCode) -> EvalReport:
        assert code.ast is not None and code.is_valid
        hit = self.eval_cache.get(code.fingerprint)
        if hit is None:
            hit = evaluate_suite(self.problem, code.ast, self.suite, self.limits)
            self.eval_cache[code.fingerprint] = hit
        return hit

    def repair_code(
        self,
        icode: HeuristicCode,
        context: Context = Context.PLAIN,
        reflection: str = "",
        framing: Framing = Framing.REPAIR,
    ) -> tuple[Optional[HeuristicCode], int]:
        """Repair ``icode`` and return ``(valid code or None, tokens spent)``.

        Every candidate is re-parsed and validated here, so nothing the
        provider says reaches a population unchecked. Identical requests are
        answered from a cache and cost no tokens the second time.
        """
        if icode.is_valid:
            return icode, 0
        key = (icode.fingerprint, context.value, framing.value, reflection)
        if key in self.repair_cache:
            return self.repair_cache[key], 0
        if not repair_needed(icode, self.policy):
            return None, 0
        req = RepairRequest(icode, self.schema, context, reflection, framing)
        try:
            resp = self.provider.repair(req)
        except ProviderFailure as exc:
            self.provider_failures += 1
            log.warning("repair of %s failed: %s", icode.fingerprint, exc)
            self.repair_cache[key] = None
            return None, 0
        self.ledger.record(self.gen, "ast", "repair", resp.tokens_in, resp.tokens_out)
        spent = resp.tokens_in + resp.tokens_out
        fixed: Optional[HeuristicCode] = None
        for cand in resp.candidates:
            code = HeuristicCode.from_text(
                cand.text,
                Origin.LLM,
                self.arity,
                (Lineage("IV-repair", (icode.fingerprint,)),),
                repaired_from=icode.fingerprint,
            )
            if code.is_valid:
                fixed = code
                break
            self.rejected_candidates += 1
        if fixed is not None:
            self.ledger.count_heuristic()
        self.repair_cache[key] = fixed
        return fixed, spent

    def scored(self, code: HeuristicCode, operator: str, tokens: int = 0) -> Individual:
        """A valid individual, evaluated, and remembered in the archive."""
        known = self.archive.get(code.fingerprint)
        if known is not None:
            return known
        rep = self.evaluate(code)
        ind = Individual(
            code, rep.mean_objective, rep, None, self.gen, tokens, operator, self.next_serial()
        )
        self.archive[code.fingerprint] = ind
        return ind

    def twin_of(self, ind: Individual) -> Optional[Individual]:
        return self.archive.get(ind.repaired_twin) if ind.repaired_twin else None

    def operable(self, ind: Individual) -> HeuristicCode:
        """Code to destroy when ``ind`` is a parent: its repaired twin if it has one."""
        twin = self.twin_of(ind)
        if twin is not None:
            return twin.code
        return ind.code

    def objectives(self, ind: Individual) -> list[float]:
        if ind.eval_report is not None:
            return ind.eval_report.objectives
        twin = self.twin_of(ind)
        if twin is not None and twin.eval_report is not None:
            return twin.eval_report.objectives
        return self.penalty_report().objectives


def fitness(
    u: Individual,
    deps: Deps,
    context: Context = Context.PLAIN,
    reflection: str = "",
    framing: Framing = Framing.REPAIR,
) -> float:
    """Mean objective for valid code; the repaired version's fitness otherwise.

    An invalid individual that cannot be repaired gets the problem's penalty
    objective. Lower is better.
    """
    if u.code.is_valid:
        rep = deps.evaluate(u.code)
        u.eval_report = rep
        u.fitness = rep.mean_objective
        deps.archive.setdefault(u.fingerprint, u)
        return u.fitness
    fixed, spent = deps.repair_code(u.code, context, reflection, framing)
    u.tokens_spent += spent
    if fixed is None:
        u.eval_report = deps.penalty_report()
        u.fitness = u.eval_report.mean_objective
        return u.fitness
    twin = deps.scored(fixed, "IV", spent)
    u.repaired_twin = twin.fingerprint
    u.fitness = twin.fitness
    assert u.fitness is not None and not math.isnan(u.fitness)
    return u.fitness
