import itertools
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from astevo.code import HeuristicCode, Origin, SourceText
from astevo.evolve import (
    ConfigError,
    Deps,
    Framework,
    Individual,
    Population,
    ReflectionState,
    RunConfig,
    TokenLedger,
    baseline_semantic_generation,
    eoh_i_generation,
    exhaustive_best_subset,
    fitness,
    greedy_complementary,
    run,
    seed_population,
    semantic_offspring,
    set_objective,
    short_reflection_text,
    truncate,
)
from astevo.evolve.frameworks import ast_offspring
from astevo.problems import PROBLEMS, ObpInstance, make_suite
from astevo.repair import (
    MockProvider,
    ProviderKind,
    RepairMode,
    RepairPolicy,
    RepairRequest,
    RepairResponse,
    SemanticRequest,
    build_repair_prompt,
    build_semantic_prompt,
)
from astevo.repair.types import Completion
from astevo.rng import make_rng
from astevo.seeds import OBP_PARAMS

from conftest import seed_codes

HOLE = "⟨?⟩"


def ratio_instance(full, halves):
    """``full`` bins of one 100 item and ``halves`` items of 51: every packing is forced."""
    return ObpInstance(tuple([100] * full + [51] * halves), 100)


# ratios (bins - LB) / LB: 8 full + 3 halves -> LB 10, 11 bins; etc.
R01, R02, R03 = ratio_instance(8, 3), ratio_instance(7, 5), ratio_instance(6, 7)


def obp_deps(suite, provider=None, **kw):
    return Deps(PROBLEMS["obp"], list(suite), provider or MockProvider(), **kw)


def obp_code(body):
    return HeuristicCode.from_text(f"fn score({OBP_PARAMS}) {{ {body} }}", arity=4)


def individual(code, serial=1):
    return Individual(code, serial=serial)


def test_forced_ratios():
    from astevo.problems import pack
    from astevo.problems.obp import excess_ratio

    for inst, want in ((R01, 0.1), (R02, 0.2), (R03, 0.3)):
        assert excess_ratio(pack(obp_code("return 0.0").ast, inst).bins_used, inst) == pytest.approx(want)


def test_fitness_of_valid_code_is_mean():
    deps = obp_deps([R01, R02, R03])
    u = individual(obp_code("return -residual_after"))
    assert fitness(u, deps) == pytest.approx(0.2, abs=1e-15)
    assert u.eval_report is not None and u.repaired_twin is None


def test_fitness_of_invalid_code_is_twin_fitness():
    deps = obp_deps([R01, R02])
    u = individual(obp_code(f"return {HOLE}"))
    assert not u.code.is_valid
    assert fitness(u, deps) == pytest.approx(0.15, abs=1e-15)
    twin = deps.twin_of(u)
    assert twin is not None and twin.code.is_valid
    assert twin.code.repaired_from == u.fingerprint
    assert u.fitness == twin.fitness


def test_fitness_without_repair_is_penalty():
    deps = obp_deps([R01, R02], policy=RepairPolicy(RepairMode.NEVER))
    u = individual(obp_code(f"return {HOLE}"))
    # penalty packs one item per bin
    want = [(inst.n_items - 10) / 10 for inst in (R01, R02)]
    assert fitness(u, deps) == pytest.approx(sum(want) / 2)
    assert u.repaired_twin is None and deps.ledger.total == 0


class Failing(MockProvider):
    def repair(self, req):
        from astevo.repair import ProviderFailure

        raise ProviderFailure("offline")


def test_provider_failure_is_penalised_and_counted():
    deps = obp_deps([R01], Failing())
    u = individual(obp_code(f"return {HOLE}"))
    assert fitness(u, deps) == pytest.approx((R01.n_items - 10) / 10)
    assert deps.provider_failures == 1


# generations ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def tsp_desk():
    return make_suite("tsp", "desk", 0)


def _setup(framework, tsp_desk, **over):
    cfg = RunConfig.for_framework(framework, problem="tsp", seed=3, **over)
    deps = Deps(PROBLEMS["tsp"], tsp_desk, MockProvider())
    return cfg, deps, seed_population(cfg, deps)


def test_one_generation_keeps_capacity_and_elite(tsp_desk):
    cfg, deps, pop = _setup("eoh-i", tsp_desk)
    before = pop.best().fitness
    deps.gen = 1
    nxt = eoh_i_generation(pop, cfg, deps)
    assert len(nxt.members) == 5
    assert nxt.best().fitness <= before
    assert len(set(nxt.fingerprints())) == 5


def test_zero_ii_repetitions_is_vi_then_iv(tsp_desk):
    cfg, deps, pop = _setup("eoh-i", tsp_desk)
    rng = make_rng(0, "t")
    out = ast_offspring(deps, pop.members[:1], rng, ii_repetitions=0)
    assert len(out) in (1, 2)
    assert out[0].operator in ("M1", "M2")
    if len(out) == 2:
        assert out[1].fingerprint == out[0].repaired_twin and out[1].code.is_valid
    deeper = ast_offspring(deps, pop.members[:2], make_rng(0, "t2"), ii_repetitions=2)
    assert [i.operator for i in deeper[1:3]] == ["M3", "M3"]


def test_intermediate_icodes_are_scored_by_twins(tsp_desk):
    cfg, deps, pop = _setup("eoh-i", tsp_desk)
    out = ast_offspring(deps, pop.members[:2], make_rng(1, "x"), ii_repetitions=3)
    for ind in out:
        if not ind.code.is_valid:
            assert ind.fitness == deps.twin_of(ind).fitness


def test_eoh_i_run_series_and_determinism(tsp_desk):
    cfg = RunConfig.for_framework("eoh-i", problem="tsp", seed=5, iterations=4)
    a = run(cfg, suite=tsp_desk, suite_name="desk")
    b = run(cfg, suite=tsp_desk, suite_name="desk")
    series = a.best_series()
    assert len(series) == 5 and all(x >= y for x, y in zip(series, series[1:]))
    assert a.log_lines() == b.log_lines()
    assert a.manifest["generations"] == 4
    for g in a.generations:
        members = g["population"]
        assert len(members) <= 5 and len({m["fingerprint"] for m in members}) == len(members)


def test_eq1_coherence_over_a_run(tsp_desk):
    cfg = RunConfig.for_framework("eoh-i", problem="tsp", seed=2, iterations=3)
    res = run(cfg, suite=tsp_desk, suite_name="desk")
    assert all(m.code.is_valid for m in res.deps.archive.values())
    seen = 0
    for g in res.generations:
        for m in g["population"]:
            if not m["valid"] and m["repaired_twin"]:
                seen += 1
                assert m["fitness"] == res.deps.archive[m["repaired_twin"]].fitness
    assert seen > 0


def test_reevo_budget_and_reflection(tsp_desk):
    cfg = RunConfig.for_framework("reevo-i", problem="tsp", seed=1, budget=30)
    res = run(cfg, suite=tsp_desk, suite_name="desk")
    assert res.ledger.heuristics_generated <= 30
    series = res.best_series()
    assert all(x >= y for x, y in zip(series, series[1:]))
    assert "reflection" in res.generations[-1]
    again = run(cfg, suite=tsp_desk, suite_name="desk")
    assert again.log_lines() == res.log_lines()
    assert res.ledger.path_totals("ast")["in"] > 0


def test_short_reflection_mentions_both_parents():
    a = Individual(obp_code("return -residual_after"), fitness=0.1, serial=1)
    b = Individual(obp_code("return residual_after"), fitness=0.3, serial=2)
    text = short_reflection_text(a, b)
    assert a.fingerprint in text and b.fingerprint in text


def test_long_term_reflection_is_capped():
    refl = ReflectionState(cap=50)
    for i in range(20):
        refl.set_long_term("\n".join([refl.long_term, f"line number {i} with some words"]).strip())
        assert len(refl.long_term) <= 50
    assert "19" in refl.long_term and "line number 0 " not in refl.long_term


def test_eohs_set_run(tsp_desk):
    cfg = RunConfig.for_framework("eohs-i", problem="tsp", seed=4, iterations=2)
    res = run(cfg, suite=tsp_desk, suite_name="desk")
    assert len(res.final_set) == 3 and all(m.code.is_valid for m in res.final_set)
    assert len({m.fingerprint for m in res.final_set}) == 3
    best_single = min(np.mean(res.deps.objectives(m)) for m in res.final_set)
    assert res.set_objective <= best_single + 1e-12
    assert res.manifest["set"]["objective"] == res.set_objective


# set objective ----------------------------------------------------------------------


def naive_set_objective(rows):
    cols = list(zip(*rows))
    return sum(min(c) for c in cols) / len(cols)


def test_disjoint_halves_beat_either_member():
    m = np.array([[0.0, 0.0, 1.0, 1.0], [1.0, 1.0, 0.0, 0.0]])
    assert set_objective(m) == 0.0 < min(m.mean(axis=1))


def test_identical_rows():
    row = [0.3, 0.1, 0.7]
    assert set_objective(np.array([row, row, row])) == pytest.approx(np.mean(row))


def _exhaustive(m, k):
    combos = {c: naive_set_objective(m[list(c)].tolist()) for c in itertools.combinations(range(len(m)), k)}
    return min(combos.values())


def test_greedy_matches_exhaustive_on_desk_case():
    # three specialists, each best on its own pair of instances, and three generalists
    m = np.array(
        [
            [0.70, 0.70, 0.70, 0.70, 0.70, 0.70],
            [0.10, 0.10, 0.90, 0.90, 0.90, 0.90],
            [0.75, 0.75, 0.75, 0.75, 0.75, 0.75],
            [0.90, 0.90, 0.10, 0.10, 0.90, 0.90],
            [0.80, 0.70, 0.80, 0.70, 0.80, 0.70],
            [0.90, 0.90, 0.90, 0.90, 0.10, 0.10],
        ]
    )
    greedy = greedy_complementary(m, 3)
    assert sorted(greedy) == [1, 3, 5]
    assert naive_set_objective(m[greedy].tolist()) == pytest.approx(_exhaustive(m, 3)) == pytest.approx(0.1)
    assert exhaustive_best_subset(m, 3) == ((1, 3, 5), pytest.approx(0.1))


def test_greedy_can_miss_the_optimum():
    # a strong generalist lures the first greedy step away from the three specialists
    m = np.array(
        [
            [0.50, 0.50, 0.50, 0.50, 0.50, 0.50],
            [0.10, 0.90, 0.90, 0.90, 0.20, 0.90],
            [0.90, 0.10, 0.90, 0.90, 0.90, 0.30],
            [0.90, 0.90, 0.10, 0.10, 0.90, 0.90],
            [0.40, 0.40, 0.40, 0.90, 0.40, 0.40],
            [0.95, 0.95, 0.95, 0.95, 0.95, 0.05],
        ]
    )
    greedy = naive_set_objective(m[greedy_complementary(m, 3)].tolist())
    assert _exhaustive(m, 3) == pytest.approx(0.15)
    assert greedy > _exhaustive(m, 3)


@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 5))
def test_set_objective_properties(seed, n_rows, n_cols):
    rng = random.Random(seed)
    m = np.array([[rng.random() for _ in range(n_cols)] for _ in range(n_rows)])
    assert set_objective(m) == pytest.approx(naive_set_objective(m.tolist()))
    assert set_objective(m) <= m.mean(axis=1).min() + 1e-12
    k = rng.randint(1, n_rows)
    g = greedy_complementary(m, k)
    assert len(set(g)) == k
    assert set_objective(m[g]) >= exhaustive_best_subset(m, k)[1] - 1e-12
    assert set_objective(m[g]) <= m.mean(axis=1).min() + 1e-12


# baseline and tokens ----------------------------------------------------------------


def test_baseline_prompt_longer_than_repair_prompt(tsp_seeds):
    from astevo.astops import apply_vi
    from astevo.problems import TSP_NEXT

    ratios = []
    for a, b in itertools.permutations(tsp_seeds, 2):
        sem = build_semantic_prompt(SemanticRequest((a, b), (1.0, 2.0), TSP_NEXT, "crossover"))
        broken = apply_vi(a, 7, b, TSP_NEXT.arity)
        if broken.is_valid:
            continue
        rep = build_repair_prompt(RepairRequest(broken, TSP_NEXT))
        ratios.append(len(sem) / len(rep))
    assert ratios and np.mean(ratios) > 1.0


def test_baseline_generation_uses_baseline_ledger(tsp_desk):
    cfg, deps, pop = _setup("eoh", tsp_desk)
    deps.gen = 1
    nxt = baseline_semantic_generation(pop, cfg, deps)
    assert len(nxt.members) == 5
    assert deps.ledger.path_totals("baseline")["in"] > 0
    assert deps.ledger.path_totals("ast") == {"in": 0, "out": 0}
    assert all(m.code.is_valid for m in nxt.members)


class Counting(MockProvider):
    def __init__(self):
        self.tin = self.tout = 0

    def _add(self, r):
        self.tin += r.tokens_in
        self.tout += r.tokens_out
        return r

    def repair(self, req):
        return self._add(super().repair(req))

    def semantic(self, req):
        return self._add(super().semantic(req))

    def reflect(self, prompt, fallback):
        return self._add(super().reflect(prompt, fallback))


@pytest.mark.parametrize("framework", ["eoh-i", "reevo-i", "eoh"])
def test_ledger_conservation(framework, tsp_desk):
    prov = Counting()
    over = {"budget": 20} if framework == "reevo-i" else {"iterations": 2}
    cfg = RunConfig.for_framework(framework, problem="tsp", seed=8, **over)
    res = run(cfg, provider=prov, suite=tsp_desk, suite_name="desk")
    led = res.ledger
    assert (led.total_in, led.total_out) == (prov.tin, prov.tout)
    rows = [r for g in led.per_generation.values() for r in g.values()]
    assert sum(r["in"] for r in rows) == led.total_in and sum(r["out"] for r in rows) == led.total_out
    snaps = [g["ledger_snapshot"]["total_in"] for g in res.generations]
    assert snaps == sorted(snaps) and snaps[-1] == led.total_in


def test_token_ledger_breakdown():
    led = TokenLedger()
    led.record(1, "ast", "repair", 10, 2)
    led.record(1, "baseline", "semantic", 30, 5)
    led.record(2, "ast", "repair", 20, 4)
    assert led.total == 71
    assert led.path_totals("ast") == {"in": 30, "out": 6}
    assert led.mean_prompt_tokens("ast/repair") == 15
    assert json.loads(json.dumps(led.snapshot()))["per_generation"]["1"]["ast/repair"]["calls"] == 1


# hygiene ----------------------------------------------------------------------------


GARBAGE = ["DROP TABLE heuristics;", "fn score(x) { return y }", "fn score(", "return 1", "fn score() { }"]


class Malicious(MockProvider):
    def repair(self, req):
        return RepairResponse(tuple(SourceText(g, Origin.LLM) for g in GARBAGE), 5, 5, ProviderKind.MOCK)

    def semantic(self, req):
        return RepairResponse((SourceText("import os; os.system('x')", Origin.LLM),), 5, 5, ProviderKind.MOCK)


@pytest.mark.parametrize("framework", ["eoh-i", "eoh", "eohs-i"])
def test_malicious_provider_never_inserts_invalid_twins(framework, tsp_desk):
    cfg = RunConfig.for_framework(framework, problem="tsp", seed=1, iterations=2)
    res = run(cfg, provider=Malicious(), suite=tsp_desk, suite_name="desk")
    assert all(a.code.is_valid for a in res.deps.archive.values())
    assert res.deps.rejected_candidates > 0
    assert res.ledger.heuristics_generated == 0
    for g in res.generations:
        for m in g["population"]:
            assert m["valid"] or m["repaired_twin"] is None
    if res.final_set is not None:
        assert all(m.code.is_valid for m in res.final_set)


def test_population_invariants_under_truncation():
    codes = [obp_code(f"return {i} * item_size") for i in range(6)]
    inds = [Individual(c, fitness=f, serial=s) for s, (c, f) in enumerate(zip(codes * 2, [0.3, 0.1, 0.1, 0.5, 0.2, 0.4] * 2))]
    kept = truncate(inds, 4)
    assert [i.serial for i in kept] == [1, 2, 4, 0]
    assert len({i.fingerprint for i in kept}) == 4


# config -----------------------------------------------------------------------------


def test_defaults():
    assert (RunConfig.for_framework("eoh-i").pop_size, RunConfig.for_framework("eoh-i").iterations) == (5, 10)
    assert RunConfig.for_framework("reevo-i").budget == 400
    eohs = RunConfig.for_framework("eohs-i")
    assert (eohs.pop_size, eohs.iterations, eohs.set_size) == (10, 50, 3)
    assert RunConfig.for_framework("eoh-i").ii_repetitions == 2


@pytest.mark.parametrize(
    "framework,over",
    [
        ("eohs-i", {"set_size": 11}),
        ("eohs-i", {"set_size": 0}),
        ("eoh-i", {"set_size": 2}),
        ("eoh-i", {"pop_size": 0}),
        ("eoh-i", {"iterations": -1}),
        ("reevo-i", {"budget": 0}),
        ("eoh-i", {"problem": "vrp"}),
        ("eoh-i", {"provider": "oracle"}),
    ],
)
def test_config_errors(framework, over):
    with pytest.raises(ConfigError):
        RunConfig.for_framework(framework, **over).check()
