"""Parent selection and survival rules."""

from __future__ import annotations

import itertools
import math
import random
from typing import Sequence

import numpy as np

from .types import Individual


def tournament(members: Sequence[Individual], rng: random.Random, k: int = 2) -> Individual:
    """Best of ``k`` members drawn without replacement; ties go to the older one."""
    if not members:
        raise ValueError("cannot select from an empty population")
    picks = rng.sample(range(len(members)), min(k, len(members)))
    return min((members[i] for i in picks), key=Individual.rank_key)


def dedupe(pool: Sequence[Individual]) -> list[Individual]:
    """First (oldest) individual per fingerprint, keeping pool order otherwise."""
    by_fp: dict[str, Individual] = {}
    for ind in pool:
        cur = by_fp.get(ind.fingerprint)
        if cur is None or ind.serial < cur.serial:
            by_fp[ind.fingerprint] = ind
    return sorted(by_fp.values(), key=lambda i: i.serial)


def truncate(pool: Sequence[Individual], capacity: int) -> list[Individual]:
    """Keep the ``capacity`` fittest distinct individuals.

    Sorting on (fitness, age) keeps the best-so-far individual, since it is
    always in the pool, so this is truncation with elitism of one.
    """
    return sorted(dedupe(pool), key=Individual.rank_key)[:capacity]


def set_objective(matrix: np.ndarray) -> float:
    """Mean over instances of the best (lowest) objective among the rows."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("need a non-empty heuristics x instances matrix")
    return math.fsum(m.min(axis=0)) / m.shape[1]


def greedy_complementary(matrix: np.ndarray, k: int) -> list[int]:
    """Forward selection of ``k`` rows, each step taking the largest set improvement.

    Ties go to the lower row index, so callers order rows oldest first.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if not 0 < k <= n:
        raise ValueError(f"cannot pick {k} of {n} rows")
    chosen: list[int] = []
    current = np.full(m.shape[1], np.inf)
    for _ in range(k):
        best_i, best_v = -1, math.inf
        for i in range(n):
            if i in chosen:
                continue
            v = math.fsum(np.minimum(current, m[i])) / m.shape[1]
            if v < best_v:
                best_i, best_v = i, v
        chosen.append(best_i)
        current = np.minimum(current, m[best_i])
    return chosen


def exhaustive_best_subset(matrix: np.ndarray, k: int) -> tuple[tuple[int, ...], float]:
    """Optimal ``k``-subset by enumeration; the oracle for the greedy rule."""
    m = np.asarray(matrix, dtype=float)
    best: tuple[tuple[int, ...], float] = ((), math.inf)
    for combo in itertools.combinations(range(m.shape[0]), k):
        v = set_objective(m[list(combo)])
        if v < best[1]:
            best = (combo, v)
    return best
