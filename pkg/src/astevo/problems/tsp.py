"""Euclidean TSP on the unit square, solved by a constructive next-city heuristic."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..hdsl import Ast
from ..interp import ExecLimits, eval_batch
from ..rng import make_rng
from .base import TSP_NEXT, InstanceResult, TooLarge, content_hash, require_valid

TEST_SETTINGS = {"c50": 50, "c100": 100, "c200": 200}
BRUTE_FORCE_MAX = 10


@dataclass(frozen=True)
class TspInstance:
    coords: tuple[tuple[float, float], ...]
    seed: int = 0
    instance_id: str = ""
    _dist: np.ndarray = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if len(self.coords) < 3:
            raise ValueError("a TSP instance needs at least 3 cities")
        for x, y in self.coords:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError("coordinates must lie in the unit square")

    @property
    def n_cities(self) -> int:
        return len(self.coords)

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            pts = np.asarray(self.coords, dtype=np.float64)
            diff = pts[:, None, :] - pts[None, :, :]
            object.__setattr__(self, "_dist", np.sqrt((diff**2).sum(axis=-1)))
        return self._dist

    def fingerprint(self) -> str:
        return content_hash([list(c) for c in self.coords])

    def to_dict(self) -> dict:
        return {"id": self.instance_id, "seed": self.seed, "coords": [list(c) for c in self.coords]}

    @classmethod
    def from_dict(cls, d: dict) -> "TspInstance":
        return cls(tuple((float(x), float(y)) for x, y in d["coords"]), int(d.get("seed", 0)), str(d.get("id", "")))


def gen_tsp(count: int, n_min: int, n_max: int, seed: int, label: str) -> list[TspInstance]:
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for i in range(count):
        rng = make_rng(seed, "tsp", label, i)
        n = rng.randint(n_min, n_max)
        coords = tuple((rng.random(), rng.random()) for _ in range(n))
        out.append(TspInstance(coords, seed, f"{label}-{i:03d}"))
    return out


def gen_tsp_training(count: int = 128, seed: int = 0) -> list[TspInstance]:
    return gen_tsp(count, 10, 200, seed, "tsp-train")


def gen_tsp_test(setting: str, count: int = 64, seed: int = 0) -> list[TspInstance]:
    if setting not in TEST_SETTINGS:
        raise KeyError(f"unknown TSP setting {setting!r}; choose from {sorted(TEST_SETTINGS)}")
    n = TEST_SETTINGS[setting]
    return gen_tsp(count, n, n, seed, f"tsp-{setting}")


def gen_tsp_desk(count: int = 8, seed: int = 0) -> list[TspInstance]:
    """Small training suite (n in [10, 20]) for quick runs and tests."""
    return gen_tsp(count, 10, 20, seed, "tsp-desk")


@dataclass(frozen=True)
class TourResult:
    tour: tuple[int, ...]
    length: float
    runtime_errors: int
    penalized: bool


def tour_length(dist: np.ndarray, tour: tuple[int, ...] | list[int]) -> float:
    idx = np.asarray(tour)
    return float(dist[idx, np.roll(idx, -1)].sum())


def penalty(inst: TspInstance) -> float:
    return inst.n_cities * math.sqrt(2.0)


def construct_tour(heuristic: Ast, inst: TspInstance, limits: ExecLimits = ExecLimits()) -> TourResult:
    """Build a tour from city 0, always moving to the argmin-score city."""
    require_valid(heuristic, TSP_NEXT)
    d = inst.dist
    n = inst.n_cities
    tour = [0]
    unvisited = list(range(1, n))
    errors = 0
    while unvisited:
        cur = tour[-1]
        u = np.asarray(unvisited)
        m = u.size
        sub = d[np.ix_(u, u)]
        if m > 1:
            mean = sub.sum(axis=1) / (m - 1)
            mn = np.where(np.eye(m, dtype=bool), np.inf, sub).min(axis=1)
            mx = sub.max(axis=1)
        else:
            mean = mn = mx = np.zeros(1)
        feats = np.column_stack(
            [d[cur, u], d[0, u], mean, mn, mx, np.full(m, (m + 0.0) / n)]
        )
        res = eval_batch(heuristic, feats, limits)
        errors += int((~res.ok).sum())
        scores = np.where(res.ok, res.scores, np.inf)
        if not res.ok.any():
            return TourResult(tuple(tour), penalty(inst), errors, True)
        pick = int(np.argmin(scores))
        tour.append(unvisited.pop(pick))
    return TourResult(tuple(tour), tour_length(d, tour), errors, False)


def run_tsp(heuristic: Ast, inst: TspInstance, limits: ExecLimits = ExecLimits()) -> float:
    return construct_tour(heuristic, inst, limits).length


class TspProblem:
    name = "tsp"
    schema = TSP_NEXT

    def evaluate(self, ast: Ast, inst: TspInstance, limits: ExecLimits) -> InstanceResult:
        res = construct_tour(ast, inst, limits)
        return InstanceResult(inst.instance_id, res.length, res.runtime_errors)

    def penalty(self, inst: TspInstance) -> float:
        return penalty(inst)


def brute_force_tsp(inst: TspInstance) -> float:
    """Exact optimum by enumerating every tour that starts at city 0."""
    n = inst.n_cities
    if n > BRUTE_FORCE_MAX:
        raise TooLarge(f"brute force is limited to {BRUTE_FORCE_MAX} cities, got {n}")
    d = inst.dist
    perms = np.array(list(itertools.permutations(range(1, n))), dtype=np.int64)
    # each cycle appears twice (once per direction); both give the same length
    perms = perms[perms[:, 0] < perms[:, -1]] if n > 3 else perms
    tours = np.hstack([np.zeros((perms.shape[0], 1), dtype=np.int64), perms])
    lengths = d[tours, np.roll(tours, -1, axis=1)].sum(axis=1)
    return float(lengths.min())
