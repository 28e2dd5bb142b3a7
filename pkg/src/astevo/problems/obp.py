"""Online bin packing scored by relative excess over the L1 lower bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hdsl import Ast
from ..interp import ExecLimits, eval_batch
from ..rng import make_rng
from .base import OBP_BIN, InstanceResult, TooLarge, content_hash, require_valid

# Weibull item-size distribution, discretized by ceil and clipped to [1, capacity]
WEIBULL_SHAPE = 3.0
WEIBULL_SCALE = 45.0

TEST_SETTINGS = {
    "n1k_c200": (1000, 200),
    "n5k_c200": (5000, 200),
    "n10k_c200": (10000, 200),
    "n1k_c500": (1000, 500),
    "n5k_c500": (5000, 500),
    "n10k_c500": (10000, 500),
}
BRUTE_FORCE_MAX = 10


@dataclass(frozen=True)
class ObpInstance:
    item_sizes: tuple[int, ...]
    capacity: int
    seed: int = 0
    instance_id: str = ""

    def __post_init__(self) -> None:
        if self.capacity < 1 or not self.item_sizes:
            raise ValueError("need a positive capacity and at least one item")
        if any(not (1 <= s <= self.capacity) for s in self.item_sizes):
            raise ValueError("item sizes must lie in [1, capacity]")

    @property
    def n_items(self) -> int:
        return len(self.item_sizes)

    def fingerprint(self) -> str:
        return content_hash({"c": self.capacity, "items": list(self.item_sizes)})

    def to_dict(self) -> dict:
        return {"id": self.instance_id, "seed": self.seed, "capacity": self.capacity, "items": list(self.item_sizes)}

    @classmethod
    def from_dict(cls, d: dict) -> "ObpInstance":
        return cls(tuple(int(s) for s in d["items"]), int(d["capacity"]), int(d.get("seed", 0)), str(d.get("id", "")))


def weibull_sizes(rng, n: int, capacity: int) -> tuple[int, ...]:
    return tuple(
        min(capacity, max(1, math.ceil(rng.weibullvariate(WEIBULL_SCALE, WEIBULL_SHAPE)))) for _ in range(n)
    )


def gen_obp(count: int, n_min: int, n_max: int, capacity: int, seed: int, label: str) -> list[ObpInstance]:
    if count < 1:
        raise ValueError("count must be >= 1")
    out = []
    for i in range(count):
        rng = make_rng(seed, "obp", label, i)
        n = rng.randint(n_min, n_max)
        out.append(ObpInstance(weibull_sizes(rng, n, capacity), capacity, seed, f"{label}-{i:03d}"))
    return out


def gen_obp_training(count: int = 128, seed: int = 0) -> list[ObpInstance]:
    return gen_obp(count, 200, 2000, 100, seed, "obp-train")


def gen_obp_test(setting: str, seed: int = 0, count: int = 1) -> list[ObpInstance]:
    if setting not in TEST_SETTINGS:
        raise KeyError(f"unknown OBP setting {setting!r}; choose from {sorted(TEST_SETTINGS)}")
    n, c = TEST_SETTINGS[setting]
    return gen_obp(count, n, n, c, seed, f"obp-{setting}")


def gen_obp_desk(count: int = 8, seed: int = 0, n_min: int = 60, n_max: int = 120) -> list[ObpInstance]:
    """Capacity-100 Weibull suite with short item streams, for quick runs."""
    return gen_obp(count, n_min, n_max, 100, seed, "obp-desk")


def lower_bound_obp(inst: ObpInstance) -> int:
    return -(-sum(inst.item_sizes) // inst.capacity)


def excess_ratio(bins: int, inst: ObpInstance) -> float:
    lb = lower_bound_obp(inst)
    return (bins - lb) / lb


def penalty(inst: ObpInstance) -> float:
    return excess_ratio(inst.n_items, inst)


@dataclass(frozen=True)
class PackResult:
    assignment: tuple[int, ...]  # bin index per item
    loads: tuple[int, ...]
    runtime_errors: int

    @property
    def bins_used(self) -> int:
        return len(self.loads)


def pack(heuristic: Ast, inst: ObpInstance, limits: ExecLimits = ExecLimits()) -> PackResult:
    """Place items in arrival order into the argmax-score feasible open bin."""
    require_valid(heuristic, OBP_BIN)
    cap = inst.capacity
    remaining = np.empty(inst.n_items, dtype=np.float64)
    n_bins = 0
    assignment = []
    errors = 0
    for size in inst.item_sizes:
        feasible = np.flatnonzero(remaining[:n_bins] >= size)
        choice = -1
        if feasible.size:
            rem = remaining[feasible]
            feats = np.column_stack([np.full(feasible.size, float(size)), rem, rem - size, (cap - rem) / cap])
            res = eval_batch(heuristic, feats, limits)
            errors += int((~res.ok).sum())
            if res.ok.any():
                choice = int(feasible[int(np.argmax(np.where(res.ok, res.scores, -np.inf)))])
        if choice < 0:
            choice = n_bins
            remaining[n_bins] = cap
            n_bins += 1
        remaining[choice] -= size
        assignment.append(choice)
    loads = tuple(int(cap - r) for r in remaining[:n_bins])
    return PackResult(tuple(assignment), loads, errors)


def run_obp(heuristic: Ast, inst: ObpInstance, limits: ExecLimits = ExecLimits()) -> float:
    return excess_ratio(pack(heuristic, inst, limits).bins_used, inst)


class ObpProblem:
    name = "obp"
    schema = OBP_BIN

    def evaluate(self, ast: Ast, inst: ObpInstance, limits: ExecLimits) -> InstanceResult:
        res = pack(ast, inst, limits)
        return InstanceResult(inst.instance_id, excess_ratio(res.bins_used, inst), res.runtime_errors)

    def penalty(self, inst: ObpInstance) -> float:
        return penalty(inst)


def brute_force_obp(inst: ObpInstance) -> int:
    """Minimum bin count by depth-first search over item-to-bin assignments.

    Items go largest first; bins with equal residual capacity are
    interchangeable, so only one of them is tried per item.
    """
    if inst.n_items > BRUTE_FORCE_MAX:
        raise TooLarge(f"brute force is limited to {BRUTE_FORCE_MAX} items, got {inst.n_items}")
    sizes = sorted(inst.item_sizes, reverse=True)
    cap = inst.capacity
    best = [len(sizes)]
    residual: list[int] = []

    def dfs(i: int) -> None:
        if len(residual) >= best[0]:
            return
        if i == len(sizes):
            best[0] = len(residual)
            return
        s = sizes[i]
        tried = set()
        for b in range(len(residual)):
            r = residual[b]
            if r >= s and r not in tried:
                tried.add(r)
                residual[b] = r - s
                dfs(i + 1)
                residual[b] = r
        residual.append(cap - s)
        dfs(i + 1)
        residual.pop()

    dfs(0)
    return best[0]
