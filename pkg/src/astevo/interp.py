"""Sandboxed evaluation of valid heuristics.

The evaluator walks the tree once per call but over a whole batch of feature
vectors at a time (one numpy array per value), which is how the problem
adapters score every candidate city or bin in one pass. Each row behaves
exactly as an independent scalar call: branches and short-circuit operators
only evaluate their operands on the rows that reach them, and step counts and
errors are tracked per row.

Any operation producing a NaN or infinity (division by zero, log of a
non-positive number, overflow, ...) ends that row with ``NonFiniteResult``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .hdsl import Ast, Kind, Node

DEFAULT_MAX_STEPS = 100_000


class ExecError(str, enum.Enum):
    NON_FINITE = "NonFiniteResult"
    STEP_LIMIT = "StepLimitExceeded"


_ERR_NONE, _ERR_NONFINITE, _ERR_STEPS = 0, 1, 2
_ERR_ENUM = {_ERR_NONFINITE: ExecError.NON_FINITE, _ERR_STEPS: ExecError.STEP_LIMIT}


class ArityMismatch(ValueError):
    """Feature vector length differs from the heuristic's parameter count."""


@dataclass(frozen=True)
class ExecLimits:
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass(frozen=True)
class ExecOutcome:
    score: Optional[float] = None
    error: Optional[ExecError] = None

    @property
    def kind(self) -> str:
        return "Score" if self.error is None else "RuntimeError"


@dataclass(frozen=True)
class BatchResult:
    scores: np.ndarray  # NaN where the row errored
    errors: np.ndarray  # int8 codes, 0 = ok

    @property
    def ok(self) -> np.ndarray:
        return self.errors == _ERR_NONE

    def outcome(self, i: int) -> ExecOutcome:
        code = int(self.errors[i])
        if code == _ERR_NONE:
            return ExecOutcome(score=float(self.scores[i]))
        return ExecOutcome(error=_ERR_ENUM[code])


def signature(ast: Ast) -> tuple[list[str], Node]:
    """Parameter names and body of a valid heuristic."""
    fn = ast.root.children[0]
    assert fn is not None and fn.kind is Kind.FNDEF
    params, body = fn.children
    assert params is not None and body is not None
    return [str(p.payload) for p in params.children if p is not None], body


_CMP = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
    "==": np.equal,
    "!=": np.not_equal,
}
_ARITH = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "%": np.mod}
_CALLS = {
    "min": np.minimum,
    "max": np.maximum,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "pow": np.power,
    "floor": np.floor,
}


class _Walker:
    def __init__(self, m: int) -> None:
        self.steps = np.zeros(m, dtype=np.int64)
        self.err = np.zeros(m, dtype=np.int8)
        self.err_step = np.zeros(m, dtype=np.int64)
        self.out = np.full(m, np.nan)

    def check(self, value: np.ndarray, rows: np.ndarray) -> np.ndarray:
        bad = ~np.isfinite(value)
        if bad.any():
            hit = rows[bad]
            fresh = hit[self.err[hit] == _ERR_NONE]
            self.err[fresh] = _ERR_NONFINITE
            self.err_step[fresh] = self.steps[fresh]
        return value

    def block(self, node: Node, env: dict[str, np.ndarray], rows: np.ndarray) -> np.ndarray:
        """Run a block; return a mask (over ``rows``) of rows that returned."""
        self.steps[rows] += 1
        returned = np.zeros(rows.size, dtype=bool)
        live = np.arange(rows.size)
        for stmt in node.children:
            if live.size == 0:
                break
            assert stmt is not None
            self.steps[rows] += 1
            if stmt.kind is Kind.LET:
                env = dict(env)
                env[str(stmt.payload)] = self.expr(stmt.children[0], env, rows)
            elif stmt.kind is Kind.RETURN:
                self.out[rows] = self.expr(stmt.children[0], env, rows)
                returned[live] = True
                break
            else:
                done = self.branch(stmt, env, rows)
                if done.any():
                    returned[live[done]] = True
                    keep = ~done
                    live, rows = live[keep], rows[keep]
                    env = {k: v[keep] for k, v in env.items()}
        return returned

    def branch(self, node: Node, env: dict[str, np.ndarray], rows: np.ndarray) -> np.ndarray:
        truth = self.expr(node.children[0], env, rows) != 0
        done = np.zeros(rows.size, dtype=bool)
        arms = [(node.children[1], truth)]
        if len(node.children) > 2:
            arms.append((node.children[2], ~truth))
        for arm, sel in arms:
            idx = np.flatnonzero(sel)
            if idx.size:
                sub = {k: v[idx] for k, v in env.items()}
                assert arm is not None
                done[idx[self.block(arm, sub, rows[idx])]] = True
        return done

    def expr(self, node: Optional[Node], env: dict[str, np.ndarray], rows: np.ndarray) -> np.ndarray:
        assert node is not None
        self.steps[rows] += 1
        k = node.kind
        if k is Kind.NUMBER:
            return np.full(rows.size, float(node.payload))  # type: ignore[arg-type]
        if k is Kind.IDENT:
            return env[str(node.payload)]
        if k is Kind.UNOP:
            v = self.expr(node.children[0], env, rows)
            if node.payload == "not":
                return (v == 0).astype(np.float64)
            return -v
        if k is Kind.CALL:
            args = [self.expr(c, env, rows) for c in node.children]
            return self.check(_CALLS[str(node.payload)](*args), rows)
        op = str(node.payload)
        if op in ("and", "or"):
            left = self.expr(node.children[0], env, rows) != 0
            # the right operand only runs where the left one does not decide
            need = np.flatnonzero(left if op == "and" else ~left)
            result = left.astype(np.float64)
            if need.size:
                sub = {k2: v[need] for k2, v in env.items()}
                right = self.expr(node.children[1], sub, rows[need]) != 0
                result[need] = right.astype(np.float64)
            return result
        left = self.expr(node.children[0], env, rows)
        right = self.expr(node.children[1], env, rows)
        if op in _CMP:
            return _CMP[op](left, right).astype(np.float64)
        return self.check(_ARITH[op](left, right), rows)


def eval_batch(ast: Ast, features: np.ndarray, limits: ExecLimits = ExecLimits()) -> BatchResult:
    """Score every row of ``features`` (shape ``(m, arity)``) with ``ast``.

    ``ast`` must have passed validation; that is the caller's contract.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be a 2-D array")
    names, body = signature(ast)
    if features.shape[1] != len(names):
        raise ArityMismatch(f"heuristic takes {len(names)} features, got {features.shape[1]}")
    m = features.shape[0]
    walker = _Walker(m)
    rows = np.arange(m)
    env = {name: features[:, i].copy() for i, name in enumerate(names)}
    with np.errstate(all="ignore"):
        walker.block(body, env, rows)
        walker.check(walker.out, rows)
    over = walker.steps > limits.max_steps
    late = (walker.err == _ERR_NONE) | (walker.err_step > limits.max_steps)
    walker.err[over & late] = _ERR_STEPS
    scores = np.where(walker.err == _ERR_NONE, walker.out, np.nan)
    return BatchResult(scores, walker.err)


def eval_heuristic(ast: Ast, features: Sequence[float], limits: ExecLimits = ExecLimits()) -> ExecOutcome:
    """Score a single feature vector."""
    row = np.asarray(features, dtype=np.float64).reshape(1, -1)
    return eval_batch(ast, row, limits).outcome(0)
