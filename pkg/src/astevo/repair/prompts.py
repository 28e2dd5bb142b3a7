"""Prompt construction. Templates live in ``astevo/prompts/*.txt``."""

from __future__ import annotations

import functools
from importlib import resources
from string import Template

from ..problems.base import FeatureSchema
from .types import Context, Framing, RepairRequest, SemanticRequest

TASKS = {
    "TspNext": "design a scoring function for constructive TSP. The tour starts at city 0 and repeatedly "
    "moves to the unvisited city with the lowest score; the goal is a short closed tour.",
    "ObpBin": "design a scoring function for online bin packing. Each arriving item goes into the feasible "
    "open bin with the highest score (a new bin opens if none fits); the goal is to use few bins.",
}

FRAMING = {
    Framing.REPAIR: "Repair this code into a valid heuristic, keeping as much of its structure and ideas as possible.",
    Framing.NOVEL: "Use this code as inspiration: repair it, or write a new heuristic distinct from it.",
}

SEMANTIC = {
    "crossover": "Create a new heuristic that has a totally different form from the given ones.",
    "mutation": "Create a new heuristic in a different form that can be a modified version of the one provided.",
}


@functools.lru_cache(maxsize=None)
def template(name: str) -> Template:
    text = resources.files("astevo").joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")
    return Template(text)


def language() -> str:
    return template("language").template.strip()


def task(schema: FeatureSchema) -> str:
    return TASKS.get(schema.schema_id, "design a scoring function that picks the best candidate at each step.")


def build_repair_prompt(req: RepairRequest) -> str:
    reflection = ""
    if req.context is Context.SHORT_TERM:
        reflection = f"Hints from comparing recent heuristics:\n{req.reflection}\n"
    elif req.context is Context.LONG_TERM:
        reflection = f"Accumulated design hints:\n{req.reflection}\n"
    return template("repair").substitute(
        task=task(req.schema),
        signature=req.schema.describe(),
        language=language(),
        icode=req.icode.text.strip(),
        violations=req.violations_summary,
        reflection=reflection,
        instruction=FRAMING[req.framing],
    )


def build_semantic_prompt(req: SemanticRequest) -> str:
    blocks = []
    for i, (code, fit) in enumerate(zip(req.parents, req.parent_fitness), start=1):
        blocks.append(f"No. {i} heuristic (objective {fit:.6g}):\n```\n{code.text.strip()}\n```")
    return template("semantic").substitute(
        task=task(req.schema),
        signature=req.schema.describe(),
        language=language(),
        count=len(req.parents),
        parents="\n".join(blocks),
        instruction=SEMANTIC[req.operator],
    )


def build_short_reflection_prompt(
    schema: FeatureSchema, better: tuple[str, str, float], worse: tuple[str, str, float]
) -> str:
    """``better``/``worse`` are ``(fingerprint, code, fitness)`` triples."""
    return template("reflection_short").substitute(
        task=task(schema),
        better_fp=better[0],
        better_code=better[1].strip(),
        better_fit=f"{better[2]:.6g}",
        worse_fp=worse[0],
        worse_code=worse[1].strip(),
        worse_fit=f"{worse[2]:.6g}",
    )


def build_long_reflection_prompt(schema: FeatureSchema, prior: str, recent: list[str]) -> str:
    return template("reflection_long").substitute(
        task=task(schema), prior=prior or "(none)", recent="\n".join(recent) or "(none)"
    )
