"""Destruction operators on heuristic syntax trees and the VI/II wrappers.

Both operators pick non-root nodes uniformly at random and do no type or
grammar checking: the output is meant to be broken code that a repair step
turns back into a heuristic.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .code import HeuristicCode, Lineage
from .hdsl import Ast, Kind, Node, renumber
from .rng import make_rng


class DegenerateTree(ValueError):
    """The tree has no non-root node to operate on."""


class UnparseableInput(ValueError):
    """Structural operators need a tree; this code never parsed."""


class OpKind(str, enum.Enum):
    CROSSOVER = "Crossover"
    DELETION = "Deletion"


class IIStrategy(str, enum.Enum):
    STRUCTURAL_ONLY = "StructuralOnly"
    REPAIR_THEN_DESTROY = "RepairThenDestroy"


@dataclass(frozen=True)
class DestructionOutcome:
    result: Ast
    op_kind: OpKind
    parent_trees: tuple[str, ...]
    donor_node_id: Optional[int] = None
    removed_node_id: Optional[int] = None
    mirror: Optional[Ast] = None


def _optional_slot(parent: Node, index: int) -> bool:
    # statements in a block and an if's else-branch can vanish without
    # leaving a gap; every other slot keeps a hole
    if parent.kind is Kind.BLOCK:
        return True
    return parent.kind is Kind.IF and index == 2


def _non_root(ast: Ast) -> list[Node]:
    nodes = list(ast.nodes())
    return nodes[1:]


def _max_id(node: Node) -> int:
    return max(n.node_id for n in node.walk())


def _replace(root: Node, target_id: int, replacement: Optional[Node]) -> Node:
    """Copy of ``root`` with ``target_id`` swapped for ``replacement``.

    ``replacement=None`` deletes the target: the slot disappears when it is
    optional and is left empty otherwise.
    """

    def go(node: Node) -> Node:
        kids: list[Optional[Node]] = []
        changed = False
        for i, child in enumerate(node.children):
            if child is None:
                kids.append(None)
            elif child.node_id == target_id:
                changed = True
                if replacement is not None:
                    kids.append(replacement)
                elif not _optional_slot(node, i):
                    kids.append(None)
            else:
                new = go(child)
                changed = changed or new is not child
                kids.append(new)
        if not changed:
            return node
        return Node(node.kind, tuple(kids), node.payload, node.node_id)

    return go(root)


def random_delete_node(t: Ast, seed: int) -> DestructionOutcome:
    candidates = _non_root(t)
    if not candidates:
        raise DegenerateTree("tree has only a root")
    rng = make_rng(seed)
    victim = candidates[rng.randrange(len(candidates))]
    result = Ast(_replace(t.root, victim.node_id, None))
    return DestructionOutcome(
        result=result,
        op_kind=OpKind.DELETION,
        parent_trees=(t.fingerprint(),),
        removed_node_id=victim.node_id,
    )


def random_crossover(t1: Ast, t2: Ast, seed: int, mirror: bool = False) -> DestructionOutcome:
    """Replace a random subtree of ``t1`` with a random subtree of ``t2``.

    Grafted nodes get fresh ids above ``t1``'s so ids stay unique. With
    ``mirror=True`` the symmetric product (``t2`` receiving ``t1``'s subtree)
    is returned as well.
    """
    c1, c2 = _non_root(t1), _non_root(t2)
    if not c1 or not c2:
        raise DegenerateTree("crossover needs two trees with at least two nodes")
    rng = make_rng(seed)
    a = c1[rng.randrange(len(c1))]
    b = c2[rng.randrange(len(c2))]
    return _cross(t1, t2, a, b, mirror)


def _cross(t1: Ast, t2: Ast, a: Node, b: Node, mirror: bool) -> DestructionOutcome:
    graft = renumber(b, _max_id(t1.root) + 1)
    result = Ast(_replace(t1.root, a.node_id, graft))
    other = None
    if mirror:
        other = Ast(_replace(t2.root, b.node_id, renumber(a, _max_id(t2.root) + 1)))
    return DestructionOutcome(
        result=result,
        op_kind=OpKind.CROSSOVER,
        parent_trees=(t1.fingerprint(), t2.fingerprint()),
        donor_node_id=b.node_id,
        removed_node_id=a.node_id,
        mirror=other,
    )


def all_crossovers(t1: Ast, t2: Ast) -> list[DestructionOutcome]:
    """Every (non-root x non-root) crossover product, in selection order."""
    return [_cross(t1, t2, a, b, False) for a in _non_root(t1) for b in _non_root(t2)]


def apply_vi(
    code: HeuristicCode,
    seed: int,
    partner: Optional[HeuristicCode] = None,
    arity: Optional[int] = None,
) -> HeuristicCode:
    """Valid -> invalid: crossover with ``partner`` if given, else deletion.

    The result is returned with its own validity report whether or not the
    destruction actually broke it.
    """
    if code.ast is None or (partner is not None and partner.ast is None):
        raise UnparseableInput("VI needs parseable code")
    if partner is None:
        out = random_delete_node(code.ast, seed)
        lineage = Lineage("VI-deletion", (code.fingerprint,))
    else:
        out = random_crossover(code.ast, partner.ast, seed)
        lineage = Lineage("VI-crossover", (code.fingerprint, partner.fingerprint))
    return HeuristicCode.from_ast(out.result, arity, (lineage,))


def apply_ii(
    code: HeuristicCode,
    seed: int,
    strategy: IIStrategy,
    repairer: Optional[Callable[[HeuristicCode], HeuristicCode]] = None,
    partner: Optional[HeuristicCode] = None,
    arity: Optional[int] = None,
) -> HeuristicCode:
    """Invalid -> invalid.

    ``StructuralOnly`` destroys the I-Code's own tree (deletion, or a coin flip
    between deletion and crossover when a partner is given).
    ``RepairThenDestroy`` runs ``repairer`` and then VI on the repaired code.
    """
    rng = make_rng(seed, "ii")
    if strategy is IIStrategy.REPAIR_THEN_DESTROY:
        if repairer is None:
            raise ValueError("RepairThenDestroy needs a repairer")
        fixed = repairer(code)
        out = apply_vi(fixed, rng.getrandbits(64), arity=arity)
        lineage = Lineage("II-repair-then-destroy", (code.fingerprint, fixed.fingerprint))
        return HeuristicCode.from_text(out.text, out.source.origin, arity, (lineage,))
    if code.ast is None:
        raise UnparseableInput("StructuralOnly needs a parseable I-Code")
    use_partner = partner is not None and partner.ast is not None and rng.random() < 0.5
    if use_partner:
        res = random_crossover(code.ast, partner.ast, rng.getrandbits(64))  # type: ignore[union-attr]
        lineage = Lineage("II-crossover", (code.fingerprint, partner.fingerprint))  # type: ignore[union-attr]
    else:
        res = random_delete_node(code.ast, rng.getrandbits(64))
        lineage = Lineage("II-deletion", (code.fingerprint,))
    return HeuristicCode.from_ast(res.result, arity, (lineage,))
