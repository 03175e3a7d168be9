"""Find coordination phrases and classify coordinator usage.

A phrase coordinates when a coordinator child has at least one
content-bearing element on each side.  Comparative-quantity phrases
("50 or so", "5 dollars or less") look like coordinations but are not,
and are excluded here and consolidated by the transform pass instead.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .treebank import (
    Internal,
    Node,
    NodePath,
    Tree,
    content_tokens,
    has_content,
    is_preterminal,
    iter_internal,
    resolve,
    tokens,
)

QUANTITY_SECOND_CONJUNCTS = frozenset({"more", "less", "so", "two", "up"})

CCUsage = Literal[
    "coordination", "discourse-marker", "parenthetical-intro", "quantity-approximator"
]


class UsageError(ValueError):
    """Raised when a path handed to classify_cc does not lead to a coordinator."""


@dataclass(frozen=True)
class CoordPhrase:
    tree_id: str
    path: NodePath
    coordinator_children: tuple[int, ...]
    flat: bool
    trivial: bool
    category: str


def is_cc_preterminal(node: Node) -> bool:
    return is_preterminal(node) and node.label.category == "CC"


def is_coordinator_shaped(node: Node) -> bool:
    """CC preterminals and multi-word CONJP coordinators."""
    return is_cc_preterminal(node) or (
        isinstance(node, Internal) and node.label.category == "CONJP"
    )


def _qualifies(node: Node) -> bool:
    # An element that can stand on a coordinator's side: content-bearing and
    # not itself coordinator material.
    return has_content(node) and not is_coordinator_shaped(node)


def sided_coordinators(node: Internal) -> tuple[int, ...]:
    """Child indices of coordinators with a qualifying element on each side."""
    out = []
    for i, child in enumerate(node.children):
        if not is_coordinator_shaped(child):
            continue
        if any(_qualifies(c) for c in node.children[:i]) and any(
            _qualifies(c) for c in node.children[i + 1 :]
        ):
            out.append(i)
    return tuple(out)


def _comparative_quantity_pattern(node: Internal) -> tuple[int, int] | None:
    """Return (coordinator index, final-element index) when the pattern holds."""
    children = node.children
    for i, child in enumerate(children):
        if not is_cc_preterminal(child):
            continue
        if not any(has_content(c) for c in children[:i]):
            continue  # a first conjunct is required
        after = [j for j in range(i + 1, len(children)) if has_content(children[j])]
        if not after:
            continue
        j = after[0]
        toks = tokens(children[j])
        if len(toks) != 1 or toks[0].word.lower() not in QUANTITY_SECOND_CONJUNCTS:
            continue
        if len(after) > 1:
            continue  # must end the phrase
        if node.label.category == "QP" or _quantityish(children[:i]):
            return i, j
    return None


def _quantityish(left_context: tuple[Node, ...]) -> bool:
    for child in left_context:
        for _, n in _walk(child):
            if isinstance(n, Internal) and n.label.category == "QP":
                return True
        if any(t.pos in ("CD", "$") for t in tokens(child)):
            return True
    return False


def _walk(node: Node):
    if isinstance(node, Internal):
        yield from iter_internal(node)


def is_comparative_quantity(node: Internal) -> bool:
    return _comparative_quantity_pattern(node) is not None


def _is_flat(node: Internal) -> bool:
    # Operational reading of "all the words at the same level": a run of
    # adjacent preterminal children carrying two or more content tokens, in
    # a phrase with three or more elements.
    if sum(1 for c in node.children if has_content(c)) < 3:
        return False
    run_content = 0
    for child in node.children:
        if is_preterminal(child):
            tok = tokens(child)[0]
            if not tok.is_punct and not tok.is_empty:
                run_content += 1
            if run_content >= 2:
                return True
        else:
            run_content = 0
    return False


def _is_trivial(node: Internal, coordinators: tuple[int, ...]) -> bool:
    if len(coordinators) != 1:
        return False
    elements = [
        i for i, c in enumerate(node.children) if i not in coordinators and has_content(c)
    ]
    return len(elements) == 2


def find_coordination_phrases(tree: Tree) -> list[CoordPhrase]:
    """All coordination phrases in document order, quantity patterns excluded."""
    out: list[CoordPhrase] = []
    for path, node in iter_internal(tree.root):
        if is_preterminal(node):
            continue
        if is_comparative_quantity(node):
            continue
        coords = sided_coordinators(node)
        if not coords:
            continue
        out.append(
            CoordPhrase(
                tree_id=tree.id,
                path=path,
                coordinator_children=coords,
                flat=_is_flat(node),
                trivial=_is_trivial(node, coords),
                category=node.label.category,
            )
        )
    return out


def classify_cc(tree: Tree, cc_path: NodePath) -> CCUsage:
    """What a coordinator occurrence does: coordinate, introduce, approximate."""
    node = resolve(tree, cc_path)
    if not is_cc_preterminal(node):
        raise UsageError(f"path {cc_path} does not lead to a CC in tree {tree.id}")
    if cc_path:
        parent = resolve(tree, cc_path[:-1])
        child_idx = cc_path[-1]
        if not is_comparative_quantity(parent) and child_idx in sided_coordinators(parent):
            return "coordination"
        # A CC heading a CONJP that itself coordinates at the level above.
        if parent.label.category == "CONJP" and len(cc_path) >= 2:
            grandparent = resolve(tree, cc_path[:-2])
            if cc_path[-2] in sided_coordinators(grandparent):
                return "coordination"
    if _first_content_in_prn(tree, cc_path):
        return "parenthetical-intro"
    if cc_path:
        parent = resolve(tree, cc_path[:-1])
        pattern = _comparative_quantity_pattern(parent)
        if pattern is not None and pattern[0] == cc_path[-1]:
            return "quantity-approximator"
    return "discourse-marker"


def _first_content_in_prn(tree: Tree, cc_path: NodePath) -> bool:
    cc_token = tokens(resolve(tree, cc_path))[0]
    for depth in range(len(cc_path) - 1, -1, -1):
        ancestor = resolve(tree, cc_path[:depth])
        if ancestor.label.category != "PRN":
            continue
        content = content_tokens(ancestor)
        if content and content[0].index == cc_token.index:
            return True
    return False


def find_outside_premodifiers(tree: Tree) -> list[tuple[NodePath, NodePath]]:
    """Pairs of (modifier path, phrase path) to consolidate inside the phrase.

    Covers ADVPs immediately left of a VP coordination and marker phrases
    adjacent (punctuation-transparent) to any coordination phrase.
    """
    from .labels import is_marker  # cycle: labels also builds on detect

    phrases = {p.path: p for p in find_coordination_phrases(tree)}
    pairs: list[tuple[NodePath, NodePath]] = []
    seen: set[tuple[NodePath, NodePath]] = set()

    def add(mod_path: NodePath, ccp_path: NodePath) -> None:
        if (mod_path, ccp_path) not in seen:
            seen.add((mod_path, ccp_path))
            pairs.append((mod_path, ccp_path))

    for path, node in iter_internal(tree.root):
        if is_preterminal(node):
            continue
        for i, child in enumerate(node.children):
            ccp_path = path + (i,)
            phrase = phrases.get(ccp_path)
            if phrase is None:
                continue
            if phrase.category == "VP" and i > 0:
                left = node.children[i - 1]
                if isinstance(left, Internal) and left.label.category == "ADVP":
                    add(path + (i - 1,), ccp_path)
            for j in _adjacent_content(node, i, -1), _adjacent_content(node, i, +1):
                if j is None:
                    continue
                sibling = node.children[j]
                if is_marker([t.word for t in content_tokens(sibling)]):
                    add(path + (j,), ccp_path)
    pairs.sort(key=lambda pair: (pair[0], pair[1]))
    return pairs


def _adjacent_content(node: Internal, i: int, step: int) -> int | None:
    """Nearest sibling of child ``i`` in direction ``step``, skipping punctuation."""
    j = i + step
    while 0 <= j < len(node.children):
        if has_content(node.children[j]):
            return j
        j += step
    return None
