"""The five structural normalizations, each returning the edited tree plus
the invertible ops that realize it.

Every transform preserves the terminal sequence exactly; node counts only
ever grow, by one per inserted bracket.
"""
from __future__ import annotations

import enum
import logging
from collections import Counter

from . import diffio
from .detect import is_coordinator_shaped, _comparative_quantity_pattern
from .treebank import (
    Internal,
    Node,
    NodePath,
    Span,
    Tree,
    has_content,
    resolve,
    span_of,
)

logger = logging.getLogger(__name__)


class TransformKind(enum.Enum):
    FLAT_BRACKETING = "FlatBracketing"
    COMPARATIVE_QUANTITY = "ComparativeQuantity"
    MODIFIER_COORDINATION = "ModifierCoordination"
    SPLIT_CONJUNCT_MERGE = "SplitConjunctMerge"
    PREMODIFIER_ADOPTION = "PremodifierAdoption"


class TransformError(ValueError):
    pass


POS_TO_PHRASE = {
    "NN": "NP", "NNS": "NP", "NNP": "NP", "NNPS": "NP", "PRP": "NP", "EX": "NP",
    "DT": "NP",
    "VB": "VP", "VBD": "VP", "VBG": "VP", "VBN": "VP", "VBP": "VP", "VBZ": "VP",
    "JJ": "ADJP", "JJR": "ADJP", "JJS": "ADJP",
    "RB": "ADVP", "RBR": "ADVP", "RBS": "ADVP",
    "CD": "QP",
    "IN": "PP", "TO": "PP",
}

PHRASE_CATEGORIES = frozenset({
    "S", "SBAR", "SBARQ", "SINV", "SQ", "NP", "VP", "PP", "ADJP", "ADVP", "QP",
    "UCP", "PRN", "FRAG", "NX", "NML", "NAC", "WHNP", "WHPP", "WHADJP", "WHADVP",
    "X", "INTJ", "CONJP", "LST", "RRC", "PRT",
})

NOMINAL_CATEGORIES = frozenset({"NP", "NX", "NML", "NAC"})


def mapped_category(category: str) -> str | None:
    """Phrase-level category for a POS tag; phrasal labels map to themselves."""
    if category in POS_TO_PHRASE:
        return POS_TO_PHRASE[category]
    if category in PHRASE_CATEGORIES:
        return category
    return None


def phrase_label_for(element_categories: list[str]) -> str:
    """Label for a bracket over coordinated elements: shared type, else UCP."""
    if not element_categories:
        raise TransformError("cannot label a bracket over zero elements")
    mapped = []
    for cat in element_categories:
        m = mapped_category(cat)
        if m is None:
            logger.warning("no phrase mapping for category %r; falling back to UCP", cat)
            return "UCP"
        mapped.append(m)
    first = mapped[0]
    return first if all(m == first for m in mapped) else "UCP"


def flat_group_label(element_categories: list[str]) -> str:
    """Label for a bracket over one multi-token element of a flat phrase.

    The group's head decides: majority mapped category, ties going to the
    rightmost member, which matches how flat nominal runs are headed.
    """
    mapped = [mapped_category(c) for c in element_categories]
    known = [m for m in mapped if m is not None]
    if not known:
        logger.warning("no phrase mapping for any of %r; falling back to UCP",
                       element_categories)
        return "UCP"
    counts = Counter(known)
    best = max(counts.values())
    for m in reversed(known):
        if counts[m] == best:
            return m
    raise AssertionError("unreachable")


def _category_of(node: Node) -> str:
    return node.label.category  # type: ignore[union-attr]


def _apply_ops(tree: Tree, ops: list[diffio.DiffOp]) -> Tree:
    for op in ops:
        tree = diffio.apply_op(tree, op)
    return tree


# ---------------------------------------------------------------------------
# 1. Flat bracketing

def _groups_from_spans(node: Internal, element_spans: list[Span]) -> list[list[int]]:
    spans = [Span(*s) for s in element_spans]
    if sorted(spans) != spans:
        raise TransformError("element spans must be sorted")
    for a, b in zip(spans, spans[1:]):
        if a.end > b.start:
            raise TransformError(f"element spans overlap: {a} and {b}")
    child_spans = [span_of(c) for c in node.children]
    groups: list[list[int]] = []
    covered: set[int] = set()
    for span in spans:
        idxs = [i for i, s in enumerate(child_spans) if span.contains(s)]
        if not idxs:
            raise TransformError(f"element span {span} covers no child")
        if any(span.overlaps(s) and not span.contains(s) for s in child_spans):
            raise TransformError(f"element span {span} splits a child constituent")
        if idxs != list(range(idxs[0], idxs[-1] + 1)):
            raise TransformError(f"element span {span} is not contiguous in children")
        if len(idxs) > 1 and any(is_coordinator_shaped(node.children[i]) for i in idxs):
            raise TransformError(f"element span {span} swallows a coordinator")
        groups.append(idxs)
        covered.update(idxs)
    for i, child in enumerate(node.children):
        if i not in covered and has_content(child):
            raise TransformError(
                f"element spans do not cover child {i} ({span_of(child)})")
    return groups


def bracket_flat_elements(
    tree: Tree, path: NodePath, element_spans: list[Span]
) -> tuple[Tree, list[diffio.DiffOp]]:
    """Wrap each multi-child element of a flat phrase in its own bracket."""
    node = resolve(tree, path)
    groups = _groups_from_spans(node, element_spans)
    ops: list[diffio.DiffOp] = []
    shift = 0
    for idxs in groups:
        if len(idxs) < 2:
            continue
        cats = [_category_of(node.children[i]) for i in idxs
                if has_content(node.children[i])]
        label = flat_group_label(cats)
        start, stop = idxs[0] - shift, idxs[-1] + 1 - shift
        ops.append(diffio.insert_bracket(
            tree.id, path, start, stop, label,
            provenance=TransformKind.FLAT_BRACKETING.value, anchor=path))
        shift += stop - start - 1
    return _apply_ops(tree, ops), ops


# ---------------------------------------------------------------------------
# 2. Comparative quantity

def consolidate_comparative_quantity(
    tree: Tree, path: NodePath
) -> tuple[Tree, list[diffio.DiffOp]]:
    """Wrap the coordinator and its quantity word under a QP bracket."""
    node = resolve(tree, path)
    pattern = _comparative_quantity_pattern(node)
    if pattern is None:
        return tree, []
    cc_idx, word_idx = pattern
    op = diffio.insert_bracket(
        tree.id, path, cc_idx, word_idx + 1, "QP",
        provenance=TransformKind.COMPARATIVE_QUANTITY.value, anchor=path)
    return _apply_ops(tree, [op]), [op]


# ---------------------------------------------------------------------------
# 3. Modifier coordination

def bracket_modifier_coordination(
    tree: Tree, path: NodePath, coord_child_range: tuple[int, int]
) -> tuple[Tree, list[diffio.DiffOp]]:
    """Bracket a coordination of modifiers, leaving head material outside.

    ``coord_child_range`` is an inclusive child-index range covering the
    conjuncts and coordinator only.
    """
    node = resolve(tree, path)
    first, last = coord_child_range
    if not (0 <= first <= last < len(node.children)):
        raise TransformError(f"child range [{first}..{last}] out of bounds at {path}")
    inside = list(range(first, last + 1))
    conjunct_cats = [
        _category_of(node.children[i]) for i in inside
        if has_content(node.children[i]) and not is_coordinator_shaped(node.children[i])
    ]
    if len(conjunct_cats) < 2:
        raise TransformError("range must cover at least two conjuncts")
    if not any(is_coordinator_shaped(node.children[i]) for i in inside):
        raise TransformError("range must cover the coordinator")
    outside = [i for i in range(len(node.children))
               if i not in inside and has_content(node.children[i])]
    if not outside:
        return tree, []  # nothing external to delimit against
    if node.label.category in NOMINAL_CATEGORIES:
        head = _head_child(node)
        if head is not None and first <= head <= last:
            raise TransformError(
                f"child range [{first}..{last}] includes the phrase head (child {head})")
    label = phrase_label_for(conjunct_cats)
    op = diffio.insert_bracket(
        tree.id, path, first, last + 1, label,
        provenance=TransformKind.MODIFIER_COORDINATION.value, anchor=path)
    return _apply_ops(tree, [op]), [op]


def _head_child(node: Internal) -> int | None:
    """Rightmost child whose mapped category matches the phrase majority."""
    mapped: list[tuple[int, str]] = []
    for i, child in enumerate(node.children):
        if not has_content(child) or is_coordinator_shaped(child):
            continue
        m = mapped_category(_category_of(child))
        if m is not None:
            mapped.append((i, m))
    if not mapped:
        return None
    counts = Counter(m for _, m in mapped)
    best = max(counts.values())
    majority = next(m for _, m in reversed(mapped) if counts[m] == best)
    return next(i for i, m in reversed(mapped) if m == majority)


# ---------------------------------------------------------------------------
# 4. Split conjuncts

def merge_split_conjunct(
    tree: Tree, path: NodePath, child_range: tuple[int, int]
) -> tuple[Tree, list[diffio.DiffOp]]:
    """Bracket adjacent siblings that jointly form one conjunct."""
    node = resolve(tree, path)
    first, last = child_range
    if not (0 <= first < last < len(node.children)):
        raise TransformError(f"merge range [{first}..{last}] must cover two or more children")
    cats = [_category_of(c) for c in node.children[first:last + 1]
            if has_content(c) and not is_coordinator_shaped(c)]
    if [mapped_category(c) for c in cats] == ["NP", "VP"]:
        label = "S"  # a subject plus its predicate makes a clause
    else:
        label = phrase_label_for(cats)
    op = diffio.insert_bracket(
        tree.id, path, first, last + 1, label,
        provenance=TransformKind.SPLIT_CONJUNCT_MERGE.value, anchor=path)
    return _apply_ops(tree, [op]), [op]


# ---------------------------------------------------------------------------
# 5. Premodifier adoption

def adopt_premodifier(
    tree: Tree, pair: tuple[NodePath, NodePath]
) -> tuple[Tree, list[diffio.DiffOp]]:
    """Move an outside ADVP or marker inside the coordination phrase.

    Left neighbors become the phrase's first child, right neighbors its last.
    Punctuation between the two moves along, keeping the terminal order.
    """
    mod_path, ccp_path = pair
    if mod_path[:-1] != ccp_path[:-1]:
        raise TransformError(f"{mod_path} and {ccp_path} are not siblings")
    parent_path = mod_path[:-1]
    parent = resolve(tree, parent_path)
    mod_idx, ccp_idx = mod_path[-1], ccp_path[-1]
    if mod_idx == ccp_idx:
        raise TransformError("modifier and phrase are the same node")
    lo, hi = min(mod_idx, ccp_idx), max(mod_idx, ccp_idx)
    if any(has_content(parent.children[i]) for i in range(lo + 1, hi)):
        raise TransformError(f"{mod_path} and {ccp_path} are not adjacent siblings")
    ops: list[diffio.DiffOp] = []
    if mod_idx < ccp_idx:
        for i in range(ccp_idx - 1, mod_idx - 1, -1):
            ops.append(diffio.adopt_sibling(
                tree.id, parent_path, i, "first",
                provenance=TransformKind.PREMODIFIER_ADOPTION.value, anchor=ccp_path))
    else:
        for _ in range(mod_idx - ccp_idx):
            ops.append(diffio.adopt_sibling(
                tree.id, parent_path, ccp_idx + 1, "last",
                provenance=TransformKind.PREMODIFIER_ADOPTION.value, anchor=ccp_path))
    return _apply_ops(tree, ops), ops
