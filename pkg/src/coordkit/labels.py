"""Assign coordination function labels to the children of a coordination phrase.

Conjunct spans come in from outside (automatic for the two-element case,
human-provided otherwise); every other child's role follows from position:
material between the outermost conjuncts is a coordinator or connective,
material outside them is a marker or shared element.
"""
from __future__ import annotations

from dataclasses import replace

from .detect import is_coordinator_shaped, sided_coordinators
from .treebank import (
    Internal,
    NodePath,
    Span,
    Tree,
    content_tokens,
    has_content,
    replace_at,
    resolve,
    span_of,
)

MARKER_LEXICON = frozenset(
    {"both", "either", "between", "first", "neither", "not", "not only",
     "respectively", "together"}
)


class RoleValidationError(ValueError):
    pass


class BoundaryMismatchError(ValueError):
    """A proposed span does not line up with any child constituent."""

    def __init__(self, proposed: Span, candidates: list[Span]):
        nearest = ", ".join(f"[{s.start},{s.end})" for s in candidates) or "none"
        super().__init__(
            f"span [{proposed.start},{proposed.end}) matches no child constituent; "
            f"nearest child spans: {nearest}")
        self.proposed = proposed
        self.candidates = candidates


def is_marker(words: list[str], lexicon: frozenset[str] = MARKER_LEXICON) -> bool:
    return " ".join(w.lower() for w in words) in lexicon


def _content_child_spans(node: Internal) -> list[tuple[int, Span]]:
    return [(i, span_of(c)) for i, c in enumerate(node.children) if has_content(c)]


def reconcile_span(proposed: Span, tree: Tree, path: NodePath) -> Span:
    """Snap a proposed span to the single child constituent it overlaps.

    Extension to the child's boundaries is allowed; overlapping two or more
    content-bearing children is a mismatch for human review.
    """
    node = resolve(tree, path)
    proposed = Span(*proposed)
    overlapping = [
        (i, s) for i, s in _content_child_spans(node) if s.overlaps(proposed)
    ]
    if len(overlapping) != 1:
        raise BoundaryMismatchError(proposed, [s for _, s in _content_child_spans(node)])
    return overlapping[0][1]


def _conjunct_children(tree: Tree, path: NodePath, conjunct_spans: list[Span]) -> list[int]:
    node = resolve(tree, path)
    picked: list[int] = []
    for span in conjunct_spans:
        child_span = reconcile_span(span, tree, path)
        idx = next(i for i, s in _content_child_spans(node) if s == child_span)
        child = node.children[idx]
        if is_coordinator_shaped(child):
            raise BoundaryMismatchError(Span(*span), [child_span])
        if idx in picked:
            raise RoleValidationError(
                f"two conjunct spans land on the same constituent at {path}")
        picked.append(idx)
    return sorted(picked)


def _set_child_function(node: Internal, idx: int, function: str | None) -> Internal:
    child = node.children[idx]
    new_child = Internal(replace(child.label, coord_function=function), child.children)
    children = list(node.children)
    children[idx] = new_child
    return Internal(node.label, tuple(children))


def assign_roles(
    tree: Tree,
    path: NodePath,
    conjunct_spans: list[Span],
    lexicon: frozenset[str] = MARKER_LEXICON,
) -> Tree:
    """Label a coordination phrase given its conjunct spans.

    Children covered by the spans become COORD; coordinators between the
    outermost conjuncts become CC; anything else between them is CONN and
    anything outside them is MARK (lexicon) or SHARED.  Punctuation and
    empty elements stay unlabeled.  A node that is simultaneously a conjunct
    and a coordination phrase keeps COORD; its own phrase label is implied
    by its coordinator children.
    """
    if len(conjunct_spans) < 2:
        raise RoleValidationError(f"need at least two conjunct spans, got {len(conjunct_spans)}")
    conjuncts = _conjunct_children(tree, path, [Span(*s) for s in conjunct_spans])
    node = resolve(tree, path)
    first, last = conjuncts[0], conjuncts[-1]
    if not any(
        is_coordinator_shaped(node.children[i]) for i in range(first + 1, last)
    ):
        raise RoleValidationError(f"no coordinator between the conjuncts at {path}")

    def relabel(node: Internal) -> Internal:
        out = node
        for i, child in enumerate(node.children):
            if not has_content(child):
                continue
            if i in conjuncts:
                role = "COORD"
            elif is_coordinator_shaped(child) and first < i < last:
                role = "CC"
            elif i < first or i > last:
                role = "MARK" if is_marker(
                    [t.word for t in content_tokens(child)], lexicon) else "SHARED"
            else:
                role = "CONN"
            out = _set_child_function(out, i, role)
        if out.label.coord_function is None:
            out = Internal(replace(out.label, coord_function="CCP"), out.children)
        return out

    return replace_at(tree, path, relabel)


def label_trivial_ccp(tree: Tree, path: NodePath, lexicon: frozenset[str] = MARKER_LEXICON
                      ) -> Tree | None:
    """Auto-label the one-coordinator, two-element case; None when not trivial."""
    node = resolve(tree, path)
    coordinators = sided_coordinators(node)
    elements = [
        i for i, c in enumerate(node.children)
        if i not in coordinators and has_content(c)
    ]
    if len(coordinators) != 1 or len(elements) != 2:
        return None
    spans = [span_of(node.children[i]) for i in elements]
    return assign_roles(tree, path, spans, lexicon)
