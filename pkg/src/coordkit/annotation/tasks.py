"""Work items for the human annotation loop.

Trivial phrases are labeled automatically and produce no task.  Flat
nominal phrases need their element spans marked; flat non-nominal phrases
need the coordination boundary; everything else needs conjunct marking.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..detect import CoordPhrase, find_coordination_phrases
from ..transform import NOMINAL_CATEGORIES
from ..treebank import (
    NodePath,
    Span,
    Tree,
    has_content,
    resolve,
    span_of,
    tokens,
)

FLAT_ELEMENTS = "flat-elements"
CONJUNCT_MARKING = "conjunct-marking"
MODIFIER_RANGE = "non-NP-modifier-range"


@dataclass(frozen=True)
class AnnotationTask:
    id: str
    tree_id: str
    path: NodePath
    kind: str
    rendered: str
    phrase_span: Span
    coordinator_spans: tuple[Span, ...]
    suggested_spans: tuple[Span, ...]


def task_kind(phrase: CoordPhrase) -> str | None:
    if phrase.trivial:
        return None
    if phrase.flat:
        if phrase.category in NOMINAL_CATEGORIES:
            return FLAT_ELEMENTS
        return MODIFIER_RANGE
    return CONJUNCT_MARKING


def build_tasks(corpus: list[Tree]) -> list[AnnotationTask]:
    out: list[AnnotationTask] = []
    n = 0
    for tree in corpus:
        for phrase in find_coordination_phrases(tree):
            kind = task_kind(phrase)
            if kind is None:
                continue
            node = resolve(tree, phrase.path)
            coordinator_spans = tuple(
                span_of(node.children[i]) for i in phrase.coordinator_children
            )
            suggested = tuple(
                span_of(c) for c in node.children if has_content(c)
            )
            out.append(AnnotationTask(
                id=f"T{n:04d}",
                tree_id=tree.id,
                path=phrase.path,
                kind=kind,
                rendered=render_task(tree, phrase.path),
                phrase_span=span_of(node),
                coordinator_spans=coordinator_spans,
                suggested_spans=suggested,
            ))
            n += 1
    return out


# ---------------------------------------------------------------------------
# Rendering

# Tokens that glue onto the preceding word when detokenizing.
_ATTACH_LEFT = {",", ".", ":", ";", "!", "?", "%", "''", "'", "'s", "'re", "'ve",
                "'ll", "'d", "'m", "n't"}
# Tokens that glue onto the following word.
_ATTACH_RIGHT = {"``", "$", "#"}


def _no_space_between(prev_word: str, word: str) -> bool:
    return word.lower() in _ATTACH_LEFT or prev_word in _ATTACH_RIGHT


def render_task(tree: Tree, path: NodePath) -> str:
    """Sentence with the phrase in parentheses and each coordinator braced.

    Empty elements are omitted; -LRB-/-RRB- words stay escaped so that the
    added parentheses stay unambiguous.
    """
    node = resolve(tree, path)
    phrase_span = span_of(node)
    brace_spans = [
        span_of(c) for i, c in enumerate(node.children)
        if i in _coordinators(tree, path)
    ]
    pieces: list[tuple[str, str, str]] = []
    for tok in tokens(tree.root):
        if tok.is_empty:
            continue
        prefix = suffix = ""
        for span in brace_spans:
            if tok.index == span.start:
                prefix = "{" + prefix
            if tok.index == span.end - 1:
                suffix = suffix + "}"
        if tok.index == _first_visible(tree, phrase_span):
            prefix = "(" + prefix
        if tok.index == _last_visible(tree, phrase_span):
            suffix = suffix + ")"
        pieces.append((prefix, tok.word, suffix))
    parts: list[str] = []
    prev_word: str | None = None
    for prefix, word, suffix in pieces:
        if prev_word is not None and not _no_space_between(prev_word, word):
            parts.append(" ")
        parts.append(prefix + word + suffix)
        prev_word = word
    return "".join(parts)


def _coordinators(tree: Tree, path: NodePath) -> tuple[int, ...]:
    from ..detect import sided_coordinators

    return sided_coordinators(resolve(tree, path))


def _first_visible(tree: Tree, span: Span) -> int | None:
    for tok in tokens(tree.root):
        if span.start <= tok.index < span.end and not tok.is_empty:
            return tok.index
    return None


def _last_visible(tree: Tree, span: Span) -> int | None:
    last = None
    for tok in tokens(tree.root):
        if span.start <= tok.index < span.end and not tok.is_empty:
            last = tok.index
    return last
