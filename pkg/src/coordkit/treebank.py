"""Bracketed constituency trees with coordination-function suffixes.

The tree model distinguishes internal nodes (label plus children) from
terminals (tokens).  A preterminal is an internal node whose single child is
a terminal, so part-of-speech tags live on preterminal labels and are
mirrored on the token itself for convenience.  Trees are immutable; every
edit produces a new tree.
"""
from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, NamedTuple

COORD_FUNCTIONS = frozenset({"CCP", "CC", "COORD", "MARK", "CONN", "SHARED"})

# EVALB-style punctuation preterminals.  `$` and `#` head quantity material
# and are deliberately not punctuation.
PUNCT_TAGS = frozenset({",", ".", ":", "``", "''", "-LRB-", "-RRB-"})
EMPTY_TAG = "-NONE-"

NodePath = tuple[int, ...]


class ParseError(ValueError):
    """Raised on malformed bracketed input, with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class PathError(LookupError):
    """Raised when a node path does not resolve against a tree."""


class Span(NamedTuple):
    """Half-open token index range [start, end)."""

    start: int
    end: int

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Token:
    index: int
    word: str
    pos: str

    @property
    def is_empty(self) -> bool:
        return self.pos == EMPTY_TAG

    @property
    def is_punct(self) -> bool:
        return self.pos in PUNCT_TAGS


@dataclass(frozen=True)
class SynLabel:
    """A node label: category, original treebank suffixes, optional function."""

    category: str
    ptb_suffixes: tuple[str, ...] = ()
    coord_function: str | None = None

    def __post_init__(self):
        if not self.category:
            raise ValueError("empty category")
        if self.coord_function is not None and self.coord_function not in COORD_FUNCTIONS:
            raise ValueError(f"unknown coordination function: {self.coord_function!r}")

    def text(self, emit_function: bool = True) -> str:
        parts = [self.category, *self.ptb_suffixes]
        if emit_function and self.coord_function is not None:
            parts.append(self.coord_function)
        return "-".join(parts)


def split_label(raw: str) -> SynLabel:
    """Split a raw label into category, suffixes and coordination function.

    Only the final dash-suffix may be consumed as a coordination function;
    every other suffix is kept verbatim.  Labels that are dashes all the way
    through (-NONE-, -LRB-, -RRB-) are whole categories.
    """
    if raw.startswith("-"):
        return SynLabel(raw)
    parts = raw.split("-")
    suffixes = parts[1:]
    function = None
    if suffixes and suffixes[-1] in COORD_FUNCTIONS:
        function = suffixes[-1]
        suffixes = suffixes[:-1]
    return SynLabel(parts[0], tuple(suffixes), function)


@dataclass(frozen=True)
class Leaf:
    token: Token


@dataclass(frozen=True)
class Internal:
    label: SynLabel
    children: tuple["Node", ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError("internal node needs at least one child")
        if any(isinstance(c, Leaf) for c in self.children):
            if len(self.children) != 1:
                raise ValueError("a terminal must be the only child of its tag node")


Node = Internal | Leaf


def is_preterminal(node: Node) -> bool:
    return isinstance(node, Internal) and isinstance(node.children[0], Leaf)


@dataclass(frozen=True)
class Tree:
    id: str
    root: Internal


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(r"[()]|[^\s()]+")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.items = [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]
        self.pos = 0

    def peek(self, ahead: int = 0) -> str | None:
        i = self.pos + ahead
        return self.items[i][0] if i < len(self.items) else None

    def take(self) -> str:
        value, _ = self.items[self.pos]
        self.pos += 1
        return value

    def error(self, message: str) -> "ParseError":
        if self.pos < len(self.items):
            offset = self.items[self.pos][1]
        else:
            offset = len(self.text)
        line = self.text.count("\n", 0, offset) + 1
        column = offset - (self.text.rfind("\n", 0, offset) + 1) + 1
        return ParseError(message, line, column)


def _parse_node(cur: _Cursor) -> Internal:
    assert cur.take() == "("
    head = cur.peek()
    if head is None:
        raise cur.error("unbalanced parentheses: unexpected end of input")
    if head == "(":
        raise cur.error("empty label on a non-wrapper node")
    if head == ")":
        raise cur.error("node has no label")
    label = split_label(cur.take())
    children: list[Internal] = []
    word: str | None = None
    while True:
        nxt = cur.peek()
        if nxt is None:
            raise cur.error("unbalanced parentheses: missing ')'")
        if nxt == ")":
            cur.take()
            break
        if nxt == "(":
            if word is not None:
                raise cur.error("cannot mix a word and constituents under one label")
            children.append(_parse_node(cur))
        else:
            if children:
                raise cur.error("cannot mix a word and constituents under one label")
            if word is not None:
                raise cur.error("tag dominates more than one word (missing part-of-speech tags?)")
            word = cur.take()
    if word is not None:
        return Internal(label, (Leaf(Token(-1, word, label.category)),))
    if not children:
        raise cur.error("constituent has no children")
    return Internal(label, tuple(children))


def _index_terminals(root: Internal) -> Internal:
    counter = itertools.count()

    def rebuild(node: Internal) -> Internal:
        if is_preterminal(node):
            leaf: Leaf = node.children[0]  # type: ignore[assignment]
            return Internal(node.label, (Leaf(replace(leaf.token, index=next(counter))),))
        return Internal(node.label, tuple(rebuild(c) for c in node.children))

    return rebuild(root)


def parse_bracketed(text: str, source: str = "<text>") -> list[Tree]:
    """Parse bracketed trees; a label-less outer ``( ... )`` wrapper is absorbed."""
    cur = _Cursor(text)
    roots: list[Internal] = []
    while cur.peek() is not None:
        if cur.peek() != "(":
            raise cur.error(f"expected '(' but found {cur.peek()!r}")
        if cur.peek(1) == "(":
            cur.take()
            wrapped: list[Internal] = []
            while cur.peek() == "(":
                wrapped.append(_parse_node(cur))
            if cur.peek() != ")":
                raise cur.error("unbalanced parentheses in wrapper")
            cur.take()
            if not wrapped:
                raise cur.error("empty wrapper")
            roots.extend(wrapped)
        else:
            roots.append(_parse_node(cur))
    return [Tree(f"{source}#{i}", _index_terminals(r)) for i, r in enumerate(roots)]


# ---------------------------------------------------------------------------
# Serialization

def _serialize_node(node: Internal, emit_functions: bool) -> str:
    label = node.label.text(emit_functions)
    if is_preterminal(node):
        leaf: Leaf = node.children[0]  # type: ignore[assignment]
        return f"({label} {leaf.token.word})"
    inner = " ".join(_serialize_node(c, emit_functions) for c in node.children)
    return f"({label} {inner})"


def serialize(tree: Tree, emit_functions: bool = True, wrap: bool = False) -> str:
    """Canonical single-line form; ``wrap`` reproduces the outer ``( ... )``."""
    text = _serialize_node(tree.root, emit_functions)
    return f"( {text} )" if wrap else text


# ---------------------------------------------------------------------------
# Navigation

def resolve(tree: Tree, path: NodePath) -> Internal:
    node = tree.root
    for step in path:
        if not isinstance(node, Internal) or step >= len(node.children) or step < 0:
            raise PathError(f"path {path} does not resolve in tree {tree.id}")
        node = node.children[step]
    if not isinstance(node, Internal):
        raise PathError(f"path {path} leads below a preterminal in tree {tree.id}")
    return node


def tokens(node: Node) -> list[Token]:
    out: list[Token] = []

    def walk(n: Node) -> None:
        if isinstance(n, Leaf):
            out.append(n.token)
        else:
            for c in n.children:
                walk(c)

    walk(node)
    return out


def span_of(node: Node) -> Span:
    toks = tokens(node)
    return Span(toks[0].index, toks[-1].index + 1)


def node_span(tree: Tree, path: NodePath) -> Span:
    """Token span of the subtree at ``path``, counting punctuation and empties."""
    return span_of(resolve(tree, path))


def iter_internal(root: Internal) -> Iterator[tuple[NodePath, Internal]]:
    """Preorder traversal over internal nodes, preterminals included."""

    def walk(node: Internal, path: NodePath) -> Iterator[tuple[NodePath, Internal]]:
        yield path, node
        if is_preterminal(node):
            return
        for i, child in enumerate(node.children):
            yield from walk(child, path + (i,))  # type: ignore[arg-type]

    yield from walk(root, ())


def replace_at(tree: Tree, path: NodePath, fn: Callable[[Internal], Internal]) -> Tree:
    """Return a new tree with ``fn`` applied to the node at ``path``."""

    def rebuild(node: Internal, remaining: NodePath) -> Internal:
        if not remaining:
            return fn(node)
        i = remaining[0]
        if not isinstance(node, Internal) or i >= len(node.children):
            raise PathError(f"path {path} does not resolve in tree {tree.id}")
        child = node.children[i]
        if not isinstance(child, Internal):
            raise PathError(f"path {path} leads below a preterminal in tree {tree.id}")
        new_children = list(node.children)
        new_children[i] = rebuild(child, remaining[1:])
        return Internal(node.label, tuple(new_children))

    return Tree(tree.id, rebuild(tree.root, path))


def with_function(tree: Tree, path: NodePath, function: str | None) -> Tree:
    return replace_at(
        tree, path, lambda n: Internal(replace(n.label, coord_function=function), n.children)
    )


def strip_coord_functions(tree: Tree) -> Tree:
    """Identical tree with every coordination function removed."""

    def rebuild(node: Node) -> Node:
        if isinstance(node, Leaf):
            return node
        label = replace(node.label, coord_function=None)
        return Internal(label, tuple(rebuild(c) for c in node.children))

    return Tree(tree.id, rebuild(tree.root))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Node-level helpers shared across the toolkit

def has_content(node: Node) -> bool:
    """True when the subtree carries at least one non-punctuation, non-empty token."""
    return any(not t.is_punct and not t.is_empty for t in tokens(node))


def content_tokens(node: Node) -> list[Token]:
    return [t for t in tokens(node) if not t.is_punct and not t.is_empty]


# ---------------------------------------------------------------------------
# Corpus I/O

def read_trees(path: str | Path) -> list[Tree]:
    p = Path(path)
    return parse_bracketed(p.read_text(encoding="utf-8"), source=p.name)


def read_corpus(paths: Iterable[str | Path]) -> list[Tree]:
    out: list[Tree] = []
    for p in paths:
        out.extend(read_trees(p))
    return out


def corpus_text(trees: Iterable[Tree], emit_functions: bool = True, wrap: bool = False) -> str:
    lines = [serialize(t, emit_functions=emit_functions, wrap=wrap) for t in trees]
    return "\n".join(lines) + "\n" if lines else ""


def write_trees(
    path: str | Path, trees: Iterable[Tree], emit_functions: bool = True, wrap: bool = False
) -> None:
    Path(path).write_text(corpus_text(trees, emit_functions, wrap), encoding="utf-8")


def corpus_checksum(trees: Iterable[Tree]) -> str:
    """SHA-256 over the canonical serialization; anchors diffs to exact text."""
    return hashlib.sha256(corpus_text(trees).encode("utf-8")).hexdigest()


_NUMERIC_RE = re.compile(r"^\d+$")


def validate_corpus(trees: Iterable[Tree]) -> list[str]:
    """Warnings for unusual label combinations worth human review."""
    warnings: list[str] = []
    for tree in trees:
        for path, node in iter_internal(tree.root):
            label = node.label
            if label.coord_function and any(_NUMERIC_RE.match(s) for s in label.ptb_suffixes):
                warnings.append(
                    f"{tree.id}: coordination function co-occurs with a coindex "
                    f"on {label.text()} at {list(path)}"
                )
    return warnings
