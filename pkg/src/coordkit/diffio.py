"""Invertible, serializable tree edits: the annotation as a diff over a corpus.

Ops are ordered; each path is valid against the corpus state at the moment
the op applies.  The forward pipeline emits insert_bracket, set_function,
relabel and adopt_sibling; inversion mirrors those into remove_bracket and
eject_child.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .treebank import (
    Internal,
    Node,
    NodePath,
    Span,
    Tree,
    corpus_checksum,
    is_preterminal,
    iter_internal,
    resolve,
    span_of,
    split_label,
)

FORMAT_VERSION = "1"

INSERT = "insert_bracket"
REMOVE = "remove_bracket"
SET_FUNCTION = "set_function"
RELABEL = "relabel"
ADOPT = "adopt_sibling"
EJECT = "eject_child"


class DiffError(ValueError):
    pass


class DiffApplyError(DiffError):
    def __init__(self, message: str, op_index: int | None = None):
        if op_index is not None:
            message = f"op {op_index}: {message}"
        super().__init__(message)
        self.op_index = op_index


class IncomparableCorporaError(DiffError):
    pass


@dataclass(frozen=True)
class DiffOp:
    tree_id: str
    kind: str
    path: NodePath
    start: int | None = None          # insert/remove: first wrapped child
    stop: int | None = None           # insert/remove: past-last wrapped child
    label: str | None = None          # insert/remove/relabel: label text
    prior_label: str | None = None    # relabel
    function: str | None = None       # set_function
    prior_function: str | None = None  # set_function
    sibling: int | None = None        # adopt: index of the node moving in
    index: int | None = None          # eject: index of the phrase node
    position: str | None = None       # adopt/eject: "first" | "last"
    provenance: str | None = None
    anchor: NodePath | None = None

    def semantic_key(self) -> tuple:
        """Identity without bookkeeping fields (provenance, anchor)."""
        return (
            self.tree_id, self.kind, self.path, self.start, self.stop, self.label,
            self.prior_label, self.function, self.prior_function, self.sibling,
            self.index, self.position,
        )

    def to_record(self) -> dict:
        record = {"tree": self.tree_id, "op": self.kind, "path": list(self.path)}
        for name in ("start", "stop", "label", "prior_label", "function",
                     "prior_function", "sibling", "index", "position", "provenance"):
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        if self.anchor is not None:
            record["anchor"] = list(self.anchor)
        return record

    @classmethod
    def from_record(cls, record: dict) -> "DiffOp":
        return cls(
            tree_id=record["tree"],
            kind=record["op"],
            path=tuple(record["path"]),
            start=record.get("start"),
            stop=record.get("stop"),
            label=record.get("label"),
            prior_label=record.get("prior_label"),
            function=record.get("function"),
            prior_function=record.get("prior_function"),
            sibling=record.get("sibling"),
            index=record.get("index"),
            position=record.get("position"),
            provenance=record.get("provenance"),
            anchor=tuple(record["anchor"]) if record.get("anchor") is not None else None,
        )


def insert_bracket(tree_id, path, start, stop, label, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, INSERT, tuple(path), start=start, stop=stop, label=label,
                  provenance=provenance, anchor=anchor)


def remove_bracket(tree_id, path, start, stop, label, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, REMOVE, tuple(path), start=start, stop=stop, label=label,
                  provenance=provenance, anchor=anchor)


def set_function(tree_id, path, function, prior, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, SET_FUNCTION, tuple(path), function=function,
                  prior_function=prior, provenance=provenance, anchor=anchor)


def relabel(tree_id, path, label, prior, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, RELABEL, tuple(path), label=label, prior_label=prior,
                  provenance=provenance, anchor=anchor)


def adopt_sibling(tree_id, path, sibling, position, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, ADOPT, tuple(path), sibling=sibling, position=position,
                  provenance=provenance, anchor=anchor)


def eject_child(tree_id, path, index, position, provenance=None, anchor=None) -> DiffOp:
    return DiffOp(tree_id, EJECT, tuple(path), index=index, position=position,
                  provenance=provenance, anchor=anchor)


@dataclass(frozen=True)
class DiffFile:
    ops: tuple[DiffOp, ...]
    source_checksum: str | None = None
    result_checksum: str | None = None
    format_version: str = FORMAT_VERSION

    def save(self, path: str | Path) -> None:
        lines = [json.dumps({
            "format_version": self.format_version,
            "source_checksum": self.source_checksum,
            "result_checksum": self.result_checksum,
        })]
        lines.extend(json.dumps(op.to_record()) for op in self.ops)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DiffFile":
        lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
        if not lines:
            raise DiffError(f"empty diff file: {path}")
        header = json.loads(lines[0])
        if "format_version" not in header:
            raise DiffError(f"missing header in diff file: {path}")
        ops = tuple(DiffOp.from_record(json.loads(ln)) for ln in lines[1:])
        return cls(ops=ops, source_checksum=header.get("source_checksum"),
                   result_checksum=header.get("result_checksum"),
                   format_version=header["format_version"])


# ---------------------------------------------------------------------------
# Applying single ops

def _splice(children: Sequence[Node], start: int, stop: int,
            replacement: Sequence[Node]) -> tuple[Node, ...]:
    return tuple(children[:start]) + tuple(replacement) + tuple(children[stop:])


def apply_op(tree: Tree, op: DiffOp) -> Tree:
    """Apply one op; raises DiffApplyError on any inconsistency."""
    from .treebank import PathError, replace_at

    def edit(node: Internal) -> Internal:
        if is_preterminal(node) and op.kind in (INSERT, REMOVE, ADOPT, EJECT):
            raise DiffApplyError(f"{op.kind} targets a preterminal at {op.path}")
        if op.kind == INSERT:
            if op.start is None or op.stop is None or not (0 <= op.start < op.stop <= len(node.children)):
                raise DiffApplyError(f"insert range [{op.start},{op.stop}) invalid at {op.path}")
            new = Internal(split_label(op.label), tuple(node.children[op.start:op.stop]))
            return Internal(node.label, _splice(node.children, op.start, op.stop, [new]))
        if op.kind == REMOVE:
            if op.start is None or op.start >= len(node.children):
                raise DiffApplyError(f"remove index {op.start} invalid at {op.path}")
            target = node.children[op.start]
            if not isinstance(target, Internal) or is_preterminal(target):
                raise DiffApplyError(f"remove_bracket target at {op.path} is not a phrase node")
            if target.label.text() != op.label:
                raise DiffApplyError(
                    f"remove_bracket label mismatch at {op.path}: "
                    f"{target.label.text()!r} != {op.label!r}")
            if op.stop != op.start + len(target.children):
                raise DiffApplyError(f"remove_bracket span mismatch at {op.path}")
            return Internal(node.label, _splice(node.children, op.start, op.start + 1, target.children))
        if op.kind == SET_FUNCTION:
            if node.label.coord_function != op.prior_function:
                raise DiffApplyError(
                    f"set_function prior mismatch at {op.path}: "
                    f"{node.label.coord_function!r} != {op.prior_function!r}")
            from dataclasses import replace as dc_replace
            return Internal(dc_replace(node.label, coord_function=op.function), node.children)
        if op.kind == RELABEL:
            current = node.label.text(emit_function=False)
            if current != op.prior_label:
                raise DiffApplyError(
                    f"relabel prior mismatch at {op.path}: {current!r} != {op.prior_label!r}")
            new_label = split_label(op.label)
            if new_label.coord_function is not None:
                raise DiffApplyError("relabel must not carry a coordination function")
            from dataclasses import replace as dc_replace
            return Internal(
                dc_replace(node.label, category=new_label.category,
                           ptb_suffixes=new_label.ptb_suffixes),
                node.children)
        if op.kind == ADOPT:
            i = op.sibling
            if i is None or op.position not in ("first", "last"):
                raise DiffApplyError(f"malformed adopt_sibling at {op.path}")
            j = i + 1 if op.position == "first" else i - 1
            if not (0 <= i < len(node.children) and 0 <= j < len(node.children)):
                raise DiffApplyError(f"adopt_sibling indices out of range at {op.path}")
            phrase = node.children[j]
            if not isinstance(phrase, Internal) or is_preterminal(phrase):
                raise DiffApplyError(f"adopt_sibling target at {op.path} is not a phrase node")
            moving = node.children[i]
            if op.position == "first":
                new_phrase = Internal(phrase.label, (moving,) + phrase.children)
            else:
                new_phrase = Internal(phrase.label, phrase.children + (moving,))
            lo = min(i, j)
            return Internal(node.label, _splice(node.children, lo, lo + 2, [new_phrase]))
        if op.kind == EJECT:
            i = op.index
            if i is None or op.position not in ("first", "last") or i >= len(node.children):
                raise DiffApplyError(f"malformed eject_child at {op.path}")
            phrase = node.children[i]
            if not isinstance(phrase, Internal) or is_preterminal(phrase) or len(phrase.children) < 2:
                raise DiffApplyError(f"eject_child target at {op.path} cannot give up a child")
            if op.position == "first":
                moving, rest = phrase.children[0], phrase.children[1:]
                replacement = [moving, Internal(phrase.label, rest)]
            else:
                moving, rest = phrase.children[-1], phrase.children[:-1]
                replacement = [Internal(phrase.label, rest), moving]
            return Internal(node.label, _splice(node.children, i, i + 1, replacement))
        raise DiffApplyError(f"unknown op kind {op.kind!r}")

    try:
        return replace_at(tree, op.path, edit)
    except PathError as exc:
        raise DiffApplyError(str(exc)) from exc


def invert_op(op: DiffOp) -> DiffOp:
    if op.kind == INSERT:
        return DiffOp(op.tree_id, REMOVE, op.path, start=op.start, stop=op.stop,
                      label=op.label, provenance=op.provenance, anchor=op.anchor)
    if op.kind == REMOVE:
        return DiffOp(op.tree_id, INSERT, op.path, start=op.start, stop=op.stop,
                      label=op.label, provenance=op.provenance, anchor=op.anchor)
    if op.kind == SET_FUNCTION:
        return DiffOp(op.tree_id, SET_FUNCTION, op.path, function=op.prior_function,
                      prior_function=op.function, provenance=op.provenance, anchor=op.anchor)
    if op.kind == RELABEL:
        return DiffOp(op.tree_id, RELABEL, op.path, label=op.prior_label,
                      prior_label=op.label, provenance=op.provenance, anchor=op.anchor)
    if op.kind == ADOPT:
        index = op.sibling if op.position == "first" else op.sibling - 1
        return DiffOp(op.tree_id, EJECT, op.path, index=index, position=op.position,
                      provenance=op.provenance, anchor=op.anchor)
    if op.kind == EJECT:
        sibling = op.index if op.position == "first" else op.index + 1
        return DiffOp(op.tree_id, ADOPT, op.path, sibling=sibling, position=op.position,
                      provenance=op.provenance, anchor=op.anchor)
    raise DiffError(f"unknown op kind {op.kind!r}")


def invert(diff: DiffFile) -> DiffFile:
    """Reverse-order, kind-mirrored diff; source/result checksums swap."""
    by_tree: dict[str, list[DiffOp]] = {}
    order: list[str] = []
    for op in diff.ops:
        if op.tree_id not in by_tree:
            by_tree[op.tree_id] = []
            order.append(op.tree_id)
        by_tree[op.tree_id].append(op)
    ops: list[DiffOp] = []
    for tree_id in order:
        ops.extend(invert_op(op) for op in reversed(by_tree[tree_id]))
    return DiffFile(ops=tuple(ops), source_checksum=diff.result_checksum,
                    result_checksum=diff.source_checksum,
                    format_version=diff.format_version)


def apply(corpus: Sequence[Tree], diff: DiffFile, verify_checksum: bool = True) -> list[Tree]:
    """Apply a diff to a corpus; refuses to run against the wrong source text."""
    if verify_checksum and diff.source_checksum is not None:
        actual = corpus_checksum(corpus)
        if actual != diff.source_checksum:
            raise DiffApplyError(
                f"source corpus checksum mismatch: {actual} != {diff.source_checksum}")
    index = {t.id: i for i, t in enumerate(corpus)}
    trees = list(corpus)
    for i, op in enumerate(diff.ops):
        if op.tree_id not in index:
            raise DiffApplyError(f"unknown tree {op.tree_id!r}", op_index=i)
        slot = index[op.tree_id]
        try:
            trees[slot] = apply_op(trees[slot], op)
        except DiffApplyError as exc:
            raise DiffApplyError(str(exc), op_index=i) from exc
    if verify_checksum and diff.result_checksum is not None:
        actual = corpus_checksum(trees)
        if actual != diff.result_checksum:
            raise DiffApplyError(
                f"result corpus checksum mismatch: {actual} != {diff.result_checksum}")
    return trees


# ---------------------------------------------------------------------------
# Computing a canonical diff between two corpora

def compute_diff(original: Sequence[Tree], annotated: Sequence[Tree]) -> DiffFile:
    """Minimal-ish canonical op list with apply(original, result) == annotated.

    Nodes are aligned per token span; within a span the nested chain of
    phrase nodes is matched by label, leftovers pair up as relabels, and the
    rest become remove/insert ops.  Function changes become set_function ops.
    """
    if len(original) != len(annotated):
        raise IncomparableCorporaError(
            f"corpora differ in size: {len(original)} != {len(annotated)}")
    ops: list[DiffOp] = []
    for orig, annot in zip(original, annotated):
        if orig.id != annot.id:
            raise IncomparableCorporaError(f"tree ids differ: {orig.id} != {annot.id}")
        _check_terminals(orig, annot)
        ops.extend(_tree_diff(orig, annot))
    return DiffFile(ops=tuple(ops), source_checksum=corpus_checksum(original),
                    result_checksum=corpus_checksum(annotated))


def _check_terminals(orig: Tree, annot: Tree) -> None:
    from .treebank import tokens as tree_tokens

    a = [(t.word, t.pos) for t in tree_tokens(orig.root)]
    b = [(t.word, t.pos) for t in tree_tokens(annot.root)]
    if a != b:
        raise IncomparableCorporaError(f"terminal sequences differ in {orig.id}")


def _chains(root: Internal) -> dict[Span, list[Internal]]:
    chains: dict[Span, list[Internal]] = {}
    for _, node in iter_internal(root):
        if is_preterminal(node):
            continue
        chains.setdefault(span_of(node), []).append(node)
    return chains


def _lcs_pairs(a: list, b: list) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                table[i][j] = table[i + 1][j + 1] + 1
            else:
                table[i][j] = max(table[i + 1][j], table[i][j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _align_chain(p_labels: list, q_labels: list, force_first: bool
                 ) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Match chain members: LCS on labels, positional relabels in the gaps."""
    start = 0
    matched: list[tuple[int, int]] = []
    if force_first and p_labels and q_labels:
        matched.append((0, 0))
        start = 1
    lcs = _lcs_pairs(p_labels[start:], q_labels[start:])
    matched.extend((i + start, j + start) for i, j in lcs)
    relabeled: list[tuple[int, int]] = []
    removed: list[int] = []
    inserted: list[int] = []
    bounds = [(-1, -1)] + matched + [(len(p_labels), len(q_labels))]
    for (pi, qi), (pj, qj) in zip(bounds, bounds[1:]):
        gap_p = list(range(pi + 1, pj))
        gap_q = list(range(qi + 1, qj))
        for gp, gq in zip(gap_p, gap_q):
            relabeled.append((gp, gq))
        removed.extend(gap_p[len(gap_q):])
        inserted.extend(gap_q[len(gap_p):])
    matched.extend(relabeled)
    matched.sort()
    return matched, removed, inserted


def _locate_chain_node(tree: Tree, span: Span, position: int) -> NodePath:
    """Path of the ``position``-th phrase node with ``span`` (outermost first)."""
    seen = 0
    for path, node in iter_internal(tree.root):
        if is_preterminal(node):
            continue
        if span_of(node) == span:
            if seen == position:
                return path
            seen += 1
    raise DiffError(f"no phrase node #{position} with span {span} in {tree.id}")


def _lowest_container(tree: Tree, span: Span) -> tuple[NodePath, Internal]:
    best: tuple[NodePath, Internal] | None = None
    for path, node in iter_internal(tree.root):
        if is_preterminal(node):
            continue
        s = span_of(node)
        if s.contains(span) and s != span:
            if best is None or len(path) > len(best[0]):
                best = (path, node)
    if best is None:
        raise DiffError(f"no container for span {span} in {tree.id}")
    return best


def _covering_range(node: Internal, span: Span) -> tuple[int, int]:
    idxs = [i for i, c in enumerate(node.children) if span.contains(span_of(c))]
    if not idxs or idxs != list(range(idxs[0], idxs[-1] + 1)):
        raise DiffError(f"span {span} does not tile a child range")
    start, stop = idxs[0], idxs[-1] + 1
    got = Span(span_of(node.children[start]).start, span_of(node.children[stop - 1]).end)
    if got != span:
        raise DiffError(f"span {span} does not tile a child range")
    return start, stop


def _tree_diff(orig: Tree, annot: Tree) -> list[DiffOp]:
    ochains = _chains(orig.root)
    achains = _chains(annot.root)
    root_span = span_of(orig.root)
    spans = sorted(set(ochains) | set(achains))

    plan: dict[Span, tuple[list[tuple[int, int]], list[int], list[int]]] = {}
    for span in spans:
        p = ochains.get(span, [])
        q = achains.get(span, [])
        p_labels = [n.label.text(emit_function=False) for n in p]
        q_labels = [n.label.text(emit_function=False) for n in q]
        plan[span] = _align_chain(p_labels, q_labels, force_first=(span == root_span))

    ops: list[DiffOp] = []
    working = orig

    # Removals, in original preorder; locate each doomed node by counting the
    # chain members still alive above it.
    removal_jobs: list[tuple[Span, int]] = []
    for _, node in iter_internal(orig.root):
        if is_preterminal(node):
            continue
        span = span_of(node)
        chain = ochains[span]
        k = next(i for i, n in enumerate(chain) if n is node)
        if k in plan[span][1]:
            removal_jobs.append((span, k))
    removed_done: dict[Span, set[int]] = {}
    for span, k in removal_jobs:
        done = removed_done.setdefault(span, set())
        alive_above = sum(1 for j in range(k) if j not in done)
        path = _locate_chain_node(working, span, alive_above)
        node = resolve(working, path)
        parent_path, idx = path[:-1], path[-1]
        op = remove_bracket(working.id, parent_path, idx, idx + len(node.children),
                            node.label.text())
        ops.append(op)
        working = apply_op(working, op)
        done.add(k)

    # Insertions, in annotated preorder, so outer brackets land first.
    insert_jobs: list[tuple[Span, int]] = []
    for _, node in iter_internal(annot.root):
        if is_preterminal(node):
            continue
        span = span_of(node)
        chain = achains[span]
        k = next(i for i, n in enumerate(chain) if n is node)
        if k in plan[span][2]:
            insert_jobs.append((span, k))
    inserted_done: dict[Span, set[int]] = {}
    for span, k in insert_jobs:
        done = inserted_done.setdefault(span, set())
        matched_q = {q for _, q in plan[span][0]}
        present_above = sum(1 for j in range(k) if j in matched_q or j in done)
        current_chain = [
            (path, node) for path, node in iter_internal(working.root)
            if not is_preterminal(node) and span_of(node) == span
        ]
        new_node = achains[span][k]
        label = new_node.label.text()
        if present_above < len(current_chain):
            path = current_chain[present_above][0]
            parent_path, idx = path[:-1], path[-1]
            op = insert_bracket(working.id, parent_path, idx, idx + 1, label)
        else:
            if current_chain:
                base_path, base = current_chain[-1]
                start, stop = 0, len(base.children)
            else:
                base_path, base = _lowest_container(working, span)
                start, stop = _covering_range(base, span)
            op = insert_bracket(working.id, base_path, start, stop, label)
        ops.append(op)
        working = apply_op(working, op)
        done.add(k)

    # Relabels and function changes against the (now shape-identical) target.
    pairs = list(_zip_nodes(working.root, annot.root, ()))
    for path, have, want in pairs:
        if have.label.text(emit_function=False) != want.label.text(emit_function=False):
            op = relabel(working.id, path, want.label.text(emit_function=False),
                         have.label.text(emit_function=False))
            ops.append(op)
            working = apply_op(working, op)
    for path, have, want in pairs:
        if have.label.coord_function != want.label.coord_function:
            ops.append(set_function(working.id, path, want.label.coord_function,
                                    have.label.coord_function, provenance="labeling"))
    return ops


def _zip_nodes(a: Internal, b: Internal, path: NodePath):
    if is_preterminal(a) != is_preterminal(b) or (
        not is_preterminal(a) and len(a.children) != len(b.children)
    ):
        raise DiffError(f"shape mismatch at {path} while computing a diff")
    yield path, a, b
    if not is_preterminal(a):
        for i, (ca, cb) in enumerate(zip(a.children, b.children)):
            yield from _zip_nodes(ca, cb, path + (i,))
