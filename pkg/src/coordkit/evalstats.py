"""Bracket scoring, function-label confusion, annotator agreement, corpus stats.

Scoring follows the usual EVALB conventions: punctuation and empty-element
terminals are deleted before spans are computed, preterminal brackets are
ignored, and there are no label equivalences.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .diffio import DiffFile
from .transform import TransformKind
from .treebank import (
    Internal,
    Leaf,
    Node,
    NodePath,
    Span,
    Token,
    Tree,
    is_preterminal,
    iter_internal,
    span_of,
)


class IncomparableTreesError(ValueError):
    pass


class AnnotationMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    matched_brackets: int
    gold_brackets: int
    predicted_brackets: int
    complete_match_rate: float


# ---------------------------------------------------------------------------
# Pruning: drop punctuation and empty elements, reindex the rest.

def _prune(node: Node, index_map: dict[int, int]) -> Node | None:
    if isinstance(node, Leaf):
        tok = node.token
        if tok.is_punct or tok.is_empty:
            return None
        new = index_map.setdefault(tok.index, len(index_map))
        return Leaf(Token(new, tok.word, tok.pos))
    children = [c for c in (_prune(c, index_map) for c in node.children) if c is not None]
    if not children:
        return None
    return Internal(node.label, tuple(children))


def _pruned_root(tree: Tree) -> Internal | None:
    index_map: dict[int, int] = {}
    return _prune(tree.root, index_map)  # type: ignore[return-value]


def _words(root: Internal | None) -> list[str]:
    if root is None:
        return []
    return [leaf.token.word for _, n in iter_internal(root) if is_preterminal(n)
            for leaf in n.children]  # type: ignore[union-attr]


def _brackets(root: Internal | None, include_functions: bool) -> Counter:
    counts: Counter = Counter()
    if root is None:
        return counts
    for _, node in iter_internal(root):
        if is_preterminal(node):
            continue
        span = span_of(node)
        if include_functions:
            counts[(node.label.category, node.label.coord_function, span)] += 1
        else:
            counts[(node.label.category, span)] += 1
    return counts


def parseval(gold: Tree, pred: Tree, include_functions: bool = False) -> EvalReport:
    """Labeled bracket precision/recall/F1 between one gold and one predicted tree."""
    g_root, p_root = _pruned_root(gold), _pruned_root(pred)
    if _words(g_root) != _words(p_root):
        raise IncomparableTreesError(
            f"word sequences differ after punctuation deletion: {gold.id} vs {pred.id}")
    g = _brackets(g_root, include_functions)
    p = _brackets(p_root, include_functions)
    matched = sum(min(count, p[key]) for key, count in g.items())
    return _report(matched, sum(g.values()), sum(p.values()), complete=g == p)


def _report(matched: int, gold_n: int, pred_n: int, complete: bool) -> EvalReport:
    precision = 100.0 * matched / pred_n if pred_n else 0.0
    recall = 100.0 * matched / gold_n if gold_n else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(precision, recall, f1, matched, gold_n, pred_n,
                      complete_match_rate=100.0 if complete else 0.0)


def corpus_parseval(pairs: list[tuple[Tree, Tree]], include_functions: bool = False
                    ) -> EvalReport:
    """Aggregate scoring: counts are summed first, rates computed last."""
    matched = gold_n = pred_n = complete = 0
    for gold, pred in pairs:
        r = parseval(gold, pred, include_functions)
        matched += r.matched_brackets
        gold_n += r.gold_brackets
        pred_n += r.predicted_brackets
        complete += r.complete_match_rate == 100.0
    report = _report(matched, gold_n, pred_n, complete=False)
    rate = 100.0 * complete / len(pairs) if pairs else 0.0
    return EvalReport(report.precision, report.recall, report.f1, matched,
                      gold_n, pred_n, complete_match_rate=rate)


# ---------------------------------------------------------------------------
# Function-label confusion

GOLD_FUNCTIONS = ("CC", "CCP", "COORD", "MARK", "SHARED", "CONN", "None")
PRED_FUNCTIONS = ("CC", "CCP", "COORD", "MARK", "SHARED", "CONN", "None", "Err")


@dataclass
class ConfusionMatrix:
    cells: Counter = field(default_factory=Counter)

    def add(self, gold: str, pred: str, n: int = 1) -> None:
        if gold not in GOLD_FUNCTIONS or pred not in PRED_FUNCTIONS:
            raise ValueError(f"unknown confusion cell ({gold}, {pred})")
        if gold == "None" and pred in ("None", "Err"):
            raise ValueError(f"structurally zero cell ({gold}, {pred})")
        self.cells[(gold, pred)] += n

    def __getitem__(self, key: tuple[str, str]) -> int:
        return self.cells[key]

    def update(self, other: "ConfusionMatrix") -> None:
        self.cells.update(other.cells)

    def is_diagonal(self) -> bool:
        return all(g == p for (g, p), n in self.cells.items() if n)

    def row_sum(self, gold: str) -> int:
        return sum(n for (g, _), n in self.cells.items() if g == gold)

    def to_tsv(self) -> str:
        lines = ["\t".join(["gold\\pred", *PRED_FUNCTIONS])]
        for g in GOLD_FUNCTIONS:
            row = [str(self.cells[(g, p)]) for p in PRED_FUNCTIONS]
            lines.append("\t".join([g, *row]))
        return "\n".join(lines) + "\n"


def _function_nodes(root: Internal | None) -> dict[Span, list[str]]:
    """Functions present per span, outermost first; preterminals included."""
    out: dict[Span, list[str]] = {}
    if root is None:
        return out
    for _, node in iter_internal(root):
        fn = node.label.coord_function
        if fn is not None:
            out.setdefault(span_of(node), []).append(fn)
    return out


def function_confusion(gold: Tree, pred: Tree) -> ConfusionMatrix:
    """Gold-versus-predicted function labels, matched by span, category-blind.

    A gold function whose span is missing from the prediction counts as Err;
    a predicted function on a span with no gold function counts in the None
    row.
    """
    g_root, p_root = _pruned_root(gold), _pruned_root(pred)
    if _words(g_root) != _words(p_root):
        raise IncomparableTreesError(
            f"word sequences differ after punctuation deletion: {gold.id} vs {pred.id}")
    g_fns = _function_nodes(g_root)
    p_fns = _function_nodes(p_root)
    pred_spans = (
        {span_of(n) for _, n in iter_internal(p_root)} if p_root is not None else set()
    )
    matrix = ConfusionMatrix()
    for span, gold_list in g_fns.items():
        pred_list = p_fns.get(span, [])
        for i, g in enumerate(gold_list):
            if i < len(pred_list):
                matrix.add(g, pred_list[i])
            elif span in pred_spans:
                matrix.add(g, "None")
            else:
                matrix.add(g, "Err")
    for span, pred_list in p_fns.items():
        gold_list = g_fns.get(span, [])
        for p in pred_list[len(gold_list):]:
            matrix.add("None", p)
    return matrix


# ---------------------------------------------------------------------------
# Inter-annotator agreement

@dataclass(frozen=True)
class CoordAnnotation:
    tree_id: str
    path: NodePath
    spans: tuple[Span, ...]


def conjunct_agreement(a: list[CoordAnnotation], b: list[CoordAnnotation]) -> float:
    """Percentage of phrases whose conjunct spans agree exactly."""
    a_map = {(x.tree_id, x.path): frozenset(Span(*s) for s in x.spans) for x in a}
    b_map = {(x.tree_id, x.path): frozenset(Span(*s) for s in x.spans) for x in b}
    if set(a_map) != set(b_map):
        diff = sorted(set(a_map) ^ set(b_map))
        raise AnnotationMismatchError(f"annotated phrase sets differ: {diff}")
    if not a_map:
        return 100.0
    agreed = sum(1 for key, spans in a_map.items() if spans == b_map[key])
    return 100.0 * agreed / len(a_map)


# ---------------------------------------------------------------------------
# Corpus statistics

@dataclass(frozen=True)
class CorpusStats:
    function_counts: dict[str, int]
    coordination_sentence_ratio: float
    sentences: int


def corpus_stats(corpus: list[Tree]) -> CorpusStats:
    counts: Counter = Counter()
    with_ccp = 0
    for tree in corpus:
        saw_ccp = False
        for _, node in iter_internal(tree.root):
            fn = node.label.coord_function
            if fn is not None:
                counts[fn] += 1
                saw_ccp = saw_ccp or fn == "CCP"
        with_ccp += saw_ccp
    ratio = 100.0 * with_ccp / len(corpus) if corpus else 0.0
    return CorpusStats(dict(counts), ratio, len(corpus))


def change_stats(diff: DiffFile) -> dict[str, int]:
    """Changed-subtree counts per transform kind (one anchor = one subtree)."""
    kinds = {k.value for k in TransformKind}
    events: dict[str, set] = {k: set() for k in kinds}
    for i, op in enumerate(diff.ops):
        if op.provenance not in kinds:
            continue
        anchor = op.anchor if op.anchor is not None else ("op", i)
        events[op.provenance].add((op.tree_id, anchor))
    return {k: len(v) for k, v in events.items()}
