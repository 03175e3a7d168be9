"""End-to-end pass: detect, transform, label, diff, report.

All manual answers arrive as token spans, which survive every structural
edit unchanged; phrase nodes are re-located by span between stages.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import diffio
from .annotation.tasks import (
    CONJUNCT_MARKING,
    FLAT_ELEMENTS,
    MODIFIER_RANGE,
    task_kind,
)
from .detect import (
    CoordPhrase,
    find_coordination_phrases,
    find_outside_premodifiers,
    is_coordinator_shaped,
    _comparative_quantity_pattern,
)
from .labels import (
    MARKER_LEXICON,
    BoundaryMismatchError,
    RoleValidationError,
    assign_roles,
    is_marker,
    label_trivial_ccp,
)
from .transform import (
    adopt_premodifier,
    bracket_flat_elements,
    bracket_modifier_coordination,
    consolidate_comparative_quantity,
    merge_split_conjunct,
)
from .treebank import (
    Internal,
    Span,
    Tree,
    content_tokens,
    corpus_checksum,
    has_content,
    is_preterminal,
    iter_internal,
    resolve,
    span_of,
    tokens,
    validate_corpus,
)

TRIVIAL = "trivial"
COMMA_TAGS = {",", ":"}


@dataclass
class AnnotationRow:
    tree_id: str
    path: tuple[int, ...]
    kind: str | None
    spans: list[Span]

    @classmethod
    def from_record(cls, record: dict) -> "AnnotationRow":
        return cls(
            tree_id=record["tree"],
            path=tuple(record["path"]),
            kind=record.get("kind"),
            spans=[Span(*s) for s in record["spans"] or []],
        )


def load_annotations(path: str | Path) -> dict[tuple[str, tuple[int, ...]], AnnotationRow]:
    rows: dict[tuple[str, tuple[int, ...]], AnnotationRow] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = AnnotationRow.from_record(json.loads(line))
        rows[(row.tree_id, row.path)] = row
    return rows


@dataclass
class PhrasePlan:
    phrase: CoordPhrase
    kind: str  # trivial | flat-elements | conjunct-marking | non-NP-modifier-range
    ccp_span: Span
    conjunct_spans: list[Span] | None = None
    element_spans: list[Span] | None = None
    range_span: Span | None = None
    pending: bool = False


@dataclass
class TreeResult:
    tree: Tree
    ops: list[diffio.DiffOp] = field(default_factory=list)
    pending: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _locate(tree: Tree, span: Span) -> tuple[int, ...]:
    """Deepest node with this exact span, preferring one with a coordinator."""
    matches = [
        (path, node) for path, node in iter_internal(tree.root)
        if not is_preterminal(node) and span_of(node) == span
    ]
    if not matches:
        raise LookupError(f"no node with span {span} in {tree.id}")
    with_cc = [
        (path, node) for path, node in matches
        if any(is_coordinator_shaped(c) for c in node.children)
    ]
    return (with_cc or matches)[-1][0]


def _covered_children(node: Internal, span: Span) -> list[int]:
    return [i for i, c in enumerate(node.children) if span.contains(span_of(c))]


def _derive_conjunct_elements(node: Internal, element_spans: list[Span]) -> list[Span]:
    """Conjuncts among flat elements: coordinator neighbors, plus list members
    chained leftward over commas.

    Chaining runs leftward only; an element after the final conjunct that is
    merely comma-separated ("..., respectively") is no list continuation.
    """
    elements = []
    for span in sorted(Span(*s) for s in element_spans):
        covered = _covered_children(node, span)
        is_coord = len(covered) == 1 and is_coordinator_shaped(node.children[covered[0]])
        elements.append((span, is_coord))
    all_tokens = {t.index: t for t in tokens(node)}

    def comma_between(a: Span, b: Span) -> bool:
        return any(
            t.pos in COMMA_TAGS
            for i, t in all_tokens.items()
            if a.end <= i < b.start
        )

    conjuncts = set()
    for i, (span, is_coord) in enumerate(elements):
        if not is_coord:
            continue
        if i > 0 and not elements[i - 1][1]:
            conjuncts.add(i - 1)
        if i + 1 < len(elements) and not elements[i + 1][1]:
            conjuncts.add(i + 1)
    changed = True
    while changed:
        changed = False
        for i in sorted(conjuncts):
            j = i - 1
            if j >= 0 and j not in conjuncts and not elements[j][1] \
                    and comma_between(elements[j][0], elements[i][0]):
                conjuncts.add(j)
                changed = True
    return [elements[i][0] for i in sorted(conjuncts)]


def _build_plans(
    tree: Tree,
    rows: dict[tuple[str, tuple[int, ...]], AnnotationRow],
) -> tuple[list[PhrasePlan], list[str]]:
    plans: list[PhrasePlan] = []
    warnings: list[str] = []
    for phrase in find_coordination_phrases(tree):
        node = resolve(tree, phrase.path)
        span = span_of(node)
        for i in phrase.coordinator_children:
            child = node.children[i]
            if isinstance(child, Internal) and child.label.category == "CONJP":
                warnings.append(
                    f"{tree.id}: CONJP coordinator at {list(phrase.path + (i,))} "
                    "labeled CC")
        kind = task_kind(phrase) or TRIVIAL
        plan = PhrasePlan(phrase=phrase, kind=kind, ccp_span=span)
        row = rows.get((tree.id, phrase.path))
        if kind == TRIVIAL:
            elements = [
                span_of(c) for i, c in enumerate(node.children)
                if i not in phrase.coordinator_children and has_content(c)
            ]
            plan.conjunct_spans = elements
        elif row is None:
            plan.pending = True
        elif kind == FLAT_ELEMENTS:
            plan.element_spans = [Span(*s) for s in row.spans]
            plan.conjunct_spans = _derive_conjunct_elements(node, plan.element_spans)
        elif kind == MODIFIER_RANGE:
            if len(row.spans) != 1:
                raise ValueError(
                    f"{tree.id}: boundary annotation at {list(phrase.path)} "
                    "needs exactly one span")
            plan.range_span = Span(*row.spans[0])
            inner = [
                span_of(c) for c in node.children
                if plan.range_span.contains(span_of(c)) and has_content(c)
            ]
            plan.conjunct_spans = _derive_conjunct_elements(node, inner)
            plan.ccp_span = span  # narrowed when the bracket lands
        else:
            plan.conjunct_spans = [Span(*s) for s in row.spans]
        plans.append(plan)
    return plans, warnings


def _annotate_tree(
    tree: Tree,
    rows: dict[tuple[str, tuple[int, ...]], AnnotationRow],
    lexicon: frozenset[str] = MARKER_LEXICON,
) -> TreeResult:
    plans, warnings = _build_plans(tree, rows)
    result = TreeResult(tree=tree, warnings=warnings)
    t = tree

    # Split-conjunct repairs first: an annotated conjunct that covers two or
    # more whole siblings becomes one bracketed phrase.
    for plan in reversed(plans):
        if plan.kind != CONJUNCT_MARKING or not plan.conjunct_spans:
            continue
        path = _locate(t, plan.ccp_span)
        for span in plan.conjunct_spans:
            node = resolve(t, path)
            covered = _covered_children(node, span)
            if len(covered) < 2:
                continue
            hull = Span(span_of(node.children[covered[0]]).start,
                        span_of(node.children[covered[-1]]).end)
            if hull != span:
                continue  # partial overlap is handled by reconciliation later
            t, ops = merge_split_conjunct(t, path, (covered[0], covered[-1]))
            result.ops.extend(ops)

    # Internal structure for flat phrases.
    for plan in reversed(plans):
        if plan.kind == FLAT_ELEMENTS and plan.element_spans:
            path = _locate(t, plan.ccp_span)
            t, ops = bracket_flat_elements(t, path, plan.element_spans)
            result.ops.extend(ops)

    # Coordinations of modifiers: automatic for nominal flat phrases whose
    # final element is no conjunct, annotated boundary otherwise.
    for plan in reversed(plans):
        if plan.kind == FLAT_ELEMENTS and plan.element_spans and plan.conjunct_spans:
            node = resolve(t, _locate(t, plan.ccp_span))
            last = max(
                (span_of(c) for c in node.children if has_content(c)),
                key=lambda s: s.start,
            )
            if last in plan.conjunct_spans:
                continue
            last_child = node.children[_covered_children(node, last)[0]]
            if is_marker([tk.word for tk in content_tokens(last_child)], lexicon):
                continue
            hull = Span(min(s.start for s in plan.conjunct_spans),
                        max(s.end for s in plan.conjunct_spans))
            path = _locate(t, plan.ccp_span)
            node = resolve(t, path)
            covered = _covered_children(node, hull)
            t, ops = bracket_modifier_coordination(
                t, path, (covered[0], covered[-1]))
            result.ops.extend(ops)
            if ops:
                plan.ccp_span = hull
        elif plan.kind == MODIFIER_RANGE and plan.range_span is not None:
            path = _locate(t, plan.ccp_span)
            node = resolve(t, path)
            covered = _covered_children(node, plan.range_span)
            t, ops = bracket_modifier_coordination(
                t, path, (covered[0], covered[-1]))
            result.ops.extend(ops)
            if ops:
                plan.ccp_span = plan.range_span

    # Consolidate outside ADVPs and markers into the phrase.
    while True:
        pairs = find_outside_premodifiers(t)
        if not pairs:
            break
        mod_path, ccp_path = pairs[0]
        old_span = span_of(resolve(t, ccp_path))
        mod_span = span_of(resolve(t, mod_path))
        t, ops = adopt_premodifier(t, (mod_path, ccp_path))
        result.ops.extend(ops)
        new_span = Span(min(old_span.start, mod_span.start),
                        max(old_span.end, mod_span.end))
        for plan in plans:
            if plan.ccp_span == old_span:
                plan.ccp_span = new_span

    # Comparative quantities last, over final shapes.
    while True:
        target = next(
            (path for path, node in iter_internal(t.root)
             if not is_preterminal(node) and _comparative_quantity_pattern(node)),
            None,
        )
        if target is None:
            break
        t, ops = consolidate_comparative_quantity(t, target)
        result.ops.extend(ops)

    # Role labeling over the final structure.
    before = t
    plan_by_span = {plan.ccp_span: plan for plan in plans}
    for phrase in find_coordination_phrases(t):
        node = resolve(t, phrase.path)
        span = span_of(node)
        plan = plan_by_span.get(span)
        if plan is not None and plan.conjunct_spans and not plan.pending:
            try:
                t = assign_roles(t, phrase.path, plan.conjunct_spans, lexicon)
            except (BoundaryMismatchError, RoleValidationError) as exc:
                result.warnings.append(f"{tree.id}: {exc}")
                result.pending.append({
                    "tree": tree.id,
                    "path": list(phrase.path),
                    "kind": plan.kind,
                    "span": list(span),
                })
        elif phrase.trivial:
            labeled = label_trivial_ccp(t, phrase.path, lexicon)
            assert labeled is not None
            t = labeled
        else:
            result.pending.append({
                "tree": tree.id,
                "path": list(phrase.path),
                "kind": plan.kind if plan is not None else CONJUNCT_MARKING,
                "span": list(span),
            })
    for path, have, want in diffio._zip_nodes(before.root, t.root, ()):
        if have.label.coord_function != want.label.coord_function:
            result.ops.append(diffio.set_function(
                tree.id, path, want.label.coord_function,
                have.label.coord_function, provenance="labeling", anchor=path))

    result.tree = t
    return result


@dataclass
class PipelineResult:
    original: list[Tree]
    labeled: list[Tree]
    diff: diffio.DiffFile
    pending: list[dict]
    warnings: list[str]


def _annotate_job(args: tuple[Tree, dict, frozenset[str]]) -> TreeResult:
    tree, rows, lexicon = args
    return _annotate_tree(tree, rows, lexicon)


def annotate_corpus(
    corpus: list[Tree],
    rows: dict[tuple[str, tuple[int, ...]], AnnotationRow] | None = None,
    lexicon: frozenset[str] = MARKER_LEXICON,
    jobs: int = 1,
) -> PipelineResult:
    rows = rows or {}
    labeled: list[Tree] = []
    ops: list[diffio.DiffOp] = []
    pending: list[dict] = []
    warnings: list[str] = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        per_tree = [
            (tree, {k: v for k, v in rows.items() if k[0] == tree.id}, lexicon)
            for tree in corpus
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_annotate_job, per_tree, chunksize=16))
    else:
        results = [_annotate_tree(tree, rows, lexicon) for tree in corpus]
    for result in results:
        labeled.append(result.tree)
        ops.extend(result.ops)
        pending.extend(result.pending)
        warnings.extend(result.warnings)
    diff = diffio.DiffFile(
        ops=tuple(ops),
        source_checksum=corpus_checksum(corpus),
        result_checksum=corpus_checksum(labeled),
    )
    warnings.extend(validate_corpus(labeled))
    return PipelineResult(corpus, labeled, diff, pending, warnings)
