"""Task leasing, validation and persistence for the annotation loop.

State mutations are serialized through one lock and recorded in an
append-only JSONL journal; replaying the journal against the same corpus
reconstructs the exact store state.  In agreement-study mode every task is
leased independently to each designated annotator.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, TextIO

from ..detect import is_coordinator_shaped
from ..labels import BoundaryMismatchError, reconcile_span
from ..treebank import Span, Tree, has_content, resolve, span_of, tokens
from .tasks import (
    CONJUNCT_MARKING,
    FLAT_ELEMENTS,
    MODIFIER_RANGE,
    AnnotationTask,
    build_tasks,
)

OPEN = "open"
LEASED = "leased"
SUBMITTED = "submitted"
ADJUDICATED = "adjudicated"

DEFAULT_LEASE_SECONDS = 30 * 60


@dataclass(frozen=True)
class ConjunctAnnotation:
    task_id: str
    annotator_id: str
    spans: tuple[Span, ...]
    submitted_at: float
    override_boundary: bool = False


@dataclass
class SubmissionResult:
    accepted: bool
    needs_confirmation: bool = False
    errors: list[str] = field(default_factory=list)
    mismatches: list[dict] = field(default_factory=list)
    reconciled_spans: list[Span] | None = None


@dataclass
class _TaskState:
    task: AnnotationTask
    leases: dict[str, float] = field(default_factory=dict)  # annotator -> expiry
    submissions: dict[str, ConjunctAnnotation] = field(default_factory=dict)
    adjudicated_to: str | None = None

    def status(self, designated: list[str] | None) -> str:
        if self.adjudicated_to is not None:
            return ADJUDICATED
        required = designated if designated else None
        if required is None:
            if self.submissions:
                return SUBMITTED
        elif all(a in self.submissions for a in required):
            return SUBMITTED
        if self.leases:
            return LEASED
        return OPEN


class TaskStore:
    def __init__(
        self,
        corpus: list[Tree],
        journal_path: str | Path | None = None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        study_annotators: list[str] | None = None,
        study_id: str = "study",
        clock: Callable[[], float] = time.time,
    ):
        self.corpus = {t.id: t for t in corpus}
        self.lease_seconds = lease_seconds
        self.study_annotators = list(study_annotators) if study_annotators else None
        self.study_id = study_id
        self.clock = clock
        self._lock = threading.Lock()
        self._states: dict[str, _TaskState] = {
            task.id: _TaskState(task) for task in build_tasks(corpus)
        }
        self._order = sorted(self._states)
        self._journal_path = Path(journal_path) if journal_path is not None else None
        self._journal_fh: TextIO | None = None
        if self._journal_path is not None:
            if self._journal_path.exists():
                self._replay(self._journal_path)
            self._journal_fh = self._journal_path.open("a", encoding="utf-8")

    # -- journal ------------------------------------------------------------

    def _append(self, record: dict) -> None:
        if self._journal_fh is not None:
            self._journal_fh.write(json.dumps(record) + "\n")
            self._journal_fh.flush()

    def _replay(self, path: Path) -> None:
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            state = self._states.get(record["task"])
            if state is None:
                continue  # journal from a different corpus slice
            event = record["event"]
            if event == "lease":
                state.leases[record["annotator"]] = record["expires"]
            elif event == "expire":
                state.leases.pop(record["annotator"], None)
            elif event == "submit":
                annotation = ConjunctAnnotation(
                    task_id=record["task"],
                    annotator_id=record["annotator"],
                    spans=tuple(Span(*s) for s in record["reconciled"]),
                    submitted_at=record["at"],
                    override_boundary=record.get("override", False),
                )
                state.submissions[record["annotator"]] = annotation
                state.leases.pop(record["annotator"], None)
            elif event == "adjudicate":
                state.adjudicated_to = record["annotator"]
        self._reclaim_expired()

    def close(self) -> None:
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None

    # -- leasing ------------------------------------------------------------

    def _reclaim_expired(self) -> None:
        now = self.clock()
        for state in self._states.values():
            for annotator, expiry in list(state.leases.items()):
                if expiry <= now:
                    del state.leases[annotator]
                    self._append({"event": "expire", "task": state.task.id,
                                  "annotator": annotator})

    def lease_next(self, annotator_id: str) -> AnnotationTask | None:
        with self._lock:
            self._reclaim_expired()
            for task_id in self._order:
                state = self._states[task_id]
                if state.adjudicated_to is not None:
                    continue
                if self.study_annotators is not None:
                    if annotator_id not in self.study_annotators:
                        return None
                    if annotator_id in state.submissions or annotator_id in state.leases:
                        continue
                else:
                    if state.status(None) != OPEN:
                        continue
                expiry = self.clock() + self.lease_seconds
                state.leases[annotator_id] = expiry
                self._append({"event": "lease", "task": task_id,
                              "annotator": annotator_id, "expires": expiry})
                return state.task
            return None

    def get(self, task_id: str) -> _TaskState | None:
        with self._lock:
            return self._states.get(task_id)

    def status_of(self, task_id: str) -> str:
        state = self._states[task_id]
        return state.status(self.study_annotators)

    # -- submission ---------------------------------------------------------

    def submit(
        self,
        task_id: str,
        annotator_id: str,
        spans: list[Span],
        override_boundary: bool = False,
        accept_reconciled: bool = False,
    ) -> SubmissionResult:
        with self._lock:
            self._reclaim_expired()
            state = self._states.get(task_id)
            if state is None:
                return SubmissionResult(False, errors=[f"unknown task {task_id!r}"])
            if annotator_id not in state.leases:
                return SubmissionResult(
                    False, errors=[f"task {task_id} is not leased to {annotator_id!r}"])
            result = self._validate(state.task, spans, override_boundary)
            if result.errors:
                result.accepted = False
                return result
            if result.mismatches and not accept_reconciled:
                result.accepted = False
                result.needs_confirmation = True
                return result
            annotation = ConjunctAnnotation(
                task_id=task_id,
                annotator_id=annotator_id,
                spans=tuple(result.reconciled_spans or []),
                submitted_at=self.clock(),
                override_boundary=override_boundary,
            )
            state.submissions[annotator_id] = annotation
            del state.leases[annotator_id]
            self._append({
                "event": "submit", "task": task_id, "annotator": annotator_id,
                "spans": [list(s) for s in spans],
                "reconciled": [list(s) for s in annotation.spans],
                "extensions": result.mismatches,
                "override": override_boundary,
                "at": annotation.submitted_at,
            })
            result.accepted = True
            return result

    def _validate(self, task: AnnotationTask, spans: list[Span],
                  override_boundary: bool) -> SubmissionResult:
        result = SubmissionResult(False)
        spans = sorted(Span(*s) for s in spans)
        tree = self.corpus[task.tree_id]
        sentence_len = len(tokens(tree.root))
        for span in spans:
            if not (0 <= span.start < span.end <= sentence_len):
                result.errors.append(f"span [{span.start},{span.end}) is out of range")
                return result
        for a, b in zip(spans, spans[1:]):
            if a.end > b.start:
                result.errors.append(f"spans [{a.start},{a.end}) and "
                                     f"[{b.start},{b.end}) overlap")
                return result
        if not override_boundary:
            bounds = task.phrase_span
            for span in spans:
                if span.start < bounds.start or span.end > bounds.end:
                    result.errors.append(
                        f"span [{span.start},{span.end}) lies outside the phrase "
                        f"[{bounds.start},{bounds.end}); set override_boundary to force")
                    return result
        if task.kind == CONJUNCT_MARKING:
            self._validate_conjuncts(task, spans, result)
        elif task.kind == FLAT_ELEMENTS:
            self._validate_flat(task, spans, result)
        elif task.kind == MODIFIER_RANGE:
            self._validate_range(task, spans, result)
        else:
            result.errors.append(f"unknown task kind {task.kind!r}")
        return result

    def _validate_conjuncts(self, task, spans, result) -> None:
        if len(spans) < 2:
            result.errors.append("conjunct marking needs at least two spans")
            return
        tree = self.corpus[task.tree_id]
        node = resolve(tree, task.path)
        reconciled: list[Span] = []
        seen: set[Span] = set()
        for span in spans:
            try:
                snapped = reconcile_span(span, tree, task.path)
            except BoundaryMismatchError as exc:
                # A span that exactly covers a run of whole siblings marks a
                # conjunct the treebank split in two; it is kept for repair.
                if self._covers_sibling_run(node, span):
                    snapped = span
                else:
                    result.errors.append(str(exc))
                    return
            if snapped in seen:
                result.errors.append(
                    f"two spans land on the same constituent [{snapped.start},{snapped.end})")
                return
            seen.add(snapped)
            if snapped != span:
                result.mismatches.append(
                    {"proposed": list(span), "reconciled": list(snapped)})
            reconciled.append(snapped)
        result.reconciled_spans = reconciled

    @staticmethod
    def _covers_sibling_run(node, span: Span) -> bool:
        # Interior coordinators are allowed: a reading like "pudding, plus
        # coffee or iced tea" makes the whole run one conjunct.
        covered = [c for c in node.children if span.contains(span_of(c))]
        if len(covered) < 2:
            return False
        if any(span.overlaps(span_of(c)) and not span.contains(span_of(c))
               for c in node.children):
            return False
        hull = Span(span_of(covered[0]).start, span_of(covered[-1]).end)
        return hull == span

    def _validate_flat(self, task, spans, result) -> None:
        tree = self.corpus[task.tree_id]
        node = resolve(tree, task.path)
        child_spans = [(span_of(c), c) for c in node.children]
        covered: set[int] = set()
        groups = 0
        for span in spans:
            inside = [
                (s, c) for s, c in child_spans if span.contains(s)
            ]
            if not inside:
                result.errors.append(f"span [{span.start},{span.end}) covers no child")
                return
            if any(span.overlaps(s) and not span.contains(s) for s, _ in child_spans):
                result.errors.append(
                    f"span [{span.start},{span.end}) splits a child constituent")
                return
            got = Span(inside[0][0].start, inside[-1][0].end)
            if got != span:
                result.errors.append(
                    f"span [{span.start},{span.end}) is not aligned to child boundaries")
                return
            coordinators = [c for _, c in inside if is_coordinator_shaped(c)]
            if coordinators and len(inside) > 1:
                result.errors.append(
                    f"span [{span.start},{span.end}) groups a coordinator with other material")
                return
            if not coordinators:
                groups += 1
            covered.update(t.index for s, c in inside for t in tokens(c))
        for tok in tokens(node):
            if not tok.is_punct and not tok.is_empty and tok.index not in covered:
                result.errors.append(f"token {tok.index} ({tok.word!r}) is not in any element")
                return
        if groups < 2:
            result.errors.append("flat annotation needs at least two non-coordinator elements")
            return
        result.reconciled_spans = list(spans)

    def _validate_range(self, task, spans, result) -> None:
        if len(spans) != 1:
            result.errors.append("boundary marking needs exactly one span")
            return
        tree = self.corpus[task.tree_id]
        node = resolve(tree, task.path)
        span = spans[0]
        inside = [c for c in node.children if span.contains(span_of(c))]
        if any(span.overlaps(span_of(c)) and not span.contains(span_of(c))
               for c in node.children):
            result.errors.append(
                f"span [{span.start},{span.end}) splits a child constituent")
            return
        if not inside:
            result.errors.append(f"span [{span.start},{span.end}) covers no child")
            return
        got = Span(span_of(inside[0]).start, span_of(inside[-1]).end)
        if got != span:
            result.mismatches.append({"proposed": list(span), "reconciled": list(got)})
            span = got
            inside = [c for c in node.children if span.contains(span_of(c))]
        coordinators = [c for c in inside if is_coordinator_shaped(c)]
        elements = [c for c in inside
                    if has_content(c) and not is_coordinator_shaped(c)]
        if not coordinators:
            result.errors.append("the marked range contains no coordinator")
            return
        if len(elements) < 2:
            result.errors.append("the marked range must contain at least two elements")
            return
        result.reconciled_spans = [span]

    # -- progress, review, adjudication --------------------------------------

    def progress(self) -> dict[str, int]:
        with self._lock:
            self._reclaim_expired()
            counts = {OPEN: 0, LEASED: 0, SUBMITTED: 0, ADJUDICATED: 0}
            for state in self._states.values():
                counts[state.status(self.study_annotators)] += 1
            return counts

    def submissions(self, task_id: str) -> dict[str, ConjunctAnnotation]:
        with self._lock:
            return dict(self._states[task_id].submissions)

    def disagreements(self, study_id: str | None = None
                      ) -> tuple[bool, list[tuple[AnnotationTask, dict[str, ConjunctAnnotation]]]]:
        """Tasks where the designated annotators' span sets differ.

        Returns (partial, items); partial is set while submissions are still
        missing.
        """
        if self.study_annotators is None:
            raise ValueError("store is not in agreement-study mode")
        if study_id is not None and study_id != self.study_id:
            raise ValueError(f"unknown study {study_id!r}")
        with self._lock:
            partial = False
            items = []
            for task_id in self._order:
                state = self._states[task_id]
                if not all(a in state.submissions for a in self.study_annotators):
                    partial = True
                    continue
                span_sets = {
                    frozenset(state.submissions[a].spans) for a in self.study_annotators
                }
                if len(span_sets) > 1:
                    items.append((state.task, dict(state.submissions)))
            return partial, items

    def adjudicate(self, task_id: str, chosen_annotator: str, reviewer: str) -> None:
        with self._lock:
            state = self._states[task_id]
            if chosen_annotator not in state.submissions:
                raise ValueError(f"{chosen_annotator!r} has no submission for {task_id}")
            state.adjudicated_to = chosen_annotator
            self._append({"event": "adjudicate", "task": task_id,
                          "annotator": chosen_annotator, "reviewer": reviewer,
                          "at": self.clock()})

    # -- offline round trip ---------------------------------------------------

    def export_tasks(self, include_all: bool = False) -> list[dict]:
        with self._lock:
            rows = []
            for task_id in self._order:
                state = self._states[task_id]
                status = state.status(self.study_annotators)
                if not include_all and status != OPEN:
                    continue
                task = state.task
                rows.append({
                    "task": task.id,
                    "tree": task.tree_id,
                    "path": list(task.path),
                    "kind": task.kind,
                    "rendered": task.rendered,
                    "phrase_span": list(task.phrase_span),
                    "suggested_spans": [list(s) for s in task.suggested_spans],
                    "spans": None,
                })
            return rows

    def import_annotations(self, rows: Iterable[dict]) -> list[SubmissionResult]:
        results = []
        for row in rows:
            task_id = row["task"]
            annotator = row.get("annotator", "offline")
            spans = [Span(*s) for s in row["spans"] or []]
            state = self.get(task_id)
            if state is not None and annotator not in state.leases:
                self._lease_specific(task_id, annotator)
            results.append(self.submit(
                task_id, annotator, spans,
                override_boundary=row.get("override_boundary", False),
                accept_reconciled=True,
            ))
        return results

    def _lease_specific(self, task_id: str, annotator_id: str) -> None:
        with self._lock:
            state = self._states[task_id]
            expiry = self.clock() + self.lease_seconds
            state.leases[annotator_id] = expiry
            self._append({"event": "lease", "task": task_id,
                          "annotator": annotator_id, "expires": expiry})
