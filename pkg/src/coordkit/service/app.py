"""HTTP API over a task store, plus static hosting for the annotation UI."""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles

from ..annotation.store import TaskStore
from ..annotation.tasks import AnnotationTask
from ..treebank import Span, tokens
from .schemas import (
    AdjudicateRequest,
    AnnotationOut,
    DisagreementItem,
    DisagreementsOut,
    ProgressOut,
    SubmitRequest,
    SubmitResponse,
    TaskOut,
    TokenOut,
)


def _task_out(store: TaskStore, task: AnnotationTask) -> TaskOut:
    tree = store.corpus[task.tree_id]
    visible = [TokenOut(index=t.index, word=t.word)
               for t in tokens(tree.root) if not t.is_empty]
    return TaskOut(
        id=task.id,
        tree_id=task.tree_id,
        path=list(task.path),
        kind=task.kind,
        status=store.status_of(task.id),
        rendered=task.rendered,
        tokens=visible,
        phrase_span=list(task.phrase_span),
        coordinator_spans=[list(s) for s in task.coordinator_spans],
        suggested_spans=[list(s) for s in task.suggested_spans],
    )


def create_app(store: TaskStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="coordkit annotation service")

    @app.get("/api/tasks/next", response_model=TaskOut | None)
    def next_task(annotator: str = Query(...)):
        task = store.lease_next(annotator)
        if task is None:
            return Response(status_code=204)
        return _task_out(store, task)

    @app.get("/api/tasks/{task_id}", response_model=TaskOut)
    def get_task(task_id: str):
        state = store.get(task_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id!r}")
        return _task_out(store, state.task)

    @app.post("/api/tasks/{task_id}/annotation", response_model=SubmitResponse)
    def submit(task_id: str, request: SubmitRequest):
        result = store.submit(
            task_id,
            request.annotator,
            [Span(*s) for s in request.spans],
            override_boundary=request.override_boundary,
            accept_reconciled=request.accept_reconciled,
        )
        return SubmitResponse(
            accepted=result.accepted,
            needs_confirmation=result.needs_confirmation,
            errors=result.errors,
            mismatches=result.mismatches,
            reconciled_spans=(
                [list(s) for s in result.reconciled_spans]
                if result.reconciled_spans is not None else None
            ),
        )

    @app.get("/api/progress", response_model=ProgressOut)
    def progress():
        return ProgressOut(**store.progress())

    @app.get("/api/disagreements", response_model=DisagreementsOut)
    def disagreements(study: str | None = None):
        try:
            partial, items = store.disagreements(study)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return DisagreementsOut(
            study=store.study_id,
            partial=partial,
            items=[
                DisagreementItem(
                    task=_task_out(store, task),
                    annotations=[
                        AnnotationOut(
                            annotator=a,
                            spans=[list(s) for s in ann.spans],
                            submitted_at=ann.submitted_at,
                        )
                        for a, ann in sorted(annotations.items())
                    ],
                )
                for task, annotations in items
            ],
        )

    @app.post("/api/tasks/{task_id}/adjudicate")
    def adjudicate(task_id: str, request: AdjudicateRequest):
        try:
            store.adjudicate(task_id, request.annotator, request.reviewer)
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ok": True}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
