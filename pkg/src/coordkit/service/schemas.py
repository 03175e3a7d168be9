"""Request and response models for the annotation API."""
from __future__ import annotations

from pydantic import BaseModel, Field


class TokenOut(BaseModel):
    index: int
    word: str


class TaskOut(BaseModel):
    id: str
    tree_id: str
    path: list[int]
    kind: str
    status: str
    rendered: str
    tokens: list[TokenOut]
    phrase_span: list[int]
    coordinator_spans: list[list[int]]
    suggested_spans: list[list[int]]


class SubmitRequest(BaseModel):
    annotator: str
    spans: list[list[int]]
    override_boundary: bool = False
    accept_reconciled: bool = False


class MismatchOut(BaseModel):
    proposed: list[int]
    reconciled: list[int]


class SubmitResponse(BaseModel):
    accepted: bool
    needs_confirmation: bool = False
    errors: list[str] = Field(default_factory=list)
    mismatches: list[MismatchOut] = Field(default_factory=list)
    reconciled_spans: list[list[int]] | None = None


class ProgressOut(BaseModel):
    open: int
    leased: int
    submitted: int
    adjudicated: int


class AnnotationOut(BaseModel):
    annotator: str
    spans: list[list[int]]
    submitted_at: float


class DisagreementItem(BaseModel):
    task: TaskOut
    annotations: list[AnnotationOut]


class DisagreementsOut(BaseModel):
    study: str
    partial: bool
    items: list[DisagreementItem]


class AdjudicateRequest(BaseModel):
    annotator: str
    reviewer: str
