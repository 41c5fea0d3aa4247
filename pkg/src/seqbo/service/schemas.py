"""Pydantic request/response models for the ask-tell HTTP API."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class CreateStudyRequest(BaseModel):
    space: list[dict[str, Any]]
    config: dict[str, Any] = Field(default_factory=dict)
    owner: str = ""
    id: str | None = None


class SuggestRequest(BaseModel):
    q: int = 1


class ObserveRequest(BaseModel):
    x: dict[str, Any]
    y: float
    source: str = "algorithm"
    revision: int | None = None


class StudySummary(BaseModel):
    id: str
    owner: str
    created_at: str
    updated_at: str
    revision: int
    state: str
    direction: str
    n_observations: int
    n_pending: int
    best: dict[str, Any] | None = None


class StudyDetail(StudySummary):
    space: list[dict[str, Any]]
    config: dict[str, Any]
    pending: list[dict[str, Any]]


class ObservationModel(BaseModel):
    iteration: int
    x: dict[str, Any]
    y: float
    source: str
    recorded_at: str


class SuggestResponse(BaseModel):
    points: list[dict[str, Any]]
    revision: int


class SlateItem(BaseModel):
    x: dict[str, Any]
    score: float
    mean: float
    std: float


class SlateResponse(BaseModel):
    candidates: list[SlateItem]
    revision: int


class HistoryResponse(BaseModel):
    observations: list[ObservationModel]
    revision: int


class BestResponse(BaseModel):
    x: dict[str, Any]
    y: float
    mode: str


class CurveResponse(BaseModel):
    iterations: list[int]
    y: list[float]
    best_so_far: list[float]


class ApiError(BaseModel):
    code: str
    message: str
    detail: dict[str, Any] = Field(default_factory=dict)


class ErrorResponse(BaseModel):
    error: ApiError
