"""Ask-tell HTTP service over the study store.

Every endpoint delegates to the corresponding library operation on the
persisted study; mutations go through the store's load-modify-save so
state is durable before the response leaves the process. Optimistic
concurrency uses the record revision: a stale revision in a mutation
yields a conflict error.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse

from ..errors import InvalidInputError, SeqboError
from ..space import DesignSpace
from ..storage import StudyStore
from ..study import Study, StudyConfig
from . import schemas

_STATUS = {
    "invalid_input": 400,
    "not_found": 404,
    "conflict": 409,
    "state_error": 409,
    "internal": 500,
}

DATA_DIR_ENV = "SEQBO_DATA_DIR"


def _error_response(code: str, message: str, detail: dict | None = None) -> JSONResponse:
    body = schemas.ErrorResponse(
        error=schemas.ApiError(code=code, message=message, detail=detail or {})
    )
    return JSONResponse(status_code=_STATUS.get(code, 500), content=body.model_dump())


def create_app(data_dir=None, frontend_dir=None) -> FastAPI:
    data_dir = data_dir or os.environ.get(DATA_DIR_ENV, "seqbo-data")
    app = FastAPI(title="seqbo", version="0.1.0")
    store = StudyStore(data_dir)
    app.state.store = store

    @app.exception_handler(SeqboError)
    async def _seqbo_error(request: Request, exc: SeqboError):
        return _error_response(exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        errors = [{"loc": list(e.get("loc", ())), "msg": e.get("msg", ""),
                   "type": e.get("type", "")} for e in exc.errors()]
        return _error_response("invalid_input", "request body failed validation",
                               {"errors": errors})

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        return _error_response("internal", f"{type(exc).__name__}: {exc}")

    def _summary(record) -> schemas.StudySummary:
        return schemas.StudySummary(**record.summary())

    @app.post("/studies", response_model=schemas.StudyDetail, status_code=201)
    def create_study(body: schemas.CreateStudyRequest):
        space = DesignSpace.parse(body.space)
        config = StudyConfig.from_config(body.config)
        record = store.create(Study(space, config), owner=body.owner, study_id=body.id)
        return _detail(record)

    @app.get("/studies", response_model=list[schemas.StudySummary])
    def list_studies():
        return [_summary(r) for r in store.list_records()]

    def _detail(record) -> schemas.StudyDetail:
        return schemas.StudyDetail(
            **record.summary(),
            space=record.study.space.to_config(),
            config=record.study.config.to_config(),
            pending=[dict(p) for p in record.study.pending],
        )

    @app.get("/studies/{study_id}", response_model=schemas.StudyDetail)
    def get_study(study_id: str):
        return _detail(store.get(study_id))

    @app.post("/studies/{study_id}/suggest", response_model=schemas.SuggestResponse)
    def suggest(study_id: str, body: schemas.SuggestRequest):
        record, points = store.mutate(study_id, lambda s: s.suggest(body.q))
        return schemas.SuggestResponse(points=points, revision=record.revision)

    @app.get("/studies/{study_id}/slate", response_model=schemas.SlateResponse)
    def slate(study_id: str, k: int = 5):
        record = store.get(study_id)
        items = record.study.slate(k)
        return schemas.SlateResponse(
            candidates=[schemas.SlateItem(**item) for item in items],
            revision=record.revision,
        )

    @app.post("/studies/{study_id}/observe", response_model=schemas.StudySummary)
    def observe(study_id: str, body: schemas.ObserveRequest):
        record, _ = store.mutate(
            study_id,
            lambda s: s.observe(body.x, body.y, source=body.source),
            expected_revision=body.revision,
        )
        return _summary(record)

    @app.get("/studies/{study_id}/history", response_model=schemas.HistoryResponse)
    def history(study_id: str):
        record = store.get(study_id)
        return schemas.HistoryResponse(
            observations=[schemas.ObservationModel(**o.to_config())
                          for o in record.study.history],
            revision=record.revision,
        )

    @app.get("/studies/{study_id}/best", response_model=schemas.BestResponse)
    def best(study_id: str, mode: str = "observed"):
        record = store.get(study_id)
        return schemas.BestResponse(**record.study.best(mode))

    @app.post("/studies/{study_id}/stop", response_model=schemas.StudySummary)
    def stop(study_id: str):
        record, _ = store.mutate(study_id, lambda s: s.stop())
        return _summary(record)

    @app.get("/studies/{study_id}/curve", response_model=schemas.CurveResponse)
    def curve(study_id: str):
        study = store.get(study_id).study
        return schemas.CurveResponse(
            iterations=[o.iteration for o in study.history],
            y=[o.y for o in study.history],
            best_so_far=study.best_so_far(),
        )

    if frontend_dir:
        frontend = Path(frontend_dir)

        @app.get("/", include_in_schema=False)
        def index():
            return FileResponse(frontend / "index.html")

        @app.get("/assets/{name}", include_in_schema=False)
        def asset(name: str):
            target = (frontend / "assets" / name).resolve()
            if not str(target).startswith(str((frontend / "assets").resolve())) \
                    or not target.exists():
                raise InvalidInputError(f"unknown asset {name!r}")
            return FileResponse(target)

    return app
