import logging
from typing import Annotated

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from analysis import (
    AnalysisService,
    coefficient_table,
    fit_summary,
    frame_columns,
    json_value,
    measures_table,
    sweep_summary,
    validation_message,
)
from config import config, configure_logging
from errors import AllReplicationsFailed, NotConverged, RankDeficient, WRatioError
from models import MAX_SEED, TransformParam

configure_logging()
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(title="WR(lambda) Ratio Measures API", root_path="")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
    expose_headers=["*"],
)

service = AnalysisService(config)


# Pydantic models for request/response
class MeasuresRequest(BaseModel):
    """Risk pair and the lambdas to report"""

    p0: float
    p1: float
    lambdas: list[TransformParam] | None = None


class CurveRequest(BaseModel):
    rr: float
    lambdas: list[TransformParam] | None = None
    step: float | None = None


class SimulateRequest(BaseModel):
    """Two-arm Monte Carlo design"""

    n_per_group: int
    p0: float
    rr: float
    replications: int = 500
    seed: int = Field(ge=0, le=MAX_SEED)
    lambdas: list[TransformParam] | None = None
    workers: int | None = Field(default=None, ge=1)


class VerifyRequest(BaseModel):
    grid_step: float | None = None
    lambda_steps: int | None = None


class TableResponse(BaseModel):
    """Column name -> values; missing values are null"""

    columns: dict[str, list]


class FitResponse(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    deviance: float
    iterations: int
    converged: bool
    separation: bool
    coefficients: dict[str, list]


def _fit_response(result, level: float) -> FitResponse:
    summary = fit_summary(result)
    return FitResponse(
        lambda_=summary.pop("lambda"),
        coefficients=frame_columns(coefficient_table(result, level)),
        **summary,
    )


def _http_error(e: Exception) -> HTTPException:
    """Map toolkit errors to 422 (bad input), 409 (fit failed) or 500."""
    if isinstance(e, ValidationError):
        return HTTPException(status_code=422, detail=validation_message(e))
    if isinstance(e, NotConverged):
        detail = {"message": str(e)}
        if e.fit is not None:
            detail["fit"] = _fit_response(e.fit, 0.95).model_dump(by_alias=True)
        return HTTPException(status_code=409, detail=detail)
    if isinstance(e, RankDeficient):
        return HTTPException(
            status_code=409, detail={"message": str(e), "columns": e.columns}
        )
    if isinstance(e, AllReplicationsFailed):
        return HTTPException(status_code=409, detail=str(e))
    if isinstance(e, WRatioError | ValueError):
        return HTTPException(status_code=422, detail=str(e))
    logger.exception("Unhandled error")
    return HTTPException(status_code=500, detail=str(e))


# API Endpoints


@app.post("/api/measures", response_model=TableResponse)
async def compute_measures(request: MeasuresRequest):
    """RR, OR, CLR, WR(lambda) and B(lambda), one row per lambda"""
    try:
        report = service.measures(request.p0, request.p1, request.lambdas)
        return TableResponse(columns=frame_columns(measures_table(report)))
    except Exception as e:
        raise _http_error(e) from e


@app.post("/api/curve", response_model=TableResponse)
async def compute_curve(request: CurveRequest):
    try:
        table = service.curve(request.rr, request.lambdas, request.step)
        return TableResponse(columns=frame_columns(table))
    except Exception as e:
        raise _http_error(e) from e


@app.post("/api/fit", response_model=FitResponse)
async def fit_upload(
    file: Annotated[UploadFile, File()],
    outcome: Annotated[str, Form()],
    lam: Annotated[float, Form(alias="lambda")],
    exposure: Annotated[str | None, Form()] = None,
    covariates: Annotated[str, Form()] = "",
    level: Annotated[float, Form(gt=0.0, lt=1.0)] = 0.95,
):
    """Fit an uploaded CSV at one lambda"""
    try:
        names = [c.strip() for c in covariates.split(",") if c.strip()]
        result = service.fit_csv(file.file, outcome, exposure, lam, names)
        return _fit_response(result, level)
    except Exception as e:
        raise _http_error(e) from e


@app.post("/api/simulate", response_model=TableResponse)
def simulate(request: SimulateRequest):
    # Plain def: FastAPI runs it in the threadpool
    try:
        table = service.simulate(
            request.n_per_group,
            request.p0,
            request.rr,
            request.replications,
            request.seed,
            lambdas=request.lambdas,
            workers=request.workers,
        )
        return TableResponse(columns=frame_columns(table))
    except Exception as e:
        raise _http_error(e) from e


@app.post("/api/verify")
def verify(request: VerifyRequest):
    try:
        report = service.verify(request.grid_step, request.lambda_steps)
    except Exception as e:
        raise _http_error(e) from e
    return {key: json_value(value) for key, value in sweep_summary(report).items()}
