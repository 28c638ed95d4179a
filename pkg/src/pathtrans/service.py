"""HTTP service wrapping the scenario runner.

POST /run executes one scenario config and returns the report; GET /catalog
lists the preset fields; GET /health is a liveness probe.  Failures return
the same machine-readable error object as the CLI with the HTTP status
mirroring the exit codes: 422 config, 409 gate failure, 400 singularity.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__, runner
from .errors import PathtransError
from .fields import CATALOG

_STATUS_BY_KIND = {"config": 422, "gate": 409, "singularity": 400}


class RunRequest(BaseModel):
    """One scenario config; mirrors the CLI JSON schema."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    scenario: str
    chart: dict | None = None
    field: dict | None = None
    path: dict | None = None
    loop: dict | None = None
    region: dict | None = None
    basepoint: list[float] | None = None
    point: list[float] | None = None
    s: float | None = None
    t: float | None = None
    condition: str | None = None
    lambda_: str | None = Field(default=None, alias="lambda")
    phi: str | None = None
    coupling: dict | None = None
    sweep: dict | None = None
    numeric: dict | None = None
    output: dict | None = None

    def to_config(self) -> dict:
        return self.model_dump(by_alias=True, exclude_none=True)


class RunReport(BaseModel):
    scenario: str
    config: dict
    numeric: dict
    results: dict
    status: str


class ErrorInfo(BaseModel):
    kind: str
    message: str
    location: str


class ErrorBody(BaseModel):
    error: ErrorInfo


class PresetInfo(BaseModel):
    name: str
    params: list[str]
    description: str


class CatalogResponse(BaseModel):
    presets: list[PresetInfo]
    listing: str


class HealthResponse(BaseModel):
    status: str
    version: str


app = FastAPI(title="pathtrans", version=__version__,
              description="Linear transports along paths, holonomy, and gauge frames")


@app.exception_handler(PathtransError)
async def _domain_error(request: Request, exc: PathtransError) -> JSONResponse:
    return JSONResponse({"error": exc.as_dict()},
                        status_code=_STATUS_BY_KIND.get(exc.kind, 422))


@app.exception_handler(RequestValidationError)
async def _schema_error(request: Request, exc: RequestValidationError) -> JSONResponse:
    detail = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
    return JSONResponse({"error": {"kind": "config", "message": detail, "location": "body"}},
                        status_code=422)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/catalog", response_model=CatalogResponse)
def catalog_listing() -> CatalogResponse:
    presets = [PresetInfo(name=name, params=CATALOG[name][0], description=CATALOG[name][1])
               for name in sorted(CATALOG)]
    return CatalogResponse(presets=presets, listing=runner.list_catalog())


@app.post("/run", response_model=RunReport, responses={
    422: {"model": ErrorBody}, 409: {"model": ErrorBody}, 400: {"model": ErrorBody}})
def run(request: RunRequest) -> RunReport:
    report = runner.run_scenario(request.to_config())
    return RunReport(**report)
