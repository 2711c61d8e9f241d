"""HTTP service wrapping the pipeline commands.

The CLI is a thin client of these endpoints; they can also be served
standalone (``ctxlens serve``) so several clients can share one output
directory and one warm process. Errors carry a ``kind`` field: ``usage``
for bad configs/arguments (clients should exit 2) and ``runtime`` for
everything else (exit 1).
"""

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import RunConfig
from .errors import UsageError
from .pipeline import ANALYSES, run_analyze, run_sweep_cmd, run_train


class TrainRequest(BaseModel):
    config: RunConfig


class TrainResponse(BaseModel):
    model_path: str
    config_hash: str
    vocab_size: int
    n_docs: int
    n_tokens: int


class SweepRequest(BaseModel):
    config: RunConfig
    force: bool = False


class SweepResponse(BaseModel):
    config_hash: str
    files: list[str]
    ppl_csv: str
    n_results: int
    skipped: list[dict]


class AnalyzeRequest(BaseModel):
    config: RunConfig


class AnalyzeResponse(BaseModel):
    config_hash: str
    csv_path: str
    json_path: str
    summary: dict


def create_app() -> FastAPI:
    app = FastAPI(title="ctxlens", version=__version__)

    @app.exception_handler(UsageError)
    async def _usage_error(request: Request, exc: UsageError):
        return JSONResponse(status_code=400,
                            content={"detail": {"kind": "usage", "message": str(exc)}})

    @app.exception_handler(Exception)
    async def _runtime_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500,
                            content={"detail": {"kind": "runtime", "message": str(exc)}})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/analyses")
    def analyses() -> dict:
        return {"analyses": list(ANALYSES)}

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest):
        return run_train(req.config)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        return run_sweep_cmd(req.config, force=req.force)

    @app.post("/analyze/{analysis_name}", response_model=AnalyzeResponse)
    def analyze(analysis_name: str, req: AnalyzeRequest):
        return run_analyze(req.config, analysis_name)

    return app
