"""HTTP service exposing the toolkit.

Endpoints accept model configs and policies as TOML text (the same grammar
the CLI uses on disk) and return the produced files verbatim plus a summary,
so any client can persist byte-identical outputs. Error envelope:

    422  {"detail": {"kind": "config", "message": ...}}   bad input
    400  {"detail": {"kind": "blowup", "message": ..., "step": ...}}

Run with:  uvicorn rmvsde.service:app
"""

from __future__ import annotations

import functools

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .errors import NumericalBlowup, ToolkitError
from .fileio import load_config
from .selfcheck import run_selfcheck
from .workflows import (
    run_chatter,
    run_cost,
    run_example3,
    run_optimize,
    run_roxin,
    run_simulate,
)

app = FastAPI(
    title="rmvsde",
    description="Reflected mean-field SDE simulation and control optimization",
    version=__version__,
)


class Overrides(BaseModel):
    seed: int | None = None
    steps: int | None = Field(default=None, ge=1)
    particles: int | None = Field(default=None, ge=1)
    threads: int | None = Field(default=None, ge=1)

    def kwargs(self) -> dict:
        return {
            "seed": self.seed, "steps": self.steps,
            "particles": self.particles, "thread_hint": self.threads,
        }


class SimulateRequest(BaseModel):
    config_toml: str
    policy_toml: str | None = None
    overrides: Overrides = Overrides()


class ChatterRequest(BaseModel):
    config_toml: str
    policy_toml: str | None = None
    levels: list[int]
    common_rng: bool = True
    overrides: Overrides = Overrides()


class OptimizeRequest(BaseModel):
    config_toml: str
    control_cells: int = Field(default=1, ge=1)
    budget: int = Field(default=100, ge=1)
    method: str = "cross-entropy"
    search_seed: int = 0
    elite_fraction: float = 0.2
    strictify_n: int = Field(default=16, ge=1)
    overrides: Overrides = Overrides()


class Example3Request(BaseModel):
    n_max: int = Field(default=32, ge=1)


class RoxinRequest(BaseModel):
    config_toml: str
    tolerance: float = 1e-6
    probes: list[list[float]] | None = None
    weights: list[float] | None = None


class SelftestRequest(BaseModel):
    tamper: str | None = None


class FilesResponse(BaseModel):
    files: dict[str, str]
    summary: dict


class PropertyResult(BaseModel):
    name: str
    ok: bool
    detail: str


class SelftestResponse(BaseModel):
    ok: bool
    results: list[PropertyResult]


def _translate(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericalBlowup as err:
            raise HTTPException(
                status_code=400,
                detail={"kind": "blowup", "message": str(err), "step": err.step},
            ) from err
        except ToolkitError as err:
            raise HTTPException(
                status_code=422,
                detail={"kind": "config", "message": str(err)},
            ) from err

    return wrapper


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/simulate", response_model=FilesResponse)
@_translate
def simulate(req: SimulateRequest):
    cfg = load_config(req.config_toml)
    return run_simulate(cfg, req.policy_toml, **req.overrides.kwargs())


@app.post("/cost", response_model=FilesResponse)
@_translate
def cost(req: SimulateRequest):
    cfg = load_config(req.config_toml)
    return run_cost(cfg, req.policy_toml, **req.overrides.kwargs())


@app.post("/chatter", response_model=FilesResponse)
@_translate
def chatter(req: ChatterRequest):
    cfg = load_config(req.config_toml)
    return run_chatter(
        cfg, req.policy_toml, req.levels, common_rng=req.common_rng,
        **req.overrides.kwargs(),
    )


@app.post("/optimize", response_model=FilesResponse)
@_translate
def optimize(req: OptimizeRequest):
    cfg = load_config(req.config_toml)
    return run_optimize(
        cfg,
        control_cells=req.control_cells,
        budget=req.budget,
        method=req.method,
        search_seed=req.search_seed,
        elite_fraction=req.elite_fraction,
        strictify_n=req.strictify_n,
        **req.overrides.kwargs(),
    )


@app.post("/example3", response_model=FilesResponse)
@_translate
def example3(req: Example3Request):
    return run_example3(req.n_max)


@app.post("/roxin", response_model=FilesResponse)
@_translate
def roxin(req: RoxinRequest):
    cfg = load_config(req.config_toml)
    return run_roxin(cfg, tolerance=req.tolerance, probes=req.probes, weights=req.weights)


@app.post("/selftest", response_model=SelftestResponse)
@_translate
def selftest(req: SelftestRequest):
    results = run_selfcheck(tamper=req.tamper)
    return SelftestResponse(
        ok=all(r["ok"] for r in results),
        results=[PropertyResult(**r) for r in results],
    )
