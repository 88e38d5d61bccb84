"""HTTP JSON service for the companion console.

POST /v1/calibrate and /v1/simulate enqueue long jobs onto a bounded worker
pool and return a job record to poll at GET /v1/jobs/{id}; POST /v1/decide
and GET /v1/boundaries answer synchronously. Decision handling is a pure
function of the request body: no patient data is persisted. Job results are
written as flat JSON files under the jobs directory, keyed by job id.
"""

from __future__ import annotations

import json
import tempfile
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .calibration import CalibrationError, calibrate_efficacy, calibrate_toxicity
from .cli import (
    CALIBRATE_EFF_STREAM,
    CALIBRATE_TOX_STREAM,
    run_simulation,
)
from .config import ConfigError, parse_config, parse_scenarios
from .decide import DesignRef, InterimRequest, evaluate_request
from .inference import AnalysisSchedule, NormalPrior, ToxCounts, boundary_set
from .statkernel import Rng
from .winratio import WltCounts

__all__ = ["create_app", "JobStore"]


class JobStore:
    """In-memory job table plus flat-file results; one writer per record."""

    def __init__(self, jobs_dir: Path, max_workers: int = 2):
        self.jobs_dir = jobs_dir
        self.jobs: dict[str, dict] = {}
        self.lock = threading.Lock()
        self.pool = ThreadPoolExecutor(max_workers=max_workers)

    def create(self, kind: str) -> dict:
        job_id = uuid.uuid4().hex
        record = {"job_id": job_id, "kind": kind, "status": "queued",
                  "progress": 0.0, "result_ref": None, "error": None}
        with self.lock:
            self.jobs[job_id] = record
        return dict(record)

    def update(self, job_id: str, **fields) -> None:
        with self.lock:
            self.jobs[job_id].update(fields)

    def get(self, job_id: str) -> dict | None:
        with self.lock:
            record = self.jobs.get(job_id)
            return dict(record) if record else None

    def submit(self, job_id: str, fn) -> None:
        def run():
            self.update(job_id, status="running")
            try:
                result = fn(lambda frac: self.update(job_id, progress=float(frac)))
            except (CalibrationError, ConfigError, ValueError) as err:
                self.update(job_id, status="failed", error=str(err))
                return
            path = self.jobs_dir / f"{job_id}.json"
            with open(path, "w") as fh:
                json.dump(result, fh, indent=2)
                fh.write("\n")
            self.update(job_id, status="done", progress=1.0, result_ref=str(path))

        self.pool.submit(run)

    def result(self, job_id: str) -> dict | None:
        record = self.get(job_id)
        if not record or record["status"] != "done":
            return None
        with open(record["result_ref"]) as fh:
            return json.load(fh)


class PriorBody(BaseModel):
    mean: float = 0.0
    variance: float = Field(100.0, gt=0)


class BoundaryParamsBody(BaseModel):
    lam: float = Field(alias="lambda", ge=0, le=1)
    gamma: float = Field(ge=0, le=1)

    model_config = {"populate_by_name": True}


class WltBody(BaseModel):
    n_win: int = Field(ge=0)
    n_loss: int = Field(ge=0)
    n_tie: int = Field(ge=0)
    n_treat: int = Field(gt=0)
    n_ctrl: int = Field(gt=0)


class ToxBody(BaseModel):
    y1: int = Field(ge=0)
    n1: int = Field(gt=0)
    y0: int = Field(ge=0)
    n0: int = Field(gt=0)


class DecideDesignBody(BaseModel):
    schedule: list[int]
    phi: float = Field(0.5, gt=0, lt=1)
    prior: PriorBody = PriorBody()
    efficacy: BoundaryParamsBody
    toxicity: BoundaryParamsBody | None = None
    delta: float | None = Field(None, gt=0, lt=1)
    tox_prior_a: float = Field(1.0, gt=0)
    tox_prior_b: float = Field(1.0, gt=0)


class DecideBody(BaseModel):
    design: DecideDesignBody
    r_current: int = Field(ge=1)
    wlt_history: list[WltBody]
    tox_history: list[ToxBody] = []


class CalibrateBody(BaseModel):
    config: dict


class SimulateBody(BaseModel):
    config: dict
    methods: list[str] = ["bmw"]
    n_trials: int = Field(10000, ge=1)
    seed: int | None = None


def create_app(jobs_dir: str | None = None, threads: int = 1) -> FastAPI:
    app = FastAPI(title="bmw-design service", version="1")
    jobs_path = Path(jobs_dir) if jobs_dir else Path(tempfile.mkdtemp(prefix="bmw-jobs-"))
    jobs_path.mkdir(parents=True, exist_ok=True)
    store = JobStore(jobs_path)
    app.state.jobs = store
    app.state.threads = threads

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # malformed JSON -> 400; field-level invariant violations -> 422
        for err in exc.errors():
            if err.get("type") == "json_invalid":
                return JSONResponse(status_code=400,
                                    content={"detail": "malformed JSON body"})
        return JSONResponse(status_code=422, content={"detail": exc.errors()})

    @app.post("/v1/decide")
    def decide(body: DecideBody):
        try:
            schedule = AnalysisSchedule(tuple(body.design.schedule), body.design.phi)
            design = DesignRef(
                schedule=schedule,
                lambda_e=body.design.efficacy.lam,
                gamma_e=body.design.efficacy.gamma,
                prior=NormalPrior(body.design.prior.mean, body.design.prior.variance),
                lambda_t=body.design.toxicity.lam if body.design.toxicity else None,
                gamma_t=body.design.toxicity.gamma if body.design.toxicity else None,
                delta=body.design.delta,
                tox_prior_a=body.design.tox_prior_a,
                tox_prior_b=body.design.tox_prior_b,
            )
            req = InterimRequest(
                design=design,
                r_current=body.r_current,
                wlt_history=tuple(WltCounts(**w.model_dump()) for w in body.wlt_history),
                tox_history=tuple(ToxCounts(**t.model_dump()) for t in body.tox_history),
            )
            report = evaluate_request(req)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return report.to_dict()

    @app.get("/v1/boundaries")
    def boundaries(lam: float = Query(alias="lambda"), gamma: float = Query(),
                   schedule: str = Query(), phi: float = Query(0.5)):
        try:
            sched = AnalysisSchedule(tuple(int(v) for v in schedule.split(",")), phi)
            b = boundary_set(lam, gamma, sched)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {
            "lambda": lam,
            "gamma": gamma,
            "rows": [
                {"analysis_index": r + 1, "n_cum": n,
                 "futility_pp": b.futility[r], "superiority_pp": b.superiority[r]}
                for r, n in enumerate(sched.n_cum)
            ],
        }

    @app.post("/v1/calibrate")
    def calibrate_job(body: CalibrateBody):
        try:
            spec = parse_config(body.config)
        except ConfigError as err:
            raise HTTPException(status_code=422, detail=str(err))
        record = store.create("calibrate")

        def work(progress):
            rng = Rng(spec.seed)
            eff = calibrate_efficacy(spec, rng.stream(CALIBRATE_EFF_STREAM))
            progress(0.5)
            result = {"schema_version": 1, "seed": spec.seed, "efficacy": eff.to_dict()}
            if spec.tox is not None:
                tox = calibrate_toxicity(spec, rng.stream(CALIBRATE_TOX_STREAM))
                result["toxicity"] = tox.to_dict()
            progress(1.0)
            return result

        store.submit(record["job_id"], work)
        return store.get(record["job_id"])

    @app.post("/v1/simulate")
    def simulate_job(body: SimulateBody):
        try:
            parse_config(body.config)
            scenarios = parse_scenarios(body.config)
        except (ConfigError, KeyError) as err:
            raise HTTPException(status_code=422, detail=f"invalid config: {err}")
        record = store.create("simulate")

        def work(progress):
            rows = run_simulation(body.config, scenarios, body.methods,
                                  body.n_trials, body.seed, app.state.threads,
                                  progress=progress)
            return {"schema_version": 1, "rows": rows}

        store.submit(record["job_id"], work)
        return store.get(record["job_id"])

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str):
        record = store.get(job_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        if record["status"] == "done":
            record["result"] = store.result(job_id)
        return record

    return app
