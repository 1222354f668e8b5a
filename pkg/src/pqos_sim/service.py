"""HTTP job-runner service around the simulator.

Simulation runs are CPU-bound and can take minutes, so submission is
asynchronous: POST a config, get a job id, poll it. A single worker thread
executes jobs FIFO; completed artifacts stay in memory for figure-data
export and are optionally written to disk.
"""

from __future__ import annotations

import queue
import threading
import traceback
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .config import ConfigError, config_from_dict
from .runner import RunArtifacts, emit_figure_data, run, train_then_eval

KIND_RUN = "run"
KIND_TRAIN = "train"


class ValidateRequest(BaseModel):
    config: dict


class ValidateResponse(BaseModel):
    valid: bool
    problems: list[str] = Field(default_factory=list)


class SubmitRequest(BaseModel):
    config: dict
    kind: str = KIND_RUN
    episodes: int = Field(default=1, ge=1, description="training episodes (train jobs only)")
    seed: int | None = Field(default=None, description="overrides config.seed")
    out_dir: str | None = Field(default=None, description="server-side artifact directory")


class SubmitResponse(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    kind: str
    state: str  # queued | running | done | error
    error: str | None = None
    summary: dict | None = None


class FigdataRequest(BaseModel):
    job_ids: list[str]
    out_dir: str


class FigdataResponse(BaseModel):
    delays: str
    prr: str


@dataclass
class JobRecord:
    job_id: str
    kind: str
    state: str = "queued"
    error: str | None = None
    artifacts: RunArtifacts | None = None
    request: SubmitRequest | None = None
    done: threading.Event = field(default_factory=threading.Event)


class JobManager:
    """FIFO single-worker job execution with in-memory results."""

    def __init__(self):
        self.jobs: dict[str, JobRecord] = {}
        self._queue: "queue.Queue[JobRecord]" = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._loop, daemon=True)
        self._worker.start()

    def submit(self, request: SubmitRequest) -> JobRecord:
        job = JobRecord(job_id=uuid.uuid4().hex[:12], kind=request.kind, request=request)
        with self._lock:
            self.jobs[job.job_id] = job
        self._queue.put(job)
        return job

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self.jobs.get(job_id)

    def _loop(self) -> None:
        while True:
            job = self._queue.get()
            job.state = "running"
            try:
                req = job.request
                cfg = config_from_dict(req.config)
                if req.seed is not None:
                    cfg = cfg.model_copy(update={"seed": req.seed})
                if req.kind == KIND_TRAIN:
                    job.artifacts = train_then_eval(cfg, req.episodes, out_dir=req.out_dir)
                else:
                    job.artifacts = run(cfg, out_dir=req.out_dir)
                job.state = "done"
            except ConfigError as exc:
                job.state = "error"
                job.error = str(exc)
            except Exception:
                job.state = "error"
                job.error = traceback.format_exc(limit=8)
            finally:
                job.done.set()
                self._queue.task_done()


def create_app() -> FastAPI:
    app = FastAPI(title="pqos-sim", version=__version__)
    manager = JobManager()
    app.state.manager = manager

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/validate-config", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        try:
            config_from_dict(req.config)
        except ConfigError as exc:
            return ValidateResponse(valid=False, problems=exc.problems)
        return ValidateResponse(valid=True)

    @app.post("/runs", response_model=SubmitResponse, status_code=202)
    def submit(req: SubmitRequest) -> SubmitResponse:
        if req.kind not in (KIND_RUN, KIND_TRAIN):
            raise HTTPException(status_code=422, detail=f"unknown job kind {req.kind!r}")
        try:
            config_from_dict(req.config)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=exc.problems)
        job = manager.submit(req)
        return SubmitResponse(job_id=job.job_id)

    @app.get("/runs", response_model=list[JobStatus])
    def list_jobs() -> list[JobStatus]:
        return [_status(job, with_summary=False) for job in manager.jobs.values()]

    @app.get("/runs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str) -> JobStatus:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no such job {job_id!r}")
        return _status(job, with_summary=True)

    @app.post("/figdata", response_model=FigdataResponse)
    def figdata(req: FigdataRequest) -> FigdataResponse:
        artifact_sets = []
        for job_id in req.job_ids:
            job = manager.get(job_id)
            if job is None:
                raise HTTPException(status_code=404, detail=f"no such job {job_id!r}")
            if job.state != "done" or job.artifacts is None:
                raise HTTPException(status_code=409, detail=f"job {job_id} is {job.state}, not done")
            artifact_sets.append(job.artifacts)
        paths = emit_figure_data(artifact_sets, req.out_dir)
        return FigdataResponse(delays=str(paths["delays"]), prr=str(paths["prr"]))

    return app


def _status(job: JobRecord, with_summary: bool) -> JobStatus:
    summary = None
    if with_summary and job.artifacts is not None:
        summary = job.artifacts.summary
    return JobStatus(
        job_id=job.job_id, kind=job.kind, state=job.state, error=job.error, summary=summary
    )
