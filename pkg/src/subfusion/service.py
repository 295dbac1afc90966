"""HTTP/JSON service backing the interactive cluster-count tuning UI.

Single session, single dataset, fixed at startup. The browser (or any
client) drives the loop: request an embedding, inspect per-class structure,
preview a tentative subdivision of one class, then commit per-class counts
and launch a training job that reports subdivided-vs-baseline metrics on a
shared held-out split.

Long-running work (embedding, training) goes through a one-slot job queue
processed by a single background worker, so at most one job is ever queued
or running; reads are lock-protected snapshots and never mutate state.
"""

from __future__ import annotations

import hashlib
import json
import os
import queue
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .classifier import SfmConfig, SoftmaxHyper, train_sfm
from .data import LabeledDataset, SplitSpec, atomic_write_text, split_indices
from .errors import SubfusionError
from .evaluate import evaluate_model
from .ssc import DEFAULT_LAMBDA_REL, silhouette_score
from .subdivision import cluster_in_plane
from .tsne import EmbeddingResult, tsne


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class JobRecord:
    job_id: str
    kind: str
    status: str = "queued"  # queued | running | done | failed
    error: str | None = None
    result: dict | None = None

    def summary(self) -> dict:
        doc = {"job_id": self.job_id, "kind": self.kind, "status": self.status}
        if self.error is not None:
            doc["error"] = self.error
        return doc


@dataclass
class Session:
    """All mutable state behind the service; writes go through ``lock``."""

    dataset: LabeledDataset
    lambda_rel: float = DEFAULT_LAMBDA_REL
    out_dir: str | None = None
    embedding: EmbeddingResult | None = None
    committed_k: dict[int, int] | None = None
    sub_of_sample: dict[str, int] = field(default_factory=dict)
    jobs: dict[str, JobRecord] = field(default_factory=dict)

    def __post_init__(self):
        self.lock = threading.Lock()
        self._queue: queue.Queue = queue.Queue(maxsize=1)
        self._counter = 0
        worker = threading.Thread(target=self._worker, daemon=True, name="subfusion-jobs")
        worker.start()

    # -- job machinery -----------------------------------------------------

    def _worker(self) -> None:
        while True:
            job_id, fn = self._queue.get()
            with self.lock:
                self.jobs[job_id].status = "running"
            try:
                result = fn(job_id)
            except Exception as exc:  # job failures become job state, not 500s
                with self.lock:
                    self.jobs[job_id].status = "failed"
                    self.jobs[job_id].error = f"{type(exc).__name__}: {exc}"
            else:
                with self.lock:
                    self.jobs[job_id].result = result
                    self.jobs[job_id].status = "done"
            finally:
                self._queue.task_done()

    def submit(self, kind: str, fn) -> str:
        with self.lock:
            busy = [j for j in self.jobs.values() if j.status in ("queued", "running")]
            if busy:
                raise ApiError(
                    409,
                    "JobInProgress",
                    f"job {busy[0].job_id} is {busy[0].status}; retry when it finishes",
                )
            self._counter += 1
            job_id = f"job-{self._counter:04d}"
            self.jobs[job_id] = JobRecord(job_id=job_id, kind=kind)
            self._queue.put((job_id, fn))
            return job_id

    # -- snapshots -----------------------------------------------------------

    def state_fingerprint(self) -> str:
        """Hash of all user-visible state; read endpoints must not change it."""
        with self.lock:
            doc = {
                "embedding": None
                if self.embedding is None
                else hashlib.sha256(self.embedding.Y.tobytes()).hexdigest(),
                "committed_k": self.committed_k,
                "subs": sorted(self.sub_of_sample.items()),
                "jobs": [(j.job_id, j.status) for j in self.jobs.values()],
            }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


class EmbedRequest(BaseModel):
    perplexity: float = 30.0
    iters: int = 500
    seed: int = 0


class PreviewRequest(BaseModel):
    class_index: int = Field(alias="class")
    k: int
    seed: int = 0

    model_config = {"populate_by_name": True}


class TrainRequest(BaseModel):
    K: dict[str, int]
    hyper: dict[str, Any] = Field(default_factory=dict)


def _resolve_class(session: Session, value: int | str) -> int:
    ds = session.dataset
    if isinstance(value, str):
        if value in ds.class_names:
            return ds.class_names.index(value)
        try:
            value = int(value)
        except ValueError:
            raise ApiError(404, "UnknownClass", f"no class named {value!r}") from None
    if not (0 <= int(value) < ds.n_classes):
        raise ApiError(404, "UnknownClass", f"class index {value} out of range")
    return int(value)


def create_app(
    dataset: LabeledDataset,
    static_dir: str | None = None,
    out_dir: str | None = None,
    lambda_rel: float = DEFAULT_LAMBDA_REL,
) -> FastAPI:
    """Build the service around one dataset."""
    app = FastAPI(title="subfusion tuning service")
    session = Session(dataset=dataset, lambda_rel=lambda_rel, out_dir=out_dir)
    app.state.session = session

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(SubfusionError)
    async def _domain_error(_request: Request, exc: SubfusionError):
        return JSONResponse(
            status_code=400, content={"code": type(exc).__name__, "message": str(exc)}
        )

    @app.get("/api/summary")
    def summary():
        ds = session.dataset
        counts = ds.class_counts()
        with session.lock:
            return {
                "n": ds.n,
                "d": ds.d,
                "classes": [
                    {"index": i, "name": ds.class_names[i], "count": int(counts[i])}
                    for i in range(ds.n_classes)
                ],
                "has_embedding": session.embedding is not None,
                "committed_k": session.committed_k,
                "jobs": [j.summary() for j in session.jobs.values()],
            }

    @app.post("/api/embed")
    def embed(req: EmbedRequest):
        def job(_job_id: str):
            result = tsne(
                session.dataset.features,
                perplexity=req.perplexity,
                iters=req.iters,
                seed=req.seed,
            )
            with session.lock:
                session.embedding = result
            return {"n": session.dataset.n, "kl_final": float(result.kl_history[-1])}

        return {"job_id": session.submit("embed", job)}

    @app.get("/api/embedding")
    def get_embedding(class_filter: str | None = Query(default=None, alias="class")):
        with session.lock:
            embedding = session.embedding
            subs = dict(session.sub_of_sample)
        if embedding is None:
            raise ApiError(409, "NoEmbedding", "run POST /api/embed first")
        ds = session.dataset
        wanted = None if class_filter is None else _resolve_class(session, class_filter)
        points = []
        for i in range(ds.n):
            cls = int(ds.labels[i])
            if wanted is not None and cls != wanted:
                continue
            point = {
                "id": ds.sample_ids[i],
                "x": float(embedding.Y[i, 0]),
                "y": float(embedding.Y[i, 1]),
                "class": cls,
            }
            if ds.sample_ids[i] in subs:
                point["sub"] = subs[ds.sample_ids[i]]
            points.append(point)
        return {"points": points, "kl_final": float(embedding.kl_history[-1])}

    @app.post("/api/preview")
    def preview(req: PreviewRequest):
        with session.lock:
            embedding = session.embedding
        if embedding is None:
            raise ApiError(409, "NoEmbedding", "run POST /api/embed first")
        cls = _resolve_class(session, req.class_index)
        ds = session.dataset
        idx = np.flatnonzero(ds.labels == cls)
        if not (1 <= req.k <= idx.size):
            raise ApiError(
                400, "KOutOfRange", f"k must be in [1, {idx.size}] for class {cls}, got {req.k}"
            )
        coords = embedding.Y[idx]
        labels = cluster_in_plane(coords, req.k, session.lambda_rel, req.seed)
        silhouette = None
        if req.k > 1 and np.unique(labels).size > 1:
            silhouette = float(silhouette_score(coords, labels))
        return {
            "labels": [
                {"id": ds.sample_ids[i], "sub": int(s)} for i, s in zip(idx, labels)
            ],
            "silhouette": silhouette,
        }

    @app.post("/api/train")
    def train(req: TrainRequest):
        ds = session.dataset
        counts = ds.class_counts()
        k_by_class: dict[int, int] = {}
        for raw_key, raw_k in req.K.items():
            cls = _resolve_class(session, raw_key)
            k = int(raw_k)
            if not (1 <= k <= counts[cls]):
                raise ApiError(
                    400,
                    "InvalidK",
                    f"K for class {cls} must be in [1, {int(counts[cls])}], got {k}",
                )
            k_by_class[cls] = k
        k_values = tuple(k_by_class.get(i, 1) for i in range(ds.n_classes))
        with session.lock:
            embedding = session.embedding
        if embedding is None:
            raise ApiError(409, "NoEmbedding", "run POST /api/embed before training")
        hyper = req.hyper
        seed = int(hyper.get("seed", 0))
        test_fraction = float(hyper.get("test_fraction", 0.25))
        config = SfmConfig(
            k_source="manual",
            k_values=k_values,
            mode="ssc_2d",
            lambda_rel=session.lambda_rel,
            hyper=SoftmaxHyper(
                learning_rate=float(hyper.get("learning_rate", 1.0)),
                epochs=int(hyper.get("epochs", 300)),
                l2=float(hyper.get("l2", 1e-4)),
            ),
            seed=seed,
        )

        def job(job_id: str):
            train_idx, test_idx = split_indices(
                ds.labels, ds.n_classes, SplitSpec(test_fraction, seed=seed)
            )
            train_ds, test_ds = ds.subset(train_idx), ds.subset(test_idx)
            model = train_sfm(train_ds, config, embedding=embedding.Y[train_idx])
            ones = SfmConfig(
                k_source="manual",
                k_values=(1,) * ds.n_classes,
                hyper=config.hyper,
                seed=seed,
            )
            baseline = train_sfm(train_ds, ones)
            result = {
                "K": {str(i): k for i, k in enumerate(model.sub_map.K)},
                "M": model.sub_map.M,
                "seed": seed,
                "test_fraction": test_fraction,
                "n_train": train_ds.n,
                "n_test": test_ds.n,
                "sfm": evaluate_model(model, test_ds).to_dict(),
                "baseline": evaluate_model(baseline, test_ds).to_dict(),
            }
            with session.lock:
                session.committed_k = {i: int(k) for i, k in enumerate(model.sub_map.K)}
                session.sub_of_sample = {
                    train_ds.sample_ids[i]: int(model.sub_map.sub_labels[i])
                    for i in range(train_ds.n)
                }
            if session.out_dir:
                os.makedirs(session.out_dir, exist_ok=True)
                atomic_write_text(
                    os.path.join(session.out_dir, f"report-{job_id}.json"), json.dumps(result)
                )
            return result

        return {"job_id": session.submit("train", job)}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        with session.lock:
            record = session.jobs.get(job_id)
            if record is None:
                raise ApiError(404, "UnknownJob", f"no job {job_id!r}")
            return record.summary()

    @app.get("/api/report/{job_id}")
    def report(job_id: str):
        with session.lock:
            record = session.jobs.get(job_id)
            if record is None:
                raise ApiError(404, "UnknownJob", f"no job {job_id!r}")
            if record.status in ("queued", "running"):
                return JSONResponse(
                    status_code=202,
                    content={"code": "NotFinished", "message": f"job is {record.status}"},
                )
            if record.status == "failed":
                raise ApiError(409, "JobFailed", record.error or "job failed")
            return record.result

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
