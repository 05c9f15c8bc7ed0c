"""HTTP run-management service consumed by the exploration UI.

Runs execute asynchronously in a worker pool; the registry is the only
shared mutable structure and is lock-protected. Re-factorizing a finished
run with a new perspective count reuses its stored score matrix, so no
detector is ever re-executed for a PATCH.
"""

from __future__ import annotations

import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import factorization, meta, metrics, pipeline
from .errors import ExplorerError, ParameterError

HOME_ENV_VAR = "OUTLIER_EXPLORER_HOME"


class RunRequest(BaseModel):
    """POST /runs body; dataset is a name under the data root or a path."""

    dataset: str
    t_total: float = Field(0.5, gt=0)
    g: int = Field(1, ge=1)
    k: int = Field(10, ge=1)
    lam: float = Field(1.0, ge=0)
    alpha: float = Field(0.9, gt=0, le=1)
    gamma: int | None = Field(None, ge=0)
    label_column: str | None = None
    strategy: Literal["planned", "exhaustive", "random_subset", "random_one",
                      "random_one_planned"] = "planned"
    subspace_seed: int = 0
    detector_seed: int = 0
    nmf_seed: int = 0
    strategy_seed: int = 0
    workers: int = Field(1, ge=1)


class PatchPerspectives(BaseModel):
    g: int = Field(..., ge=1)


@dataclass
class _RunRecord:
    status: str  # queued | running | completed | infeasible | failed
    config: pipeline.RunConfig
    result: pipeline.RunResult | None = None
    error: str | None = None


@dataclass
class ServiceState:
    data_root: Path
    model_bundle_path: Path | None
    runs_dir: Path
    bundle: meta.ModelBundle | None = None
    registry: dict[str, _RunRecord] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)
    pool: ThreadPoolExecutor = field(default_factory=lambda: ThreadPoolExecutor(max_workers=4))
    executions: int = 0  # detectors executed since startup, for audit


def _resolve_dataset(state: ServiceState, name: str) -> Path:
    path = Path(name)
    if path.is_absolute() and path.exists():
        return path
    candidate = state.data_root / name
    if candidate.exists():
        return candidate
    if candidate.with_suffix(".csv").exists():
        return candidate.with_suffix(".csv")
    raise HTTPException(status_code=404, detail=f"dataset {name!r} not found")


def _summary(run_id: str, record: _RunRecord) -> dict:
    info = {
        "run_id": run_id,
        "status": record.status,
        "dataset": record.config.dataset,
        "strategy": record.config.strategy,
        "t_total": record.config.t_total,
        "g": record.config.g,
    }
    if record.error:
        info["error"] = record.error
    if record.result is not None and record.result.infeasibility:
        info["infeasibility"] = record.result.infeasibility
    return info


def create_app(data_root=None, model_bundle=None, runs_dir=None) -> FastAPI:
    home = Path(os.environ.get(HOME_ENV_VAR, "."))
    state = ServiceState(
        data_root=Path(data_root) if data_root else home / "datasets",
        model_bundle_path=Path(model_bundle) if model_bundle else None,
        runs_dir=Path(runs_dir) if runs_dir else home / "runs",
    )
    if state.model_bundle_path is None:
        default_bundle = home / "models.json"
        if default_bundle.exists():
            state.model_bundle_path = default_bundle
    if state.model_bundle_path is not None and state.model_bundle_path.exists():
        state.bundle = meta.ModelBundle.load(state.model_bundle_path)

    app = FastAPI(title="outlier-explorer")
    app.state.explorer = state

    def record_of(run_id: str) -> _RunRecord:
        with state.lock:
            record = state.registry.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"run {run_id!r} not found")
        return record

    def execute_run(run_id: str):
        with state.lock:
            record = state.registry[run_id]
            record.status = "running"
        try:
            result = pipeline.run_strategy(record.config, bundle=state.bundle,
                                           runs_dir=state.runs_dir)
            with state.lock:
                record.result = result
                record.status = result.status
                state.executions += len(result.detector_results)
        except ExplorerError as exc:
            with state.lock:
                record.status = "failed"
                record.error = str(exc)

    @app.post("/runs")
    def submit_run(request: RunRequest):
        dataset_path = _resolve_dataset(state, request.dataset)
        try:
            config = pipeline.RunConfig(
                dataset=str(dataset_path),
                t_total=request.t_total, g=request.g, k=request.k,
                lam=request.lam, alpha=request.alpha, gamma=request.gamma,
                label_column=request.label_column, strategy=request.strategy,
                subspace_seed=request.subspace_seed,
                detector_seed=request.detector_seed, nmf_seed=request.nmf_seed,
                strategy_seed=request.strategy_seed, workers=request.workers,
                model_bundle=(str(state.model_bundle_path)
                              if state.model_bundle_path else None))
        except ParameterError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        run_id = uuid.uuid4().hex
        with state.lock:
            state.registry[run_id] = _RunRecord(status="queued", config=config)
        state.pool.submit(execute_run, run_id)
        return {"run_id": run_id}

    @app.get("/runs")
    def list_runs():
        with state.lock:
            return [_summary(run_id, rec) for run_id, rec in state.registry.items()]

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        record = record_of(run_id)
        payload = _summary(run_id, record)
        if record.result is not None:
            payload["result"] = record.result.to_dict()
        return payload

    @app.get("/runs/{run_id}/perspectives")
    def get_perspectives(run_id: str):
        record = record_of(run_id)
        if record.result is None or record.result.perspective_set is None:
            raise HTTPException(status_code=409,
                                detail=f"run {run_id!r} has no perspectives yet")
        factors = record.result.perspective_set
        components = factorization.extract_perspectives(factors)
        return {
            "g": factors.g,
            "perspective_set": factors.to_dict(),
            "detector_ids": list(record.result.delta.detector_ids),
            "ensemble": record.result.ensemble.tolist(),
            "components": [{
                "component_index": p.component_index,
                "values": p.component.tolist(),
                "member_detectors": list(p.member_detectors),
                "total_mass": p.total_mass,
            } for p in components],
        }

    @app.patch("/runs/{run_id}/perspectives")
    def patch_perspectives(run_id: str, patch: PatchPerspectives):
        record = record_of(run_id)
        if record.result is None or record.result.delta is None:
            raise HTTPException(status_code=409,
                                detail=f"run {run_id!r} has no stored score matrix")
        try:
            pipeline.refactorize(record.result, patch.g)
        except ParameterError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        pipeline.save_run(record.result, state.runs_dir)
        return get_perspectives(run_id)

    @app.get("/runs/{run_id}/metrics")
    def get_metrics(run_id: str, n: str = "10,13,15,17,20"):
        record = record_of(run_id)
        if record.result is None or record.result.ensemble is None:
            raise HTTPException(status_code=409, detail="run not completed")
        if record.result.labels is None:
            return {"labels": False, "table": None}
        try:
            n_values = tuple(int(v) for v in n.split(",") if v.strip())
        except ValueError:
            raise HTTPException(status_code=422,
                                detail="n must be a comma-separated integer list")
        table = metrics.metric_table(record.result.ensemble, record.result.labels,
                                     n_values)
        return {"labels": True, "table": {str(k): v for k, v in table.items()}}

    @app.get("/datasets")
    def list_datasets():
        if not state.data_root.exists():
            return []
        return sorted(p.name for p in state.data_root.glob("*.csv"))

    @app.get("/models")
    def model_info():
        if state.bundle is None:
            return {"loaded": False, "models": []}
        return {"loaded": True,
                "path": str(state.model_bundle_path),
                "models": [{k: v for k, v in m.items() if k != "coefficients"}
                           for m in state.bundle.to_dict()["models"]]}

    @app.get("/stats")
    def stats():
        with state.lock:
            return {"runs": len(state.registry), "executions": state.executions}

    return app
