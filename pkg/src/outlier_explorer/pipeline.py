"""End-to-end exploration runs and their persistence.

A run enumerates candidate detectors, predicts their cost and utility,
selects a subset under the budget (or falls back to one of the baseline
strategies), executes the selection, factorizes the score matrix into
perspectives and derives ensemble scores plus metrics. Each run persists
as a single self-contained JSON document, so re-evaluating metrics or
re-factorizing with a new perspective count never re-executes detectors.
"""

from __future__ import annotations

import json
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import detectors, factorization, meta, metrics, mip, subspaces
from .data import DataMatrix, LabeledDataset, load_csv
from .errors import (DetectorExecutionError, InfeasibleInstanceError,
                     ParameterError)

STRATEGIES = ("planned", "exhaustive", "random_subset", "random_one",
              "random_one_planned")
WALL_CLOCK_SAFETY_FACTOR = 2.0


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run (wall-clock aside)."""

    dataset: str
    t_total: float = 0.5
    g: int = 1
    k: int = mip.DEFAULT_K
    lam: float = mip.DEFAULT_LAMBDA
    alpha: float = subspaces.DEFAULT_ALPHA
    gamma: int | None = None
    label_column: str | None = None
    model_bundle: str | None = None
    strategy: str = "planned"
    subspace_seed: int = 0
    detector_seed: int = 0
    nmf_seed: int = 0
    strategy_seed: int = 0
    n_values: tuple[int, ...] = metrics.DEFAULT_N_VALUES
    workers: int = 1
    node_limit: int = mip.DEFAULT_NODE_LIMIT

    def __post_init__(self):
        if self.t_total <= 0:
            raise ParameterError("t_total must be positive")
        if self.g < 1:
            raise ParameterError("g must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ParameterError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        object.__setattr__(self, "n_values", tuple(self.n_values))

    def to_dict(self) -> dict:
        payload = {k: v for k, v in self.__dict__.items()}
        payload["n_values"] = list(self.n_values)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        payload = dict(payload)
        if "n_values" in payload:
            payload["n_values"] = tuple(payload["n_values"])
        return cls(**payload)


@dataclass
class RunResult:
    """Every artifact of one exploration run."""

    run_id: str
    config: RunConfig
    status: str = "running"  # running | completed | infeasible | failed
    column_names: tuple[str, ...] = ()
    labels: np.ndarray | None = None
    families: subspaces.SubspaceFamilies | None = None
    candidates: list[subspaces.CandidateDetector] = field(default_factory=list)
    plan: mip.ExplorationPlan | None = None
    executed_indices: tuple[int, ...] = ()
    skipped_indices: tuple[int, ...] = ()
    failed_detectors: dict[int, str] = field(default_factory=dict)
    detector_results: list[detectors.DetectorResult] = field(default_factory=list)
    delta: factorization.OutlierMatrix | None = None
    perspective_set: factorization.PerspectiveSet | None = None
    ensemble: np.ndarray | None = None
    metric_table: dict[int, dict[str, float]] | None = None
    timings: dict[str, float] = field(default_factory=dict)
    infeasibility: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def total_detector_wall_clock(self) -> float:
        return sum(r.wall_clock for r in self.detector_results)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config.to_dict(),
            "status": self.status,
            "column_names": list(self.column_names),
            "labels": None if self.labels is None else self.labels.tolist(),
            "families": None if self.families is None else self.families.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "plan": None if self.plan is None else self.plan.to_dict(),
            "executed_indices": list(self.executed_indices),
            "skipped_indices": list(self.skipped_indices),
            "failed_detectors": {str(k): v for k, v in self.failed_detectors.items()},
            "detector_results": [r.to_dict() for r in self.detector_results],
            "delta": None if self.delta is None else self.delta.to_dict(),
            "perspective_set": (None if self.perspective_set is None
                                else self.perspective_set.to_dict()),
            "ensemble": None if self.ensemble is None else self.ensemble.tolist(),
            "metric_table": (None if self.metric_table is None else
                             {str(n): row for n, row in self.metric_table.items()}),
            "timings": dict(self.timings),
            "infeasibility": list(self.infeasibility),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunResult":
        return cls(
            run_id=payload["run_id"],
            config=RunConfig.from_dict(payload["config"]),
            status=payload["status"],
            column_names=tuple(payload.get("column_names", ())),
            labels=(None if payload.get("labels") is None
                    else np.asarray(payload["labels"], dtype=int)),
            families=(None if payload.get("families") is None
                      else subspaces.SubspaceFamilies.from_dict(payload["families"])),
            candidates=[subspaces.CandidateDetector.from_dict(c)
                        for c in payload.get("candidates", [])],
            plan=(None if payload.get("plan") is None
                  else mip.ExplorationPlan.from_dict(payload["plan"])),
            executed_indices=tuple(payload.get("executed_indices", ())),
            skipped_indices=tuple(payload.get("skipped_indices", ())),
            failed_detectors={int(k): v for k, v in
                              payload.get("failed_detectors", {}).items()},
            detector_results=[detectors.DetectorResult.from_dict(r)
                              for r in payload.get("detector_results", [])],
            delta=(None if payload.get("delta") is None
                   else factorization.OutlierMatrix.from_dict(payload["delta"])),
            perspective_set=(None if payload.get("perspective_set") is None
                             else factorization.PerspectiveSet.from_dict(
                                 payload["perspective_set"])),
            ensemble=(None if payload.get("ensemble") is None
                      else np.asarray(payload["ensemble"], dtype=float)),
            metric_table=(None if payload.get("metric_table") is None else
                          {int(n): row for n, row in payload["metric_table"].items()}),
            timings=dict(payload.get("timings", {})),
            infeasibility=list(payload.get("infeasibility", [])),
            error=payload.get("error"),
        )


def save_run(result: RunResult, runs_dir) -> Path:
    runs_dir = Path(runs_dir)
    runs_dir.mkdir(parents=True, exist_ok=True)
    path = runs_dir / f"{result.run_id}.json"
    path.write_text(json.dumps(result.to_dict()), encoding="utf-8")
    return path


def load_run(path) -> RunResult:
    return RunResult.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _detector_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def _load_dataset(config: RunConfig):
    loaded = load_csv(config.dataset, label_column=config.label_column)
    if isinstance(loaded, LabeledDataset):
        return loaded.data, loaded.labels
    return loaded, None


def estimate_candidates(data: DataMatrix, families: subspaces.SubspaceFamilies,
                        bundle: meta.ModelBundle) -> list[subspaces.CandidateDetector]:
    """Annotate every enumerated candidate with predicted cost and utility."""
    stats = meta.feature_stats_table(data, families.f_nr)
    estimated = []
    for cand in subspaces.enumerate_candidates(families):
        cost = bundle.predict_cost(cand.algorithm, data.n, len(cand.subspace))
        mfv = meta.meta_feature_vector(cand.subspace, stats)
        utility = bundle.predict_utility(cand.algorithm, mfv)
        estimated.append(cand.with_estimates(cost, utility))
    return estimated


def _execute_selection(data: DataMatrix, candidates, indices, config: RunConfig,
                       budget_stop: bool):
    """Run the chosen candidates, preserving candidate order in the output.

    With ``budget_stop`` set, candidates not yet started are skipped once
    the cumulative wall clock of finished ones exceeds twice the budget.
    """
    indices = list(indices)
    results: dict[int, detectors.DetectorResult] = {}
    failures: dict[int, str] = {}
    skipped: list[int] = []
    cumulative = 0.0
    stop_at = WALL_CLOCK_SAFETY_FACTOR * config.t_total

    def run_one(idx):
        return detectors.execute(candidates[idx], data,
                                 rng_seed=_detector_seed(config.detector_seed, idx))

    if budget_stop or config.workers <= 1:
        # the safety stop needs the running wall-clock total, so stay serial
        for idx in indices:
            if budget_stop and cumulative > stop_at:
                skipped.append(idx)
                continue
            try:
                result = run_one(idx)
                results[idx] = result
                cumulative += result.wall_clock
            except DetectorExecutionError as exc:
                failures[idx] = str(exc)
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            pending = {idx: pool.submit(run_one, idx) for idx in indices}
            for idx, fut in pending.items():
                try:
                    results[idx] = fut.result()
                except DetectorExecutionError as exc:
                    failures[idx] = str(exc)
    ordered = [results[idx] for idx in sorted(results)]
    return ordered, sorted(results), failures, skipped


def _finalize(result: RunResult, config: RunConfig, strategy_scores=None):
    """Factorize, ensemble, and score a run that has detector results."""
    if not result.detector_results:
        result.status = "failed"
        result.error = "no detector produced scores"
        return result
    t0 = time.perf_counter()
    result.delta = factorization.build_outlier_matrix(result.detector_results)
    g = min(config.g, min(result.delta.t, result.delta.n))
    result.perspective_set = factorization.klnmf(result.delta, g,
                                                 rng_seed=config.nmf_seed)
    if strategy_scores is None:
        result.ensemble = factorization.ensemble_scores(result.delta,
                                                        rng_seed=config.nmf_seed)
    else:
        result.ensemble = detectors.normalize_scores(strategy_scores)
    result.timings["factorization"] = time.perf_counter() - t0
    if result.labels is not None:
        result.metric_table = metrics.metric_table(result.ensemble, result.labels,
                                                   config.n_values)
    result.status = "completed"
    return result


def run_exploration(config: RunConfig, bundle: meta.ModelBundle | None = None,
                    runs_dir=None) -> RunResult:
    """The budgeted pipeline: enumerate, estimate, select, execute, factorize."""
    if config.strategy != "planned":
        return run_strategy(config, bundle=bundle, runs_dir=runs_dir)
    result = RunResult(run_id=uuid.uuid4().hex, config=config)
    data, labels = _load_dataset(config)
    result.column_names = tuple(data.column_names)
    result.labels = labels
    if bundle is None:
        if config.model_bundle is None:
            raise ParameterError("planned strategy requires a model bundle")
        bundle = meta.ModelBundle.load(config.model_bundle)

    t0 = time.perf_counter()
    result.families = subspaces.enumerate_families(
        data, alpha=config.alpha, gamma=config.gamma, rng_seed=config.subspace_seed)
    result.candidates = estimate_candidates(data, result.families, bundle)
    result.timings["estimation"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    instance = mip.MipInstance.from_candidates(
        result.candidates, config.t_total, k=config.k, lam=config.lam,
        algorithms=subspaces.ALGORITHMS)
    try:
        result.plan = mip.solve(instance, node_limit=config.node_limit)
    except InfeasibleInstanceError as exc:
        result.status = "infeasible"
        result.infeasibility = exc.violations
        result.timings["solve"] = time.perf_counter() - t0
        if runs_dir is not None:
            save_run(result, runs_dir)
        return result
    result.timings["solve"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ordered, executed, failures, skipped = _execute_selection(
        data, result.candidates, result.plan.selected, config, budget_stop=True)
    result.detector_results = ordered
    result.executed_indices = tuple(executed)
    result.failed_detectors = failures
    result.skipped_indices = tuple(skipped)
    result.timings["execution"] = time.perf_counter() - t0

    _finalize(result, config)
    if runs_dir is not None:
        save_run(result, runs_dir)
    return result


def run_strategy(config: RunConfig, bundle: meta.ModelBundle | None = None,
                 runs_dir=None) -> RunResult:
    """Baseline exploration strategies used for comparison runs."""
    if config.strategy == "planned":
        return run_exploration(config, bundle=bundle, runs_dir=runs_dir)
    result = RunResult(run_id=uuid.uuid4().hex, config=config)
    data, labels = _load_dataset(config)
    result.column_names = tuple(data.column_names)
    result.labels = labels

    needs_mip = config.strategy in ("random_subset", "random_one_planned")
    if bundle is None and config.model_bundle is not None:
        bundle = meta.ModelBundle.load(config.model_bundle)
    if needs_mip and bundle is None:
        raise ParameterError(f"strategy {config.strategy!r} requires a model bundle")

    t0 = time.perf_counter()
    result.families = subspaces.enumerate_families(
        data, alpha=config.alpha, gamma=config.gamma, rng_seed=config.subspace_seed)
    if bundle is not None:
        result.candidates = estimate_candidates(data, result.families, bundle)
    else:
        result.candidates = subspaces.enumerate_candidates(result.families)
    result.timings["estimation"] = time.perf_counter() - t0

    plan_size = None
    if needs_mip:
        instance = mip.MipInstance.from_candidates(
            result.candidates, config.t_total, k=config.k, lam=config.lam,
            algorithms=subspaces.ALGORITHMS)
        try:
            result.plan = mip.solve(instance, node_limit=config.node_limit)
        except InfeasibleInstanceError as exc:
            result.status = "infeasible"
            result.infeasibility = exc.violations
            if runs_dir is not None:
                save_run(result, runs_dir)
            return result
        plan_size = len(result.plan.selected)

    rng = np.random.default_rng(config.strategy_seed)
    all_indices = list(range(len(result.candidates)))
    if config.strategy == "exhaustive":
        chosen = all_indices
    elif config.strategy == "random_subset":
        chosen = sorted(rng.choice(len(all_indices), size=min(plan_size, len(all_indices)),
                                   replace=False).tolist())
    elif config.strategy == "random_one":
        chosen = [int(rng.integers(len(all_indices)))]
    else:  # random_one_planned
        chosen = [int(rng.choice(list(result.plan.selected)))]

    t0 = time.perf_counter()
    ordered, executed, failures, skipped = _execute_selection(
        data, result.candidates, chosen, config, budget_stop=False)
    result.detector_results = ordered
    result.executed_indices = tuple(executed)
    result.failed_detectors = failures
    result.timings["execution"] = time.perf_counter() - t0

    if config.strategy in ("exhaustive", "random_subset"):
        strategy_scores = (np.mean([r.normalized_scores for r in ordered], axis=0)
                           if ordered else None)
    else:
        strategy_scores = ordered[0].normalized_scores if ordered else None
    _finalize(result, config, strategy_scores=strategy_scores)
    if runs_dir is not None:
        save_run(result, runs_dir)
    return result


def refactorize(result: RunResult, g: int) -> RunResult:
    """Re-run the factorization at a new perspective count from stored scores."""
    if result.delta is None:
        raise ParameterError("run has no stored outlier matrix")
    if not 1 <= g <= min(result.delta.t, result.delta.n):
        raise ParameterError(
            f"g must be in [1, {min(result.delta.t, result.delta.n)}], got {g}")
    new = replace_config(result.config, g=g)
    result.config = new
    result.perspective_set = factorization.klnmf(result.delta, g,
                                                 rng_seed=new.nmf_seed)
    return result


def replace_config(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **changes)


def evaluate_run(result: RunResult, n_values=None) -> dict[int, dict[str, float]]:
    """Metric table from a persisted run; needs stored labels and scores."""
    if result.ensemble is None:
        raise ParameterError("run has no ensemble scores")
    if result.labels is None:
        raise ParameterError("run has no labels to evaluate against")
    return metrics.metric_table(result.ensemble, result.labels,
                                n_values or result.config.n_values)
