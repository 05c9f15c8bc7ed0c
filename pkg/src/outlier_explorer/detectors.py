"""The five baseline outlier detectors and score normalization.

Every detector maps (data, subspace) to one raw score per point, higher
meaning more outlying (the angle-based score is negated to fit this
contract). ``execute`` dispatches by algorithm name, times the run and
attaches [0, 1] min-max normalized scores.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .data import DataMatrix, FeatureSubspace
from .errors import DetectorExecutionError, ParameterError, SizeError
from .subspaces import CandidateDetector

LRD_EPSILON = 1e-12
COVARIANCE_RIDGE = 1e-6
DEFAULT_NEIGHBORS = 10
DEFAULT_BAG_ITERATIONS = 10


@dataclass(frozen=True)
class DetectorResult:
    """Scores and timing of one executed detector."""

    detector: CandidateDetector
    raw_scores: np.ndarray
    normalized_scores: np.ndarray
    wall_clock: float

    def to_dict(self) -> dict:
        return {
            "algorithm": self.detector.algorithm,
            "subspace": list(self.detector.subspace.indices),
            "origin": self.detector.origin,
            "cost": self.detector.cost,
            "utility": self.detector.utility,
            "raw_scores": self.raw_scores.tolist(),
            "normalized_scores": self.normalized_scores.tolist(),
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "DetectorResult":
        detector = CandidateDetector(
            payload["algorithm"], FeatureSubspace(tuple(payload["subspace"])),
            payload["origin"], cost=payload.get("cost"), utility=payload.get("utility"))
        return cls(detector, np.asarray(payload["raw_scores"], dtype=float),
                   np.asarray(payload["normalized_scores"], dtype=float),
                   payload["wall_clock"])


def _neighbors_by_distance(distances: np.ndarray, k: int) -> np.ndarray:
    """Index matrix of each point's k nearest others, ties broken by index."""
    d = distances.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    return order[:, :k]


def run_lof(data: DataMatrix, subspace: FeatureSubspace,
            k_neighbors: int | None = None) -> np.ndarray:
    """Local outlier factor: mean ratio of neighbor density to own density."""
    points = subspace.project(data)
    n = points.shape[0]
    if k_neighbors is None:
        k_neighbors = min(DEFAULT_NEIGHBORS, n - 1)
    if not 1 <= k_neighbors < n:
        raise ParameterError(f"k_neighbors must be in [1, {n - 1}], got {k_neighbors}")
    distances = squareform(pdist(points))
    neighbors = _neighbors_by_distance(distances, k_neighbors)
    k_distance = distances[np.arange(n), neighbors[:, -1]]
    # reach_dist(p, o) = max(k_distance(o), d(p, o)) over each p's neighbors o
    reach = np.maximum(k_distance[neighbors], distances[np.arange(n)[:, None], neighbors])
    lrd = 1.0 / np.maximum(reach.mean(axis=1), LRD_EPSILON)
    return lrd[neighbors].mean(axis=1) / lrd


def run_md(data: DataMatrix, subspace: FeatureSubspace) -> np.ndarray:
    """Mahalanobis distance to the dataset mean under population covariance."""
    points = subspace.project(data)
    centered = points - points.mean(axis=0)
    cov = (centered.T @ centered) / points.shape[0]
    base_ridge = COVARIANCE_RIDGE * max(np.trace(cov) / cov.shape[0], 1e-6)
    chol = None
    for ridge in [0.0] + [base_ridge * 10 ** i for i in range(8)]:
        try:
            chol = np.linalg.cholesky(cov + ridge * np.eye(cov.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise ParameterError("covariance could not be regularized")
    solved = np.linalg.solve(chol, centered.T)
    return np.sqrt((solved ** 2).sum(axis=0))


def run_abod(data: DataMatrix, subspace: FeatureSubspace) -> np.ndarray:
    """Negated weighted variance of pairwise angle cosines (exact, O(n^3)).

    For each point, cosines of angles between difference vectors to all
    other point pairs are weighted by the inverse product of squared
    distances; a small variance marks a point outside the cloud, so the
    variance is negated to keep higher-is-more-outlying.
    """
    points = subspace.project(data)
    n = points.shape[0]
    if n < 3:
        raise SizeError(f"angle-based detection needs >= 3 points, got {n}")
    scores = np.empty(n)
    for i in range(n):
        diffs = np.delete(points, i, axis=0) - points[i]
        sq_norms = (diffs ** 2).sum(axis=1)
        keep = sq_norms > 0  # coincident points contribute no angle
        diffs, sq_norms = diffs[keep], sq_norms[keep]
        m = diffs.shape[0]
        if m < 2:
            scores[i] = 0.0
            continue
        dots = diffs @ diffs.T
        inv = 1.0 / sq_norms
        weights = np.outer(inv, inv)
        values = dots * weights
        iu = np.triu_indices(m, k=1)
        w, v = weights[iu], values[iu]
        w_sum = w.sum()
        mean = (w * v).sum() / w_sum
        scores[i] = -(((w * v ** 2).sum() / w_sum) - mean ** 2)
    return scores


def run_fbod(data: DataMatrix, subspace: FeatureSubspace,
             iterations: int = DEFAULT_BAG_ITERATIONS,
             k_neighbors: int | None = None, rng_seed: int = 0) -> np.ndarray:
    """Feature bagging over LOF: cumulative sum of per-iteration scores.

    Each iteration runs LOF on a random sub-subspace of size uniform in
    [ceil(d/2), d-1] (the full subspace when d = 1).
    """
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    rng = np.random.default_rng(rng_seed)
    d = len(subspace)
    total = np.zeros(data.n)
    for _ in range(iterations):
        if d == 1:
            chosen = subspace
        else:
            size = int(rng.integers(-(-d // 2), d))  # [ceil(d/2), d-1]
            picked = rng.choice(len(subspace), size=size, replace=False)
            chosen = FeatureSubspace(tuple(sorted(np.asarray(subspace.indices)[picked])))
        total += run_lof(data, chosen, k_neighbors)
    return total


def run_sod(data: DataMatrix, subspace: FeatureSubspace,
            ref_neighbors: int | None = None) -> np.ndarray:
    """Deviation within the low-variance axis-parallel subspace of each
    point's nearest-neighbor reference set."""
    points = subspace.project(data)
    n = points.shape[0]
    if ref_neighbors is None:
        ref_neighbors = min(DEFAULT_NEIGHBORS, n - 1)
    if not 1 <= ref_neighbors < n:
        raise ParameterError(f"ref_neighbors must be in [1, {n - 1}], got {ref_neighbors}")
    distances = squareform(pdist(points))
    neighbors = _neighbors_by_distance(distances, ref_neighbors)
    scores = np.empty(n)
    for i in range(n):
        ref = points[neighbors[i]]
        mean = ref.mean(axis=0)
        variances = ref.var(axis=0)
        selected = variances < variances.mean()
        if not selected.any():
            scores[i] = 0.0
            continue
        deviation = points[i, selected] - mean[selected]
        scores[i] = np.sqrt((deviation ** 2).sum()) / np.sqrt(selected.sum())
    return scores


def normalize_scores(raw) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant vector maps to all 0.5."""
    raw = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(raw)):
        raise ParameterError("scores must be finite")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.full_like(raw, 0.5)
    return (raw - lo) / (hi - lo)


_RUNNERS = {
    "lof": lambda data, sub, seed: run_lof(data, sub),
    "md": lambda data, sub, seed: run_md(data, sub),
    "abod": lambda data, sub, seed: run_abod(data, sub),
    "fbod": lambda data, sub, seed: run_fbod(data, sub, rng_seed=seed),
    "sod": lambda data, sub, seed: run_sod(data, sub),
}


def execute(candidate: CandidateDetector, data: DataMatrix,
            rng_seed: int = 0) -> DetectorResult:
    """Run one candidate, recording wall-clock seconds and normalized scores."""
    runner = _RUNNERS[candidate.algorithm]
    start = time.perf_counter()
    try:
        raw = runner(data, candidate.subspace, rng_seed)
    except Exception as exc:  # noqa: BLE001 - identity-wrapping contract
        raise DetectorExecutionError(candidate.label(), exc) from exc
    wall = time.perf_counter() - start
    return DetectorResult(candidate, raw, normalize_scores(raw), wall)
