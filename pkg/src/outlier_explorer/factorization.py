"""Outlier-score matrix factorization into rank-1 perspectives.

The detectors-by-points score matrix is factorized with multiplicative
updates minimizing the generalized Kullback-Leibler divergence. Each of
the g rank-1 components is a heatmap-ready "perspective"; detectors are
grouped by their dominant component. With g = 1 the point ordering of the
factor coincides with ordering by mean detector score, which is how the
ensemble scores are produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detectors import DetectorResult, normalize_scores
from .errors import ParameterError

RECONSTRUCTION_FLOOR = 1e-12
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 500


@dataclass(frozen=True)
class OutlierMatrix:
    """Normalized scores of t executed detectors over n points."""

    values: np.ndarray
    detector_ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "detector_ids", tuple(self.detector_ids))
        if values.ndim != 2:
            raise ParameterError("outlier matrix must be 2-D")
        if len(self.detector_ids) != values.shape[0]:
            raise ParameterError("one detector id per row required")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ParameterError("outlier scores must lie in [0, 1]")

    @property
    def t(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "detector_ids": list(self.detector_ids)}

    @classmethod
    def from_dict(cls, payload: dict) -> "OutlierMatrix":
        return cls(np.asarray(payload["values"], dtype=float),
                   tuple(payload["detector_ids"]))


@dataclass(frozen=True)
class PerspectiveSet:
    """Non-negative factors of the outlier matrix plus bookkeeping."""

    lam: np.ndarray          # t x g
    omega: np.ndarray        # n x g
    g: int
    kl_history: tuple[float, ...]
    detector_assignment: tuple[int, ...]  # argmax component per detector

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.tolist(),
            "omega": self.omega.tolist(),
            "g": self.g,
            "kl_history": list(self.kl_history),
            "detector_assignment": list(self.detector_assignment),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PerspectiveSet":
        return cls(np.asarray(payload["lambda"], dtype=float),
                   np.asarray(payload["omega"], dtype=float),
                   payload["g"], tuple(payload["kl_history"]),
                   tuple(payload["detector_assignment"]))


@dataclass(frozen=True)
class Perspective:
    """One rank-1 component, clipped to [0, 1] for heatmap display."""

    component_index: int
    component: np.ndarray       # t x n, rank <= 1
    member_detectors: tuple[int, ...]
    total_mass: float


def build_outlier_matrix(results: list[DetectorResult]) -> OutlierMatrix:
    """Stack normalized score rows in execution order."""
    if not results:
        raise ParameterError("need at least one detector result")
    n = results[0].normalized_scores.shape[0]
    for result in results:
        if result.normalized_scores.shape[0] != n:
            raise ParameterError(
                f"detector {result.detector.label()} scored "
                f"{result.normalized_scores.shape[0]} points, expected {n}")
    values = np.vstack([r.normalized_scores for r in results])
    ids = tuple(r.detector.label() for r in results)
    return OutlierMatrix(values, ids)


def _kl_divergence(delta: np.ndarray, reconstruction: np.ndarray) -> float:
    recon = np.maximum(reconstruction, RECONSTRUCTION_FLOOR)
    positive = delta > 0
    term = np.zeros_like(delta)
    term[positive] = delta[positive] * np.log(delta[positive] / recon[positive])
    return float((term - delta + recon).sum())


def klnmf(delta: OutlierMatrix, g: int, max_iters: int = DEFAULT_MAX_ITERS,
          tol: float = DEFAULT_TOL, rng_seed: int = 0) -> PerspectiveSet:
    """Rank-g factorization by multiplicative KL updates.

    Factors are initialized uniform-random in (0, 1]; the objective is
    recorded every iteration and is non-increasing (a property of the
    update rule). Stops on relative improvement below ``tol``.
    """
    if g < 1:
        raise ParameterError("g must be >= 1")
    if g > min(delta.t, delta.n):
        raise ParameterError(
            f"rank {g} exceeds min(detectors, points) = {min(delta.t, delta.n)}")
    values = delta.values
    rng = np.random.default_rng(rng_seed)
    lam = 1.0 - rng.random((delta.t, g))   # uniform on (0, 1]
    omega_t = 1.0 - rng.random((g, delta.n))

    history = []
    previous = None
    for _ in range(max_iters):
        recon = np.maximum(lam @ omega_t, RECONSTRUCTION_FLOOR)
        lam *= (values / recon) @ omega_t.T / np.maximum(
            omega_t.sum(axis=1), RECONSTRUCTION_FLOOR)
        recon = np.maximum(lam @ omega_t, RECONSTRUCTION_FLOOR)
        omega_t *= lam.T @ (values / recon) / np.maximum(
            lam.sum(axis=0)[:, None], RECONSTRUCTION_FLOOR)
        objective = _kl_divergence(values, lam @ omega_t)
        history.append(objective)
        if previous is not None:
            if abs(previous - objective) < tol * max(abs(previous), RECONSTRUCTION_FLOOR):
                break
        previous = objective

    assignment = tuple(int(i) for i in np.argmax(lam, axis=1))
    return PerspectiveSet(lam, omega_t.T, g, tuple(history), assignment)


def extract_perspectives(factors: PerspectiveSet) -> list[Perspective]:
    """The g rank-1 components, ordered by descending total mass.

    Detector membership follows each detector's argmax factor column (the
    lowest component index on ties).
    """
    perspectives = []
    for c in range(factors.g):
        component = np.clip(np.outer(factors.lam[:, c], factors.omega[:, c]), 0.0, 1.0)
        members = tuple(i for i, a in enumerate(factors.detector_assignment) if a == c)
        perspectives.append(Perspective(c, component, members, float(component.sum())))
    perspectives.sort(key=lambda p: -p.total_mass)
    return perspectives


def ensemble_scores(delta: OutlierMatrix, rng_seed: int = 0) -> np.ndarray:
    """Single-perspective point scores rescaled to [0, 1].

    The rank-1 KL optimum is the independence model, so the returned
    ordering matches ordering by column means of the score matrix.
    """
    factors = klnmf(delta, g=1, max_iters=DEFAULT_MAX_ITERS, tol=1e-12,
                    rng_seed=rng_seed)
    return normalize_scores(factors.omega[:, 0])
