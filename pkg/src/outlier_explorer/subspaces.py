"""Feature subspace enumeration.

Builds the non-redundant feature bag by iteratively dropping one member of
the most correlated pair, ranks the surviving features by Laplacian score
to form a nested chain of prioritized subspaces, draws random subspaces
for coverage, and crosses both families with the detector algorithms to
produce the candidate list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import squareform, pdist

from .data import DataMatrix, FeatureSubspace, normalize_feature
from .errors import ParameterError

ALGORITHMS = ("lof", "md", "abod", "fbod", "sod")

DEFAULT_ALPHA = 0.9
LAPLACIAN_NEIGHBORS = 5


@dataclass(frozen=True)
class CandidateDetector:
    """An (algorithm, feature subspace) pair, later annotated with estimates."""

    algorithm: str
    subspace: FeatureSubspace
    origin: str  # "prioritized" | "random"
    cost: float | None = None
    utility: float | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.algorithm!r}")
        if self.origin not in ("prioritized", "random"):
            raise ParameterError(f"unknown origin {self.origin!r}")
        if self.cost is not None and not self.cost > 0:
            raise ParameterError("cost must be positive")
        if self.utility is not None and self.utility < 0:
            raise ParameterError("utility must be non-negative")

    def with_estimates(self, cost: float, utility: float) -> "CandidateDetector":
        return CandidateDetector(self.algorithm, self.subspace, self.origin,
                                 cost=cost, utility=utility)

    def label(self, data: DataMatrix | None = None) -> str:
        return f"{self.algorithm}{self.subspace.describe(data)}"

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "subspace": list(self.subspace.indices),
            "origin": self.origin,
            "cost": self.cost,
            "utility": self.utility,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CandidateDetector":
        return cls(payload["algorithm"], FeatureSubspace(tuple(payload["subspace"])),
                   payload["origin"], cost=payload.get("cost"),
                   utility=payload.get("utility"))


@dataclass(frozen=True)
class SubspaceFamilies:
    """The non-redundant bag plus the prioritized and random families."""

    f_nr: FeatureSubspace
    f_p: tuple[FeatureSubspace, ...]
    f_r: tuple[FeatureSubspace, ...]
    alpha: float
    gamma: int
    rng_seed: int

    def __post_init__(self):
        object.__setattr__(self, "f_p", tuple(self.f_p))
        object.__setattr__(self, "f_r", tuple(self.f_r))
        bag = set(self.f_nr.indices)
        for sub in (*self.f_p, *self.f_r):
            if not set(sub.indices) <= bag:
                raise ParameterError(
                    f"subspace {sub.indices} uses columns outside the bag"
                )

    def to_dict(self) -> dict:
        return {
            "f_nr": list(self.f_nr.indices),
            "f_p": [list(s.indices) for s in self.f_p],
            "f_r": [list(s.indices) for s in self.f_r],
            "alpha": self.alpha,
            "gamma": self.gamma,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SubspaceFamilies":
        return cls(
            f_nr=FeatureSubspace(tuple(payload["f_nr"])),
            f_p=tuple(FeatureSubspace(tuple(s)) for s in payload["f_p"]),
            f_r=tuple(FeatureSubspace(tuple(s)) for s in payload["f_r"]),
            alpha=payload["alpha"],
            gamma=payload["gamma"],
            rng_seed=payload["rng_seed"],
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SubspaceFamilies":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def correlation_matrix(data: DataMatrix) -> np.ndarray:
    """Absolute Pearson correlation between all column pairs.

    Zero-variance columns correlate 0 with everything else; the diagonal
    is 1 regardless.
    """
    values = data.values
    std = values.std(axis=0)
    centered = values - values.mean(axis=0)
    nonzero = std > 0
    scaled = np.zeros_like(centered)
    scaled[:, nonzero] = centered[:, nonzero] / (std[nonzero] * np.sqrt(data.n))
    corr = np.abs(scaled.T @ scaled)
    corr[~nonzero, :] = 0.0
    corr[:, ~nonzero] = 0.0
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, 0.0, 1.0)


def build_nonredundant_bag(data: DataMatrix, alpha: float = DEFAULT_ALPHA) -> FeatureSubspace:
    """Drop redundant columns until every retained pair correlates below alpha.

    Each round finds the most correlated pair still in the bag (lowest index
    pair on ties) and, if it reaches alpha, drops whichever member has the
    greater mean correlation against the rest of the bag (the larger column
    index when those tie).
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must be in (0, 1], got {alpha}")
    corr = correlation_matrix(data)
    bag = list(range(data.m))
    while len(bag) >= 2:
        sub = corr[np.ix_(bag, bag)]
        np.fill_diagonal(sub, -1.0)
        flat = np.argmax(sub)  # row-major: lowest index pair wins ties
        i, j = divmod(flat, len(bag))
        if i > j:
            i, j = j, i
        if sub[i, j] < alpha:
            break
        denom = len(bag) - 1
        mean_i = (corr[bag[i], bag].sum() - 1.0) / denom
        mean_j = (corr[bag[j], bag].sum() - 1.0) / denom
        drop = i if mean_i > mean_j else j
        bag.pop(drop)
    return FeatureSubspace(tuple(bag))


def _neighbor_graph(points: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrized r-NN heat-kernel weights and their degree vector."""
    n = points.shape[0]
    d2 = squareform(pdist(points, "sqeuclidean"))
    order = np.argsort(d2, axis=1, kind="stable")  # self first (distance 0, lowest index)
    adjacency = np.zeros((n, n), dtype=bool)
    for i in range(n):
        neighbors = [j for j in order[i] if j != i][:r]
        adjacency[i, neighbors] = True
    adjacency |= adjacency.T
    edge_d2 = d2[adjacency]
    bandwidth = edge_d2.mean() if edge_d2.size and edge_d2.mean() > 0 else 1.0
    weights = np.where(adjacency, np.exp(-d2 / bandwidth), 0.0)
    degrees = weights.sum(axis=1)
    return weights, degrees


def laplacian_scores(data: DataMatrix, bag: FeatureSubspace,
                     r: int = LAPLACIAN_NEIGHBORS) -> np.ndarray:
    """Locality-preservation score per bag feature; lower is better.

    The r-NN graph is built once on the z-scored projection of the points
    onto the whole bag, then every feature is scored against that graph.
    Zero-variance features score +inf so they rank last.
    """
    if r >= data.n:
        raise ParameterError(f"neighbor count {r} must be < point count {data.n}")
    if r < 1:
        raise ParameterError("neighbor count must be >= 1")
    columns = np.column_stack([normalize_feature(data.column(j)) for j in bag])
    weights, degrees = _neighbor_graph(columns, r)
    total_degree = degrees.sum()
    scores = np.empty(len(bag))
    for idx in range(len(bag)):
        psi = columns[:, idx]
        centered = psi - (psi @ degrees) / total_degree
        denom = centered @ (degrees * centered)
        if denom <= 1e-300:
            scores[idx] = np.inf
            continue
        numer = centered @ (degrees * centered) - centered @ (weights @ centered)
        scores[idx] = numer / denom
    return scores


def build_prioritized_family(bag: FeatureSubspace, scores) -> tuple[FeatureSubspace, ...]:
    """Nested chain of top-l features ranked by ascending score.

    Rank ties break toward the lower column index, so chains are
    deterministic.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.shape != (len(bag),):
        raise ParameterError("scores must cover exactly the bag features")
    ranked = [bag.indices[i] for i in np.argsort(scores, kind="stable")]
    family = []
    for l in range(1, len(bag) + 1):
        family.append(FeatureSubspace(tuple(sorted(ranked[:l]))))
    return tuple(family)


def build_random_family(bag: FeatureSubspace, gamma: int, rng_seed: int) -> tuple[FeatureSubspace, ...]:
    """Draw gamma subspaces, each bag feature kept with probability 1/2.

    Empty draws are redrawn so every member is non-empty.
    """
    if gamma < 0:
        raise ParameterError("gamma must be >= 0")
    rng = np.random.default_rng(rng_seed)
    family = []
    for _ in range(gamma):
        while True:
            mask = rng.random(len(bag)) < 0.5
            if mask.any():
                break
        family.append(FeatureSubspace(tuple(np.asarray(bag.indices)[mask])))
    return tuple(family)


def enumerate_families(data: DataMatrix, alpha: float = DEFAULT_ALPHA,
                       gamma: int | None = None, rng_seed: int = 0,
                       r: int = LAPLACIAN_NEIGHBORS) -> SubspaceFamilies:
    """Run the full enumeration: bag, prioritized chain, random draws."""
    bag = build_nonredundant_bag(data, alpha)
    scores = laplacian_scores(data, bag, min(r, data.n - 1))
    f_p = build_prioritized_family(bag, scores)
    if gamma is None:
        gamma = -(-len(f_p) // 2)  # ceil
    f_r = build_random_family(bag, gamma, rng_seed)
    return SubspaceFamilies(bag, f_p, f_r, alpha, gamma, rng_seed)


def enumerate_candidates(families: SubspaceFamilies) -> list[CandidateDetector]:
    """Cross the union of both families with every algorithm.

    A subspace drawn in both families (or twice in the random family)
    yields a single candidate; membership in the prioritized family wins.
    """
    prioritized = {s.indices for s in families.f_p}
    seen = set()
    subspaces = []
    for sub in (*families.f_p, *families.f_r):
        if sub.indices in seen:
            continue
        seen.add(sub.indices)
        origin = "prioritized" if sub.indices in prioritized else "random"
        subspaces.append((sub, origin))
    return [
        CandidateDetector(algorithm, sub, origin)
        for sub, origin in subspaces
        for algorithm in ALGORITHMS
    ]
