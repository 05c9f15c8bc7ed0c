"""Meta-learned cost and utility models for candidate detectors.

Cost is regressed per algorithm on the 34 monomials of total degree 1..3
in (subspace size, point count, and their logs). Utility is regressed per
algorithm on 30 subspace-level aggregates of per-feature statistics, with
the agreement between a detector's binarized output and the expert labels
as the target. Per-feature statistics are computed once per non-redundant
bag feature and cached.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import detectors
from .data import DataMatrix, FeatureSubspace, LabeledDataset, normalize_feature
from .errors import ParameterError, TrainingError
from .metrics import top_n_indices
from .subspaces import (ALGORITHMS, LAPLACIAN_NEIGHBORS, enumerate_candidates,
                        enumerate_families, laplacian_scores)

COST_BASE_TERMS = ("subspace_size", "points", "log_subspace_size", "log_points")
# graded-lexicographic over the base terms above: degree 1, then 2, then 3;
# within a degree, combinations_with_replacement order
COST_MONOMIALS = tuple(
    combo
    for degree in (1, 2, 3)
    for combo in itertools.combinations_with_replacement(range(4), degree)
)
COST_FEATURE_ORDER_TAG = "cost-monomials-grlex-v1"

FEATURE_STAT_NAMES = ("laplacian", "std", "skewness", "kurtosis", "entropy")
AGGREGATE_NAMES = ("mean", "median", "mad", "min", "max", "std")
MFV_ORDER_TAG = "mfv-stats-x-aggregates-v1"

OLS_RIDGE = 1e-8
MIN_COST_PREDICTION = 1e-6
ENTROPY_BINS = 10


def cost_feature_names() -> tuple[str, ...]:
    names = []
    for combo in COST_MONOMIALS:
        names.append("*".join(COST_BASE_TERMS[i] for i in combo))
    return tuple(names)


def cost_features(n: int, d: int) -> np.ndarray:
    """The 34 cost monomials for a detector on n points and d features."""
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    if d < 1:
        raise ParameterError(f"need d >= 1, got {d}")
    base = np.array([float(d), float(n), np.log(d), np.log(n)])
    return np.array([np.prod(base[list(combo)]) for combo in COST_MONOMIALS])


def feature_level_stats(column, laplacian: float) -> np.ndarray:
    """(laplacian, std, skewness, kurtosis, entropy) of one normalized feature.

    Zero-variance columns take the degenerate value 0 for every component
    (a non-finite laplacian is also mapped to 0 so downstream aggregates
    stay finite).
    """
    column = np.asarray(column, dtype=float)
    if not np.isfinite(laplacian):
        laplacian = 0.0
    m2 = np.mean((column - column.mean()) ** 2)
    if m2 == 0.0:
        return np.array([laplacian, 0.0, 0.0, 0.0, 0.0])
    std = np.sqrt(m2)
    centered = column - column.mean()
    skewness = np.mean(centered ** 3) / m2 ** 1.5
    kurtosis = np.mean(centered ** 4) / m2 ** 2 - 3.0
    counts, _ = np.histogram(column, bins=ENTROPY_BINS)
    probs = counts[counts > 0] / column.size
    entropy = float(-(probs * np.log(probs)).sum())
    return np.array([laplacian, std, skewness, kurtosis, entropy])


def feature_stats_table(data: DataMatrix, bag: FeatureSubspace,
                        r: int = LAPLACIAN_NEIGHBORS) -> dict[int, np.ndarray]:
    """Per-feature statistics for every bag column, computed once per dataset."""
    lap = laplacian_scores(data, bag, min(r, data.n - 1))
    table = {}
    for pos, col in enumerate(bag):
        normalized = normalize_feature(data.column(col))
        table[col] = feature_level_stats(normalized, lap[pos])
    return table


def meta_feature_vector(subspace: FeatureSubspace,
                        stats_table: dict[int, np.ndarray]) -> np.ndarray:
    """30 aggregates: for each per-feature statistic, its mean, median,
    median absolute deviation, min, max and population std over the
    subspace's features."""
    try:
        rows = np.array([stats_table[col] for col in subspace])
    except KeyError as missing:
        raise ParameterError(f"no cached stats for column {missing}") from None
    components = []
    for stat_idx in range(len(FEATURE_STAT_NAMES)):
        values = rows[:, stat_idx]
        median = np.median(values)
        components.extend([
            values.mean(),
            median,
            np.median(np.abs(values - median)),
            values.min(),
            values.max(),
            values.std(),
        ])
    return np.array(components)


def detection_agreement(result: detectors.DetectorResult, labels) -> float:
    """Fraction of points on which the detector and the labels agree.

    The detector's output is binarized by flagging its top-N scored points,
    N being the number of labeled outliers; agreement is then one minus the
    normalized Hamming distance between the two bit vectors.
    """
    labels = np.asarray(labels, dtype=int)
    n = labels.shape[0]
    n_outliers = int(labels.sum())
    predicted = np.zeros(n, dtype=int)
    if n_outliers > 0:
        predicted[top_n_indices(result.normalized_scores, n_outliers)] = 1
    hamming = int((predicted != labels).sum())
    return 1.0 - hamming / n


@dataclass(frozen=True)
class RegressionModel:
    """A fitted linear model; coefficients exclude the intercept."""

    algorithm: str
    kind: str  # "cost" | "utility"
    coefficients: np.ndarray
    intercept: float
    training_r2: float

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           np.asarray(self.coefficients, dtype=float))
        if self.kind not in ("cost", "utility"):
            raise ParameterError(f"unknown model kind {self.kind!r}")

    @property
    def feature_order_tag(self) -> str:
        return COST_FEATURE_ORDER_TAG if self.kind == "cost" else MFV_ORDER_TAG

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "kind": self.kind,
            "feature_order": self.feature_order_tag,
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "training_r2": self.training_r2,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RegressionModel":
        return cls(payload["algorithm"], payload["kind"],
                   np.asarray(payload["coefficients"], dtype=float),
                   payload["intercept"], payload["training_r2"])


def _r_squared(targets: np.ndarray, predictions: np.ndarray) -> float:
    ss_res = float(((targets - predictions) ** 2).sum())
    ss_tot = float(((targets - targets.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0 if ss_res < 1e-12 else 0.0
    return 1.0 - ss_res / ss_tot


def train_model(kind: str, algorithm: str, samples) -> RegressionModel:
    """Least squares with a tiny ridge (1e-8) guarding rank deficiency.

    Columns are RMS-scaled before solving (the monomial features span many
    orders of magnitude) and coefficients folded back, so the stored model
    is an ordinary linear model over the raw features.
    """
    features = np.array([np.asarray(f, dtype=float) for f, _ in samples])
    targets = np.array([float(t) for _, t in samples])
    if features.ndim != 2 or features.shape[0] < features.shape[1] + 1:
        raise TrainingError(
            f"need at least {features.shape[1] + 1} samples, got {features.shape[0]}")
    design = np.hstack([features, np.ones((features.shape[0], 1))])
    p = design.shape[1]
    scales = np.sqrt((design ** 2).mean(axis=0))
    scales[scales == 0.0] = 1.0
    stacked = np.vstack([design / scales, np.sqrt(OLS_RIDGE) * np.eye(p)])
    rhs = np.concatenate([targets, np.zeros(p)])
    beta, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    beta = beta / scales
    r2 = _r_squared(targets, design @ beta)
    return RegressionModel(algorithm, kind, beta[:-1], float(beta[-1]), r2)


def predict(model: RegressionModel, features) -> float:
    """Linear prediction with the range clamps the selection step relies on."""
    features = np.asarray(features, dtype=float)
    if features.shape != model.coefficients.shape:
        raise ParameterError(
            f"feature dimension {features.shape} does not match model "
            f"{model.coefficients.shape}")
    value = float(features @ model.coefficients + model.intercept)
    if model.kind == "cost":
        return max(value, MIN_COST_PREDICTION)
    return min(max(value, 0.0), 1.0)


class ModelBundle:
    """Exactly ten models: a cost and a utility model per algorithm."""

    def __init__(self, models):
        self._models = {}
        for model in models:
            self._models[(model.algorithm, model.kind)] = model
        expected = {(a, k) for a in ALGORITHMS for k in ("cost", "utility")}
        if set(self._models) != expected:
            missing = sorted(expected - set(self._models))
            extra = sorted(set(self._models) - expected)
            raise ParameterError(f"bundle must hold exactly 10 models "
                                 f"(missing {missing}, unexpected {extra})")

    def model(self, algorithm: str, kind: str) -> RegressionModel:
        return self._models[(algorithm, kind)]

    def predict_cost(self, algorithm: str, n: int, d: int) -> float:
        return predict(self.model(algorithm, "cost"), cost_features(n, d))

    def predict_utility(self, algorithm: str, mfv) -> float:
        return predict(self.model(algorithm, "utility"), mfv)

    def to_dict(self) -> dict:
        return {"models": [m.to_dict() for m in self._models.values()]}

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelBundle":
        return cls([RegressionModel.from_dict(m) for m in payload["models"]])

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ModelBundle":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainingReport:
    """Held-out quality of a trained bundle, per algorithm."""

    train_dataset_indices: list[int]
    test_dataset_indices: list[int]
    cost_r2_train: dict[str, float]
    cost_r2_holdout: dict[str, float]
    utility_r2_train: dict[str, float]
    utility_spearman_holdout: float

    def to_dict(self) -> dict:
        return {
            "train_dataset_indices": self.train_dataset_indices,
            "test_dataset_indices": self.test_dataset_indices,
            "cost_r2_train": self.cost_r2_train,
            "cost_r2_holdout": self.cost_r2_holdout,
            "utility_r2_train": self.utility_r2_train,
            "utility_spearman_holdout": self.utility_spearman_holdout,
        }


def _collect_samples(dataset: LabeledDataset, dataset_index: int, alpha, rng_seed):
    """Execute every enumerated candidate once, yielding training samples."""
    data = dataset.data
    families = enumerate_families(data, alpha=alpha, rng_seed=rng_seed + dataset_index)
    stats = feature_stats_table(data, families.f_nr)
    samples = []
    for cand_index, candidate in enumerate(enumerate_candidates(families)):
        result = detectors.execute(candidate, data,
                                   rng_seed=rng_seed + 1009 * dataset_index + cand_index)
        samples.append({
            "algorithm": candidate.algorithm,
            "cost_features": cost_features(data.n, len(candidate.subspace)),
            "wall_clock": result.wall_clock,
            "mfv": meta_feature_vector(candidate.subspace, stats),
            "agreement": detection_agreement(result, dataset.labels),
        })
    return samples


def train_all(corpus, split_seed: int, alpha: float = 0.9,
              rng_seed: int = 0) -> tuple[ModelBundle, TrainingReport]:
    """Fit all ten models on a labeled corpus with a 70/30 dataset split."""
    if len(corpus) < 10:
        raise TrainingError(f"need a corpus of >= 10 datasets, got {len(corpus)}")
    rng = np.random.default_rng(split_seed)
    order = rng.permutation(len(corpus))
    n_train = int(round(0.7 * len(corpus)))
    train_idx, test_idx = list(order[:n_train]), list(order[n_train:])

    per_dataset = {int(i): _collect_samples(corpus[int(i)], int(i), alpha, rng_seed)
                   for i in order}

    models = []
    cost_r2_train, cost_r2_holdout, utility_r2_train = {}, {}, {}
    holdout_utility_pairs = []
    for algorithm in ALGORITHMS:
        def pick(indices):
            return [s for i in indices for s in per_dataset[int(i)]
                    if s["algorithm"] == algorithm]

        train_samples, test_samples = pick(train_idx), pick(test_idx)
        cost_model = train_model(
            "cost", algorithm,
            [(s["cost_features"], s["wall_clock"]) for s in train_samples])
        utility_model = train_model(
            "utility", algorithm,
            [(s["mfv"], s["agreement"]) for s in train_samples])
        models.extend([cost_model, utility_model])
        cost_r2_train[algorithm] = cost_model.training_r2
        utility_r2_train[algorithm] = utility_model.training_r2
        cost_pred = [predict(cost_model, s["cost_features"]) for s in test_samples]
        cost_true = [s["wall_clock"] for s in test_samples]
        cost_r2_holdout[algorithm] = _r_squared(np.array(cost_true), np.array(cost_pred))
        holdout_utility_pairs.extend(
            (predict(utility_model, s["mfv"]), s["agreement"]) for s in test_samples)

    from scipy.stats import spearmanr
    predicted, actual = zip(*holdout_utility_pairs)
    spearman = float(spearmanr(predicted, actual).statistic)

    bundle = ModelBundle(models)
    report = TrainingReport(
        train_dataset_indices=[int(i) for i in train_idx],
        test_dataset_indices=[int(i) for i in test_idx],
        cost_r2_train=cost_r2_train,
        cost_r2_holdout=cost_r2_holdout,
        utility_r2_train=utility_r2_train,
        utility_spearman_holdout=spearman,
    )
    return bundle, report
