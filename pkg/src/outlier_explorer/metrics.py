"""Precision/recall/F evaluation of predicted outlier scores against labels."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

DEFAULT_N_VALUES = (10, 13, 15, 17, 20)


def top_n_indices(scores, n_value: int) -> np.ndarray:
    """Indices of the N highest-scored points, ties broken by ascending index."""
    scores = np.asarray(scores, dtype=float)
    if not 1 <= n_value <= scores.shape[0]:
        raise ParameterError(
            f"N must be in [1, {scores.shape[0]}], got {n_value}")
    order = np.argsort(-scores, kind="stable")
    return order[:n_value]


def _checked_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape:
        raise ParameterError("scores and labels must have the same length")
    return scores, labels


def precision_at_n(scores, labels, n_value: int) -> float:
    """Fraction of the top-N scored points that are labeled outliers."""
    scores, labels = _checked_labels(scores, labels)
    top = top_n_indices(scores, n_value)
    return float(labels[top].sum()) / n_value


def recall_at_n(scores, labels, n_value: int) -> float:
    """Fraction of labeled outliers captured in the top-N scored points."""
    scores, labels = _checked_labels(scores, labels)
    outliers = int(labels.sum())
    if outliers < 1:
        raise ParameterError("labels contain no outliers")
    top = top_n_indices(scores, n_value)
    return float(labels[top].sum()) / outliers


def f_at_n(scores, labels, n_value: int) -> float:
    """Harmonic mean of precision and recall at N (0 when both are 0)."""
    p = precision_at_n(scores, labels, n_value)
    r = recall_at_n(scores, labels, n_value)
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def metric_table(scores, labels, n_values=DEFAULT_N_VALUES) -> dict[int, dict[str, float]]:
    """Precision/recall/F rows for each requested N that fits the dataset."""
    scores, labels = _checked_labels(scores, labels)
    table = {}
    for n_value in n_values:
        if not 1 <= n_value <= scores.shape[0]:
            continue
        table[int(n_value)] = {
            "precision": precision_at_n(scores, labels, n_value),
            "recall": recall_at_n(scores, labels, n_value),
            "f": f_at_n(scores, labels, n_value),
        }
    return table
