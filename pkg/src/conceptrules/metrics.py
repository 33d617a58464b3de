"""Rank-based ROC AUC."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, UndefinedMetricError


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank span."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC of binary ``labels`` given real ``scores``.

    Tied score pairs contribute 0.5.  Raises when only one class is present.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ShapeError("scores and labels differ in length: %d vs %d"
                         % (scores.size, labels.size))
    if scores.size == 0:
        raise UndefinedMetricError("ROC AUC is undefined on empty input")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC AUC needs both classes present")
    ranks = _average_ranks(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def macro_roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Macro one-vs-rest average over the columns of an (n, o) score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim == 1:
        return roc_auc(scores, labels)
    aucs = [roc_auc(scores[:, j], (labels == j).astype(int))
            for j in range(scores.shape[1])]
    return float(np.mean(aucs))
