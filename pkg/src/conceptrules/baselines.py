"""Interpretable baselines over concept truth degrees.

Both baselines consume the (n, k) degree matrix only: a one-vs-rest
logistic regression trained with the shared autodiff engine (BCE plus L2
penalty) and a small CART decision tree with Gini impurity.  Each exposes
its decision structure for complexity comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tensor
from .errors import ContractError, UndefinedMetricError
from .training import one_hot


class LogisticRegressionBaseline:
    """One-vs-rest logistic regression: sigmoid(X @ W + b) per class."""

    def __init__(self, l2: float = 1e-4, epochs: int = 400, lr: float = 0.1):
        self.l2 = l2
        self.epochs = epochs
        self.lr = lr
        self.weights: Optional[np.ndarray] = None
        self.bias: Optional[np.ndarray] = None

    def fit(self, degrees: np.ndarray, labels: np.ndarray) -> "LogisticRegressionBaseline":
        degrees = np.asarray(degrees, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        n_classes = int(labels.max()) + 1
        if n_classes < 2:
            raise UndefinedMetricError("need at least two classes to fit a classifier")
        targets = one_hot(labels, n_classes)
        w = Tensor(np.zeros((degrees.shape[1], n_classes)), requires_grad=True)
        b = Tensor(np.zeros(n_classes), requires_grad=True)
        x = Tensor(degrees)
        opt = Adam([w, b], lr=self.lr)
        for _ in range(self.epochs):
            probs = ad.sigmoid(x @ w + b)
            loss = ad.binary_cross_entropy(probs, targets) + self.l2 * (w * w).sum()
            opt.zero_grad()
            loss.backward()
            opt.step()
        self.weights = w.data.copy()
        self.bias = b.data.copy()
        return self

    def decision_function(self, degrees: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ContractError("baseline is not fitted")
        z = np.asarray(degrees, dtype=np.float64) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def predict(self, degrees: np.ndarray) -> np.ndarray:
        return self.decision_function(degrees).argmax(axis=1)

    def coefficients(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_TreeNode"] = None
    right: Optional["_TreeNode"] = None
    class_counts: Optional[np.ndarray] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


class DecisionTreeBaseline:
    """CART with Gini impurity, binary splits at midpoints, depth-limited."""

    def __init__(self, max_depth: int = 4, min_samples_split: int = 2):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.root: Optional[_TreeNode] = None
        self.n_classes: int = 0

    def fit(self, degrees: np.ndarray, labels: np.ndarray) -> "DecisionTreeBaseline":
        degrees = np.asarray(degrees, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        self.n_classes = int(labels.max()) + 1
        if self.n_classes < 2:
            raise UndefinedMetricError("need at least two classes to fit a classifier")
        self.root = self._grow(degrees, labels, depth=0)
        return self

    def _grow(self, x: np.ndarray, y: np.ndarray, depth: int) -> _TreeNode:
        counts = np.bincount(y, minlength=self.n_classes).astype(np.float64)
        node = _TreeNode(class_counts=counts)
        if (depth >= self.max_depth or y.size < self.min_samples_split
                or np.count_nonzero(counts) <= 1):
            return node
        best_gain, best_feat, best_thresh = 0.0, -1, 0.0
        parent_gini = _gini(counts)
        for feat in range(x.shape[1]):
            values = np.unique(x[:, feat])
            if values.size < 2:
                continue
            for thresh in (values[:-1] + values[1:]) / 2.0:
                mask = x[:, feat] <= thresh
                left = np.bincount(y[mask], minlength=self.n_classes).astype(np.float64)
                right = counts - left
                weighted = (left.sum() * _gini(left) + right.sum() * _gini(right)) / y.size
                gain = parent_gini - weighted
                if gain > best_gain + 1e-12:
                    best_gain, best_feat, best_thresh = gain, feat, float(thresh)
        if best_feat < 0:
            return node
        mask = x[:, best_feat] <= best_thresh
        node.feature = best_feat
        node.threshold = best_thresh
        node.left = self._grow(x[mask], y[mask], depth + 1)
        node.right = self._grow(x[~mask], y[~mask], depth + 1)
        return node

    def decision_function(self, degrees: np.ndarray) -> np.ndarray:
        if self.root is None:
            raise ContractError("baseline is not fitted")
        degrees = np.asarray(degrees, dtype=np.float64)
        out = np.zeros((degrees.shape[0], self.n_classes))
        for i, row in enumerate(degrees):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.class_counts / node.class_counts.sum()
        return out

    def predict(self, degrees: np.ndarray) -> np.ndarray:
        return self.decision_function(degrees).argmax(axis=1)

    def leaf_rules(self) -> list[dict]:
        """One record per leaf: threshold path, majority class and support."""
        rules = []

        def walk(node: _TreeNode, path: list[str]):
            if node.is_leaf:
                rules.append({
                    "path": list(path),
                    "class": int(node.class_counts.argmax()),
                    "support": int(node.class_counts.sum()),
                    "depth": len(path),
                })
                return
            walk(node.left, path + [f"c_{node.feature} <= {node.threshold:.4g}"])
            walk(node.right, path + [f"c_{node.feature} > {node.threshold:.4g}"])

        walk(self.root, [])
        return rules
