# src/ilsched/tree.py

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from sklearn.metrics import accuracy_score

from src.common.exceptions import EmptyDataset, ParseError, SchemaMismatch

logger = logging.getLogger(__name__)

LEAF = -1
DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_LEAF = 4


@dataclass
class DecisionTree:
    """
    CART classification tree stored as flat node arrays. Internal nodes have
    ``feature >= 0``; samples with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    counts: np.ndarray  # (nodes, classes) training class counts
    classes: np.ndarray
    n_features: int
    max_depth: int
    min_leaf: int

    @property
    def node_count(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.node_count else 0

    def predict(self, x) -> int:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise SchemaMismatch(
                f"Tree expects {self.n_features} features, got shape {x.shape}"
            )
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return int(self.label[node])

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise SchemaMismatch(f"Tree expects {self.n_features} features, got shape {X.shape}")
        return np.array([self.predict(row) for row in X], dtype=int)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "label": self.label.tolist(),
            "counts": self.counts.tolist(),
            "classes": self.classes.tolist(),
            "n_features": self.n_features,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DecisionTree":
        try:
            n_classes = len(data["classes"])
            counts = np.asarray(data["counts"], dtype=int).reshape(-1, n_classes)
            return cls(
                feature=np.asarray(data["feature"], dtype=int),
                threshold=np.asarray(data["threshold"], dtype=float),
                left=np.asarray(data["left"], dtype=int),
                right=np.asarray(data["right"], dtype=int),
                label=np.asarray(data["label"], dtype=int),
                counts=counts,
                classes=np.asarray(data["classes"], dtype=int),
                n_features=int(data["n_features"]),
                max_depth=int(data["max_depth"]),
                min_leaf=int(data["min_leaf"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed tree document: {e!r}") from e


def constant_tree(label: int, n_features: int) -> DecisionTree:
    """Depth-0 tree answering ``label`` for every input."""
    return DecisionTree(
        feature=np.array([LEAF]),
        threshold=np.array([0.0]),
        left=np.array([LEAF]),
        right=np.array([LEAF]),
        label=np.array([label]),
        counts=np.zeros((1, 1), dtype=int),
        classes=np.array([label]),
        n_features=n_features,
        max_depth=0,
        min_leaf=1,
    )


def _gini(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    p = counts / totals[..., None]
    return 1.0 - np.sum(p * p, axis=-1)


def _best_split(X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int) -> Optional[Tuple[int, float, float]]:
    """Returns (feature, threshold, weighted impurity) of the best split, or None."""
    n = y.size
    onehot = np.eye(n_classes, dtype=float)[y]
    total = onehot.sum(axis=0)
    best: Optional[Tuple[float, int, float]] = None
    positions = np.arange(1, n)  # size of the left part
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        valid = (xs[1:] > xs[:-1]) & (positions >= min_leaf) & (n - positions >= min_leaf)
        if not valid.any():
            continue
        n_left = positions[valid].astype(float)
        lc = left_counts[valid]
        rc = total - lc
        impurity = (n_left * _gini(lc, n_left) + (n - n_left) * _gini(rc, n - n_left)) / n
        k = int(np.argmin(impurity))
        idx = np.flatnonzero(valid)[k]
        threshold = float((xs[idx] + xs[idx + 1]) / 2.0)
        candidate = (float(impurity[k]), j, threshold)
        if best is None or candidate[0] < best[0]:
            best = candidate
    if best is None:
        return None
    return best[1], best[2], best[0]


def train_tree(
    X,
    y,
    max_depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
) -> DecisionTree:
    """
    Greedy top-down induction with Gini impurity. A node becomes a leaf at
    ``max_depth``, when pure, when either side of every split would hold
    fewer than ``min_leaf`` rows, or when no split strictly lowers impurity.
    Leaves predict the majority class, ties to the smaller label.
    """
    X = np.asarray(X, dtype=float)
    y_raw = np.asarray(y, dtype=int)
    if y_raw.size == 0:
        raise EmptyDataset("Cannot train a tree on zero rows")
    if X.ndim != 2 or X.shape[0] != y_raw.size:
        raise SchemaMismatch(f"Feature matrix {X.shape} does not match {y_raw.size} labels")
    classes, y_idx = np.unique(y_raw, return_inverse=True)
    n_classes = classes.size
    min_leaf = max(int(min_leaf), 1)

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    label: List[int] = []
    counts: List[np.ndarray] = []

    def grow(rows: np.ndarray, depth: int) -> int:
        node = len(feature)
        node_counts = np.bincount(y_idx[rows], minlength=n_classes)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        label.append(int(classes[int(np.argmax(node_counts))]))
        counts.append(node_counts)

        if depth >= max_depth or np.count_nonzero(node_counts) <= 1 or rows.size < 2 * min_leaf:
            return node
        split = _best_split(X[rows], y_idx[rows], n_classes, min_leaf)
        if split is None:
            return node
        j, thr, impurity = split
        parent = float(_gini(node_counts[None, :].astype(float), np.array([float(rows.size)]))[0])
        if impurity >= parent - 1e-12:
            return node
        mask = X[rows, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = grow(rows[mask], depth + 1)
        right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(y_idx.size), 0)
    tree = DecisionTree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        label=np.asarray(label, dtype=int),
        counts=np.vstack(counts).astype(int),
        classes=classes.astype(int),
        n_features=X.shape[1],
        max_depth=max_depth,
        min_leaf=min_leaf,
    )
    logger.debug(
        f"Trained tree: {y_raw.size} rows, {n_classes} classes, {tree.node_count} nodes, depth {tree.depth}"
    )
    return tree


def accuracy(tree: DecisionTree, X, y) -> float:
    y = np.asarray(y, dtype=int)
    if y.size == 0:
        return float("nan")
    return float(accuracy_score(y, tree.predict_many(X)))
