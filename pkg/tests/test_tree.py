# tests/test_tree.py

import numpy as np
import pytest

from src.common.exceptions import EmptyDataset, SchemaMismatch
from src.ilsched.tree import LEAF, DecisionTree, accuracy, constant_tree, train_tree


@pytest.fixture
def threshold_data():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 3, size=(40, 6))
    X[:, 3] = np.r_[np.linspace(0, 4, 20), np.linspace(6, 10, 20)]
    y = (X[:, 3] > 5).astype(int)
    return X, y


class TestTrainTree:
    def test_single_class_is_a_leaf(self):
        tree = train_tree(np.ones((10, 3)), np.full(10, 7))
        assert tree.depth == 0 and tree.node_count == 1
        assert tree.predict([0.0, 5.0, 9.0]) == 7

    def test_finds_threshold_split(self, threshold_data):
        X, y = threshold_data
        tree = train_tree(X, y, max_depth=3, min_leaf=1)
        assert tree.feature[0] == 3
        assert tree.threshold[0] == pytest.approx(5.0)
        x = np.zeros(6)
        x[3] = 4.0
        assert tree.predict(x) == 0
        x[3] = 6.0
        assert tree.predict(x) == 1

    def test_fully_grown_tree_fits_distinct_rows(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 4))
        y = rng.integers(0, 3, size=60)
        tree = train_tree(X, y, max_depth=60, min_leaf=1)
        assert accuracy(tree, X, y) == 1.0

    def test_depth_limit(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 5))
        y = rng.integers(0, 4, size=200)
        assert train_tree(X, y, max_depth=3, min_leaf=1).depth <= 3

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(120, 4))
        y = rng.integers(0, 2, size=120)
        tree = train_tree(X, y, max_depth=20, min_leaf=7)
        leaves = tree.feature == LEAF
        assert (tree.counts[leaves].sum(axis=1) >= 7).all()

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(80, 5))
        y = rng.integers(0, 3, size=80)
        assert train_tree(X, y).to_dict() == train_tree(X, y).to_dict()

    def test_majority_tie_goes_to_smaller_label(self):
        tree = train_tree(np.ones((4, 1)), [2, 5, 5, 2])
        assert tree.predict([1.0]) == 2

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            train_tree(np.zeros((0, 3)), [])

    def test_shape_mismatch(self):
        with pytest.raises(SchemaMismatch):
            train_tree(np.zeros((4, 3)), [0, 1, 0])


class TestDecisionTree:
    def test_dict_round_trip(self, threshold_data):
        X, y = threshold_data
        tree = train_tree(X, y, min_leaf=1)
        again = DecisionTree.from_dict(tree.to_dict())
        np.testing.assert_array_equal(again.predict_many(X), tree.predict_many(X))
        assert again.depth == tree.depth

    def test_wrong_vector_length(self, threshold_data):
        X, y = threshold_data
        tree = train_tree(X, y)
        with pytest.raises(SchemaMismatch):
            tree.predict(np.zeros(5))

    def test_constant_tree(self):
        tree = constant_tree(3, n_features=4)
        assert tree.predict(np.arange(4.0)) == 3
        assert DecisionTree.from_dict(tree.to_dict()).predict(np.zeros(4)) == 3

    def test_accuracy_on_empty_split_is_nan(self):
        tree = constant_tree(0, 2)
        assert np.isnan(accuracy(tree, np.zeros((0, 2)), []))


def weighted_gini(y, mask):
    total = 0.0
    for part in (y[mask], y[~mask]):
        _, counts = np.unique(part, return_counts=True)
        p = counts / part.size
        total += part.size * (1.0 - np.sum(p * p))
    return total / y.size


def midpoints(values):
    v = np.unique(values)
    return (v[1:] + v[:-1]) / 2.0


def stump_correct(X, y):
    """Most rows a depth-1 tree can classify correctly."""
    if y.size == 0:
        return 0
    best = np.bincount(y).max()
    for j in range(X.shape[1]):
        for t in midpoints(X[:, j]):
            mask = X[:, j] <= t
            best = max(best, np.bincount(y[mask]).max() + np.bincount(y[~mask]).max())
    return int(best)


def depth2_optimum(X, y):
    best = stump_correct(X, y)
    for j in range(X.shape[1]):
        for t in midpoints(X[:, j]):
            mask = X[:, j] <= t
            best = max(best, stump_correct(X[mask], y[mask]) + stump_correct(X[~mask], y[~mask]))
    return best / y.size


class TestAgainstExhaustiveSearch:
    @pytest.fixture
    def noisy_rule(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(0, 1, size=(60, 2))
        y = np.where(X[:, 0] < 0.4, 0, np.where(X[:, 1] < 0.6, 1, 2))
        flip = rng.choice(60, size=8, replace=False)
        y[flip] = rng.integers(0, 3, size=8)
        return X, y

    def test_root_split_minimises_gini(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 3, size=50)
        tree = train_tree(X, y, max_depth=1, min_leaf=1)
        best = min(
            weighted_gini(y, X[:, j] <= t) for j in range(X.shape[1]) for t in midpoints(X[:, j])
        )
        chosen = weighted_gini(y, X[:, tree.feature[0]] <= tree.threshold[0])
        assert chosen == pytest.approx(best)

    def test_greedy_depth2_never_beats_optimum(self, noisy_rule):
        X, y = noisy_rule
        greedy = accuracy(train_tree(X, y, max_depth=2, min_leaf=1), X, y)
        assert greedy <= depth2_optimum(X, y) + 1e-12

    def test_deep_tree_reaches_depth2_optimum(self, noisy_rule):
        X, y = noisy_rule
        deep = accuracy(train_tree(X, y, max_depth=60, min_leaf=1), X, y)
        assert deep >= depth2_optimum(X, y)


class TestPinnedTree:
    X = np.column_stack([np.arange(1.0, 9.0), [5.0, 3.0, 8.0, 1.0, 7.0, 2.0, 6.0, 4.0]])
    y = [0, 0, 0, 1, 1, 1, 1, 2]

    def test_structure(self):
        tree = train_tree(self.X, self.y, max_depth=12, min_leaf=1)
        assert tree.feature.tolist() == [0, LEAF, 0, LEAF, LEAF]
        assert tree.threshold[0] == 3.5
        assert tree.threshold[2] == 7.5
        assert tree.depth == 2

    def test_predictions(self):
        tree = train_tree(self.X, self.y, max_depth=12, min_leaf=1)
        assert tree.predict([5.0, 0.0]) == 1
        assert tree.predict([8.0, 0.0]) == 2
        assert tree.predict([2.0, 100.0]) == 0
