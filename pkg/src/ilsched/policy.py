# src/ilsched/policy.py

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score
from sklearn.model_selection import train_test_split

from src.common.exceptions import EmptyDataset, InsufficientData, ParseError, SchemaMismatch
from src.common.fileio import read_json, write_json
from src.features.extractor import FeatureExtractor
from src.features.schema import FeatureSchema
from src.ilsched.dataset import Dataset
from src.ilsched.tree import (
    DEFAULT_MAX_DEPTH,
    DEFAULT_MIN_LEAF,
    DecisionTree,
    constant_tree,
    train_tree,
)
from src.oracle.etf import Objective, etf_decide
from src.simengine.scheduler import SchedulerInterface
from src.simengine.state import SimState, TaskInstance

logger = logging.getLogger(__name__)

FALLBACK_CLUSTER = "cluster"
FALLBACK_ETF = "etf"


@dataclass(frozen=True)
class PolicyDecision:
    pe_id: int
    cluster_id: int
    fallback: Optional[str] = None


def _mask(values: np.ndarray, indices: np.ndarray) -> np.ndarray:
    if indices.size == 0:
        return values
    out = np.array(values, dtype=float, copy=True)
    out[..., indices] = 0.0
    return out


def _resolve_in_cluster(state: SimState, task: TaskInstance, cluster_id: int, pe_index: int) -> PolicyDecision:
    """
    Maps a (cluster, PE-within-cluster) prediction to a PE that can run the
    task: the predicted PE, else the earliest-ready capable PE of the
    cluster, else the ETF-performance choice.
    """
    arch = state.arch
    cluster = arch.clusters[cluster_id]
    if 0 <= pe_index < len(cluster.pe_ids):
        pe_id = cluster.pe_ids[pe_index]
        if arch.pes[pe_id].supports(task.task_type):
            return PolicyDecision(pe_id, cluster_id)
    capable = [p for p in cluster.pe_ids if arch.pes[p].supports(task.task_type)]
    if capable:
        pe_id = min(capable, key=lambda p: (state.pe_ready_time[p], p))
        return PolicyDecision(pe_id, cluster_id, FALLBACK_CLUSTER)
    return _etf_fallback(state, task)


def _etf_fallback(state: SimState, task: TaskInstance) -> PolicyDecision:
    _, pe_id = etf_decide(state, [task], Objective.PERFORMANCE)
    return PolicyDecision(pe_id, state.arch.pes[pe_id].cluster_id, FALLBACK_ETF)


@dataclass
class HierarchicalPolicy:
    """
    Level 1 picks a cluster; level 2 picks a PE inside it with that
    cluster's own tree. Clusters are addressed by their index in the schema
    and matched by name on the platform being scheduled.
    """

    schema: FeatureSchema
    cluster_tree: DecisionTree
    pe_trees: Dict[int, DecisionTree]
    objective: Objective = Objective.PERFORMANCE
    exclude_groups: Tuple[str, ...] = ()
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.objective = Objective(self.objective)
        self.exclude_groups = tuple(self.exclude_groups)
        self._mask_idx = np.array(self.schema.masked_indices(self.exclude_groups), dtype=int)
        self._extractor = FeatureExtractor(self.schema, self.exclude_groups)

    @property
    def kind(self) -> str:
        return "hierarchical"

    def mask(self, values: np.ndarray) -> np.ndarray:
        return _mask(values, self._mask_idx)

    def predict_cluster(self, values: np.ndarray) -> int:
        return self.cluster_tree.predict(values)

    def predict_pe(self, cluster_label: int, values: np.ndarray) -> int:
        tree = self.pe_trees.get(cluster_label)
        return 0 if tree is None else tree.predict(values)

    def decide(self, state: SimState, task: TaskInstance) -> PolicyDecision:
        values = self._extractor.extract(state, task).values
        c_label = self.predict_cluster(values)
        cluster = state.arch.cluster_by_name(self.schema.cluster_names[c_label])
        if cluster is None:
            return _etf_fallback(state, task)
        return _resolve_in_cluster(state, task, cluster.id, self.predict_pe(c_label, values))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "schema": self.schema.to_dict(),
            "objective": self.objective.value,
            "exclude_groups": list(self.exclude_groups),
            "hyperparameters": dict(self.hyperparameters),
            "cluster_tree": self.cluster_tree.to_dict(),
            "pe_trees": {self.schema.cluster_names[c]: t.to_dict() for c, t in sorted(self.pe_trees.items())},
        }


@dataclass
class FlatPolicy:
    """Single tree predicting the global PE id directly."""

    schema: FeatureSchema
    tree: DecisionTree
    objective: Objective = Objective.PERFORMANCE
    exclude_groups: Tuple[str, ...] = ()
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.objective = Objective(self.objective)
        self.exclude_groups = tuple(self.exclude_groups)
        self._mask_idx = np.array(self.schema.masked_indices(self.exclude_groups), dtype=int)
        self._extractor = FeatureExtractor(self.schema, self.exclude_groups)

    @property
    def kind(self) -> str:
        return "flat"

    def mask(self, values: np.ndarray) -> np.ndarray:
        return _mask(values, self._mask_idx)

    def decide(self, state: SimState, task: TaskInstance) -> PolicyDecision:
        values = self._extractor.extract(state, task).values
        pe_id = self.tree.predict(values)
        arch = state.arch
        if not 0 <= pe_id < arch.num_pes:
            return _etf_fallback(state, task)
        pe = arch.pes[pe_id]
        cluster = arch.clusters[pe.cluster_id]
        return _resolve_in_cluster(state, task, cluster.id, cluster.pe_ids.index(pe_id))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "schema": self.schema.to_dict(),
            "objective": self.objective.value,
            "exclude_groups": list(self.exclude_groups),
            "hyperparameters": dict(self.hyperparameters),
            "tree": self.tree.to_dict(),
        }


Policy = Union[HierarchicalPolicy, FlatPolicy]


class PolicyScheduler(SchedulerInterface):
    """Runs a trained policy inside the simulator and counts fallbacks."""

    def __init__(self, policy: Policy, name: Optional[str] = None):
        super().__init__()
        self.policy = policy
        self.name = name or f"il-{policy.kind}-{policy.objective.value}"

    def decide(self, state: SimState, task: TaskInstance) -> int:
        decision = self.policy.decide(state, task)
        if decision.fallback is not None:
            self.fallback_count += 1
            self.logger.debug(
                f"Fallback '{decision.fallback}' for task {task.key} ({task.task_type}) -> PE {decision.pe_id}"
            )
        return decision.pe_id


# --- training ---


def train_hierarchical(
    dataset: Dataset,
    depth_cluster: int = DEFAULT_MAX_DEPTH,
    depth_pe: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    exclude_groups: Sequence[str] = (),
    strict: bool = True,
) -> HierarchicalPolicy:
    """
    Trains the cluster tree on every cluster-level row and one PE tree per
    multi-PE cluster on the PE-level rows labelled with that cluster. With
    ``strict`` a multi-PE cluster with fewer than ``min_leaf`` rows raises
    InsufficientData; otherwise it gets a constant policy.
    """
    if len(dataset) == 0:
        raise EmptyDataset("Cannot train a policy on an empty dataset")
    schema = dataset.schema
    mask_idx = np.array(schema.masked_indices(exclude_groups), dtype=int)
    X = _mask(dataset.features(), mask_idx)
    clusters = dataset.cluster_labels()
    pe_labels = dataset.pe_labels()

    cluster_mask = dataset.cluster_rows()
    if not cluster_mask.any():
        raise EmptyDataset("Dataset has no cluster-level rows")
    cluster_tree = train_tree(X[cluster_mask], clusters[cluster_mask], depth_cluster, min_leaf)

    pe_trees: Dict[int, DecisionTree] = {}
    for c, size in enumerate(schema.cluster_sizes):
        if size == 1:
            continue
        rows = dataset.pe_rows(c)
        n = int(rows.sum())
        if n < min_leaf:
            if strict:
                raise InsufficientData(schema.cluster_names[c], n, min_leaf)
            label = int(np.bincount(pe_labels[rows]).argmax()) if n else 0
            logger.warning(
                f"Cluster '{schema.cluster_names[c]}' has {n} PE-level rows; using constant PE {label}"
            )
            pe_trees[c] = constant_tree(label, schema.length)
            continue
        pe_trees[c] = train_tree(X[rows], pe_labels[rows], depth_pe, min_leaf)

    return HierarchicalPolicy(
        schema=schema,
        cluster_tree=cluster_tree,
        pe_trees=pe_trees,
        objective=Objective(dataset.objective),
        exclude_groups=tuple(exclude_groups),
        hyperparameters={"depth_cluster": depth_cluster, "depth_pe": depth_pe, "min_leaf": min_leaf},
    )


def train_flat(
    dataset: Dataset,
    depth: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    exclude_groups: Sequence[str] = (),
) -> FlatPolicy:
    if len(dataset) == 0:
        raise EmptyDataset("Cannot train a policy on an empty dataset")
    mask_idx = np.array(dataset.schema.masked_indices(exclude_groups), dtype=int)
    tree = train_tree(_mask(dataset.features(), mask_idx), dataset.pe_ids(), depth, min_leaf)
    return FlatPolicy(
        schema=dataset.schema,
        tree=tree,
        objective=Objective(dataset.objective),
        exclude_groups=tuple(exclude_groups),
        hyperparameters={"depth": depth, "min_leaf": min_leaf},
    )


# --- evaluation ---


def split_dataset(dataset: Dataset, holdout: float = 0.2, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Stratified on the cluster label when every class has two rows or more."""
    n = len(dataset)
    if n < 2 or holdout <= 0:
        return dataset, dataset.subset(np.zeros(n, dtype=bool))
    idx = np.arange(n)
    labels = dataset.cluster_labels()
    _, counts = np.unique(labels, return_counts=True)
    stratify = labels if counts.min() >= 2 and int(round(n * holdout)) >= counts.size else None
    train_idx, test_idx = train_test_split(idx, test_size=holdout, random_state=seed, stratify=stratify)
    train_mask = np.zeros(n, dtype=bool)
    train_mask[train_idx] = True
    return dataset.subset(train_mask), dataset.subset(~train_mask)


def _acc(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return float(accuracy_score(y_true, y_pred)) if len(y_true) else float("nan")


def evaluate_policies(
    hierarchical: HierarchicalPolicy,
    flat: Optional[FlatPolicy],
    train: Dataset,
    test: Dataset,
) -> pd.DataFrame:
    """Train/held-out accuracy per policy: cluster tree, each PE tree, composite, flat."""
    rows: List[Dict[str, Any]] = []
    schema = hierarchical.schema

    def predict_cluster(ds: Dataset) -> np.ndarray:
        X = hierarchical.mask(ds.features())
        return np.array([hierarchical.predict_cluster(x) for x in X], dtype=int)

    def predict_pe(ds: Dataset, c: int) -> np.ndarray:
        X = hierarchical.mask(ds.features())
        return np.array([hierarchical.predict_pe(c, x) for x in X], dtype=int)

    cluster_acc = {}
    for split, ds in (("train", train), ("test", test)):
        cluster_acc[split] = _acc(ds.cluster_labels(), predict_cluster(ds)) if len(ds) else float("nan")
    rows.append({"policy": "cluster", "rows": len(train), "train_accuracy": cluster_acc["train"], "test_accuracy": cluster_acc["test"]})

    for c, name in enumerate(schema.cluster_names):
        entry = {"policy": f"pe:{name}"}
        for split, ds in (("train", train), ("test", test)):
            sub = ds.subset(ds.cluster_labels() == c) if len(ds) else ds
            entry[f"{split}_accuracy"] = _acc(sub.pe_labels(), predict_pe(sub, c)) if len(sub) else float("nan")
            if split == "train":
                entry["rows"] = len(sub)
        rows.append(entry)

    entry = {"policy": "composite", "rows": len(train)}
    for split, ds in (("train", train), ("test", test)):
        if not len(ds):
            entry[f"{split}_accuracy"] = float("nan")
            continue
        c_pred = predict_cluster(ds)
        X = hierarchical.mask(ds.features())
        pe_pred = np.array([hierarchical.predict_pe(c, x) for c, x in zip(c_pred, X)], dtype=int)
        correct = (c_pred == ds.cluster_labels()) & (pe_pred == ds.pe_labels())
        entry[f"{split}_accuracy"] = float(correct.mean())
    rows.append(entry)

    if flat is not None:
        entry = {"policy": "flat", "rows": len(train)}
        for split, ds in (("train", train), ("test", test)):
            X = flat.mask(ds.features())
            entry[f"{split}_accuracy"] = _acc(ds.pe_ids(), flat.tree.predict_many(X)) if len(ds) else float("nan")
        rows.append(entry)

    return pd.DataFrame(rows, columns=["policy", "rows", "train_accuracy", "test_accuracy"])


# --- persistence ---


def save_policy(policy: Policy, path: str) -> str:
    return write_json(path, policy.to_dict())


def policy_from_dict(data: Dict[str, Any], expected_schema: Optional[FeatureSchema] = None) -> Policy:
    try:
        schema = FeatureSchema.from_dict(data["schema"])
    except ParseError as e:
        raise SchemaMismatch(f"Model schema is inconsistent: {e}") from e
    except KeyError as e:
        raise ParseError(f"Model document is missing {e}") from e
    if expected_schema is not None and expected_schema.schema_hash != schema.schema_hash:
        raise SchemaMismatch("Model was trained on a different feature schema")
    common = dict(
        schema=schema,
        objective=Objective(data.get("objective", "performance")),
        exclude_groups=tuple(data.get("exclude_groups", ())),
        hyperparameters=dict(data.get("hyperparameters", {})),
    )
    kind = data.get("kind")
    if kind == "hierarchical":
        index = {name: i for i, name in enumerate(schema.cluster_names)}
        return HierarchicalPolicy(
            cluster_tree=DecisionTree.from_dict(data["cluster_tree"]),
            pe_trees={index[name]: DecisionTree.from_dict(t) for name, t in data.get("pe_trees", {}).items()},
            **common,
        )
    if kind == "flat":
        return FlatPolicy(tree=DecisionTree.from_dict(data["tree"]), **common)
    raise ParseError(f"Unknown model kind {kind!r}")


def load_policy(path: str, expected_schema: Optional[FeatureSchema] = None) -> Policy:
    return policy_from_dict(read_json(path), expected_schema)


def model_size_kb(path: str) -> float:
    return os.path.getsize(path) / 1024.0
