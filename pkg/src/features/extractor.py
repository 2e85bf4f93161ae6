# src/features/extractor.py

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.common.exceptions import SchemaMismatch, TaskNotReady
from src.features.schema import SENTINEL, FeatureSchema
from src.platforms.architecture import ArchitectureGraph
from src.simengine.state import SimState, TaskInstance


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        if self.values.shape != (self.schema.length,):
            raise SchemaMismatch(
                f"Vector of shape {self.values.shape} does not match schema length {self.schema.length}"
            )
        if np.isnan(self.values).any():
            raise SchemaMismatch("Feature vector contains NaN")

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.schema.names, self.values.tolist()))


def select_predecessors(preds: Sequence[Tuple[int, float]], slots: int) -> List[Tuple[int, float]]:
    """The ``slots`` predecessors with the largest volume, ties by lower id."""
    return sorted(preds, key=lambda p: (-p[1], p[0]))[:slots]


class FeatureExtractor:
    """
    Encodes (state, ready task) under one schema. Clusters are matched by
    name, so a schema built on one platform can read states of another;
    clusters missing on the current platform read as the sentinel.
    """

    def __init__(self, schema: FeatureSchema, exclude_groups: Sequence[str] = ()):
        self.schema = schema
        self.exclude_groups = tuple(exclude_groups)
        self._mask = np.array(schema.masked_indices(self.exclude_groups), dtype=int)
        self._arch: Optional[ArchitectureGraph] = None
        self._cluster_map: List[Optional[int]] = []
        self._schema_cluster_of: Dict[int, float] = {}
        self._static_cache: Dict[Tuple[str, int], np.ndarray] = {}
        self.logger = logging.getLogger(self.__class__.__name__)

    def _bind(self, arch: ArchitectureGraph) -> None:
        if self._arch is arch:
            return
        self._arch = arch
        self._cluster_map = []
        for name in self.schema.cluster_names:
            cluster = arch.cluster_by_name(name)
            self._cluster_map.append(None if cluster is None else cluster.id)
        index = {name: float(i) for i, name in enumerate(self.schema.cluster_names)}
        self._schema_cluster_of = {
            c.id: index.get(c.name, SENTINEL) for c in arch.clusters
        }
        self._static_cache = {}
        missing = [n for n, c in zip(self.schema.cluster_names, self._cluster_map) if c is None]
        if missing:
            self.logger.debug(f"Clusters {missing} absent on '{arch.name}', encoded as sentinel")

    def _static(self, state: SimState, task: TaskInstance) -> np.ndarray:
        key = (task.app_name, task.task_id)
        cached = self._static_cache.get(key)
        if cached is not None:
            return cached
        arch = state.arch
        app = state.app_of(task)
        node = app.node(task.task_id)
        values: List[float] = [
            float(task.task_id),
            float(task.app_id),
            float(app.downward_depths()[task.task_id]),
        ]
        for cid in self._cluster_map:
            v = None if cid is None else arch.cluster_exec_time(cid, task.task_type)
            values.append(SENTINEL if v is None else float(v))
        for cid in self._cluster_map:
            v = None if cid is None else arch.cluster_power(cid, task.task_type)
            values.append(SENTINEL if v is None else float(v))
        chosen = select_predecessors(node.predecessors, self.schema.pred_slots)
        values += [float(p) for p, _ in chosen]
        values += [SENTINEL] * (self.schema.pred_slots - len(chosen))
        values.append(float(app.num_tasks))
        vec = np.asarray(values, dtype=float)
        self._static_cache[key] = vec
        return vec

    def _dynamic(self, state: SimState, task: TaskInstance, order: int) -> np.ndarray:
        arch = state.arch
        values: List[float] = [float(order)]
        for cid in self._cluster_map:
            if cid is None:
                values.append(SENTINEL)
                continue
            offset = min(state.pe_ready_time[pe] for pe in arch.clusters[cid].pe_ids) - state.now
            values.append(max(offset, 0.0))
        by_id = {r.task_id: r for r in task.preds}
        chosen = select_predecessors(
            [(r.task_id, r.volume) for r in task.preds], self.schema.pred_slots
        )
        pad = [SENTINEL] * (self.schema.pred_slots - len(chosen))
        values += [self._schema_cluster_of[arch.pes[by_id[p].pe_id].cluster_id] for p, _ in chosen] + pad
        values += [float(v) for _, v in chosen] + pad
        return np.asarray(values, dtype=float)

    def extract(self, state: SimState, task: TaskInstance) -> FeatureVector:
        try:
            order = state.ready_set.index(task)
        except ValueError:
            raise TaskNotReady(f"Task {task.key} is not in the ready set") from None
        self._bind(state.arch)
        values = np.concatenate([self._static(state, task), self._dynamic(state, task, order)])
        if self._mask.size:
            values[self._mask] = 0.0
        return FeatureVector(values, self.schema)


def extract(
    state: SimState,
    task: TaskInstance,
    schema: FeatureSchema,
    exclude_groups: Sequence[str] = (),
) -> FeatureVector:
    return FeatureExtractor(schema, exclude_groups).extract(state, task)
