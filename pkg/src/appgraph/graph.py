# src/appgraph/graph.py

import heapq
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from src.common.exceptions import UnknownTask, ValidationError


@dataclass(frozen=True)
class TaskNode:
    id: int
    task_type: str
    predecessors: Tuple[Tuple[int, float], ...] = ()  # (task id, comm volume)
    app_id: int = 0

    @property
    def predecessor_ids(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.predecessors)


@dataclass(frozen=True)
class ApplicationGraph:
    """
    One application as a DAG of typed tasks. Construction does not validate
    (``validate_dag`` reports problems); helpers that need acyclicity raise
    ValidationError when it does not hold.
    """

    app_id: int
    name: str
    nodes: Tuple[TaskNode, ...]

    _index: Dict[int, TaskNode] = field(init=False, repr=False, compare=False)
    _successors: Dict[int, Tuple[Tuple[int, float], ...]] = field(
        init=False, repr=False, compare=False
    )
    _depth: Dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})
        succ: Dict[int, List[Tuple[int, float]]] = {n.id: [] for n in self.nodes}
        for node in self.nodes:
            for pred, volume in node.predecessors:
                if pred in succ:
                    succ[pred].append((node.id, volume))
        object.__setattr__(
            self, "_successors", {k: tuple(sorted(v)) for k, v in succ.items()}
        )
        object.__setattr__(self, "_depth", {})

    @property
    def num_tasks(self) -> int:
        return len(self.nodes)

    @property
    def task_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(self._index))

    @property
    def task_types(self) -> Tuple[str, ...]:
        return tuple(sorted({n.task_type for n in self.nodes}))

    def node(self, task_id: int) -> TaskNode:
        try:
            return self._index[task_id]
        except KeyError:
            raise UnknownTask(f"Task {task_id!r} is not part of app '{self.name}'") from None

    def successors(self, task_id: int) -> Tuple[Tuple[int, float], ...]:
        self.node(task_id)
        return self._successors[task_id]

    def sources(self) -> Tuple[int, ...]:
        return tuple(sorted(n.id for n in self.nodes if not n.predecessors))

    def terminals(self) -> Tuple[int, ...]:
        return tuple(sorted(n.id for n in self.nodes if not self._successors[n.id]))

    def topological_order(self) -> List[int]:
        """Kahn's order with the smallest ready id first."""
        indegree = {n.id: 0 for n in self.nodes}
        for node in self.nodes:
            for pred, _ in node.predecessors:
                if pred in indegree:
                    indegree[node.id] += 1
        heap = [tid for tid, deg in indegree.items() if deg == 0]
        heapq.heapify(heap)
        order: List[int] = []
        while heap:
            tid = heapq.heappop(heap)
            order.append(tid)
            for succ, _ in self._successors[tid]:
                indegree[succ] -= 1
                if indegree[succ] == 0:
                    heapq.heappush(heap, succ)
        if len(order) != len(self.nodes):
            raise ValidationError(f"App '{self.name}' is not acyclic")
        return order

    def downward_depths(self) -> Dict[int, int]:
        if not self._depth:
            depth: Dict[int, int] = {}
            for tid in reversed(self.topological_order()):
                succ = self._successors[tid]
                depth[tid] = 1 + max(depth[s] for s, _ in succ) if succ else 0
            self._depth.update(depth)
        return dict(self._depth)


def validate_dag(app: ApplicationGraph) -> List[str]:
    """Returns the list of violated invariants; an empty list means ok."""
    violations: List[str] = []
    seen = set()
    for node in app.nodes:
        if node.id in seen:
            violations.append(f"duplicate task id {node.id}")
        seen.add(node.id)
        for pred, volume in node.predecessors:
            if pred == node.id:
                violations.append(f"self-edge on task {node.id}")
            elif pred not in app._index:
                violations.append(f"task {node.id} references unknown predecessor {pred}")
            if volume < 0:
                violations.append(f"edge {pred}->{node.id} has negative volume {volume}")
        if node.app_id != app.app_id:
            violations.append(f"task {node.id} carries app id {node.app_id}, expected {app.app_id}")

    if not app.nodes:
        violations.append("application has no tasks")
        return violations

    try:
        app.topological_order()
    except ValidationError:
        violations.append("cycle detected")
        return violations

    if not app.sources():
        violations.append("no task without predecessors")
    if not app.terminals():
        violations.append("no terminal task")
    return violations


def downward_depth(app: ApplicationGraph, task_id: int) -> int:
    """Longest edge path from ``task_id`` to any terminal task."""
    app.node(task_id)
    return app.downward_depths()[task_id]
