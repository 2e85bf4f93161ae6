# tests/conftest.py

import os
import sys
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import pytest

# This path manipulation allows the src.* imports below to work without an install.
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.appgraph.graph import ApplicationGraph, TaskNode
from src.platforms.loader import builtin_platform, load_platform
from src.simengine.scheduler import SchedulerInterface
from src.simengine.state import SimState, dispatch


def platform_document(
    clusters: Sequence[Tuple[str, int, Mapping[str, Tuple[float, float]]]],
    intra: float = 0.5,
    inter: float = 1.0,
    name: str = "toy",
) -> Dict:
    """clusters: (name, PE count, {task type: (exec µs, power mW)})."""
    task_types = sorted({t for _, _, profile in clusters for t in profile})
    doc_clusters, pes = [], []
    for cid, (cname, count, profile) in enumerate(clusters):
        ids = list(range(len(pes), len(pes) + count))
        doc_clusters.append({"id": cid, "name": cname, "pe_ids": ids})
        for pe_id in ids:
            pes.append(
                {
                    "id": pe_id,
                    "cluster_id": cid,
                    "exec_time": {t: v[0] for t, v in profile.items()},
                    "power": {t: v[1] for t, v in profile.items()},
                }
            )
    return {
        "name": name,
        "task_types": task_types,
        "clusters": doc_clusters,
        "pes": pes,
        "link_rates": {"intra_cluster": intra, "inter_cluster": inter},
    }


def make_platform(clusters, **kwargs):
    return load_platform(platform_document(clusters, **kwargs))


def make_app(
    types: Mapping[int, str],
    edges: Iterable[Tuple[int, int, float]] = (),
    name: str = "toy-app",
    app_id: int = 0,
) -> ApplicationGraph:
    preds: Dict[int, List[Tuple[int, float]]] = {tid: [] for tid in types}
    for src, dst, volume in edges:
        preds[dst].append((src, float(volume)))
    return ApplicationGraph(
        app_id=app_id,
        name=name,
        nodes=tuple(
            TaskNode(id=tid, task_type=types[tid], predecessors=tuple(sorted(preds[tid])), app_id=app_id)
            for tid in sorted(types)
        ),
    )


class FixedScheduler(SchedulerInterface):
    """Sends every task id to a pinned PE, oldest ready task first."""

    name = "fixed"

    def __init__(self, mapping: Mapping[int, int]):
        super().__init__()
        self.mapping = dict(mapping)

    def decide(self, state, task) -> int:
        return self.mapping[task.task_id]


@pytest.fixture
def toy_arch():
    """Two LITTLE PEs running a and b, two accelerator PEs running only b."""
    return make_platform(
        [
            ("LITTLE", 2, {"a": (10.0, 100.0), "b": (20.0, 100.0)}),
            ("ACC", 2, {"b": (4.0, 300.0)}),
        ]
    )


@pytest.fixture
def fig1_app():
    """Seven tasks: 1 -> 2 -> {3, 4, 5} -> 6 -> 7."""
    return make_app(
        {1: "a", 2: "a", 3: "b", 4: "b", 5: "a", 6: "b", 7: "a"},
        [(1, 2, 4), (2, 3, 2), (2, 4, 2), (2, 5, 2), (3, 6, 1), (4, 6, 1), (5, 6, 1), (6, 7, 8)],
        name="fig1",
    )


@pytest.fixture(scope="session")
def g1():
    return builtin_platform("G1")


@pytest.fixture
def mid_run_state(toy_arch, fig1_app):
    """
    Frame 0 of fig1 at t=22: task 1 ran on PE 0 (0-10), task 2 on PE 1
    (12-22), tasks 3 and 4 went to the accelerators (24-28). Task 5 is the
    only ready task.
    """
    state = SimState(toy_arch, {fig1_app.name: fig1_app})
    state.admit_frame(0, fig1_app.name, 0.0)
    for at, pe_ids in ((10.0, {1: 0}), (22.0, {2: 1})):
        for task in list(state.ready_set):
            dispatch(state, task, pe_ids[task.task_id])
        state.advance_to(at)
        state.complete_task(0, next(iter(pe_ids)))
    for task in list(state.ready_set):
        if task.task_id in (3, 4):
            dispatch(state, task, task.task_id - 1)
    return state
