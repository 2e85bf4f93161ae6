# src/oracle/etf.py

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from src.common.exceptions import NoCapablePe
from src.features.extractor import FeatureExtractor, FeatureVector
from src.simengine.scheduler import SchedulerInterface
from src.simengine.state import SimState, TaskInstance, dispatch

logger = logging.getLogger(__name__)


class Objective(str, Enum):
    PERFORMANCE = "performance"
    ENERGY = "energy"
    EDP = "edp"
    ED2P = "ed2p"


def assignment_cost(
    state: SimState,
    task: TaskInstance,
    pe_id: int,
    objective: Objective,
    pe_ready_time: Optional[Sequence[float]] = None,
) -> Tuple[float, float]:
    """
    Returns (objective cost, finish time) of running ``task`` on ``pe_id``
    next. Costs use nominal execution times.
    """
    arch = state.arch
    exec_time = arch.exec_time(pe_id, task.task_type)
    finish = state.earliest_start(task, pe_id, pe_ready_time) + exec_time
    if objective is Objective.PERFORMANCE:
        return finish, finish
    energy = exec_time * arch.power(pe_id, task.task_type)
    if objective is Objective.ENERGY:
        return energy, finish
    span = finish - task.ready_time
    if objective is Objective.EDP:
        return span * energy, finish
    return span * span * energy, finish


def etf_decide(
    state: SimState,
    ready: Sequence[TaskInstance],
    objective: Objective = Objective.PERFORMANCE,
    pe_ready_time: Optional[Sequence[float]] = None,
) -> Tuple[TaskInstance, int]:
    """
    Scans every (ready task, capable PE) pair and returns the one with the
    lowest cost. Ties go to the earlier finish, then the lower PE id, then
    the lower (frame id, task id).
    """
    objective = Objective(objective)
    best_key = None
    best: Optional[Tuple[TaskInstance, int]] = None
    for task in ready:
        capable = state.arch.capable_pes(task.task_type)
        if not capable:
            raise NoCapablePe(f"No PE supports task type '{task.task_type}'")
        for pe_id in capable:
            cost, finish = assignment_cost(state, task, pe_id, objective, pe_ready_time)
            key = (cost, finish, pe_id, task.frame_id, task.task_id)
            if best_key is None or key < best_key:
                best_key = key
                best = (task, pe_id)
    if best is None:
        raise ValueError("etf_decide called with an empty ready list")
    return best


class ETFScheduler(SchedulerInterface):
    """
    Earliest-task-first oracle. With ``reevaluate`` the pair scan is repeated
    after every dispatch; without it, all tasks ready at one instant are
    committed against the PE availability seen when the batch formed.
    """

    def __init__(self, objective: Objective = Objective.PERFORMANCE, reevaluate: bool = True):
        super().__init__()
        self.objective = Objective(objective)
        self.reevaluate = reevaluate
        self.name = f"etf-{self.objective.value}" + ("" if reevaluate else "-batch")
        self._batch_epoch = None
        self._batch: List[Tuple[TaskInstance, int]] = []

    def reset(self, state: SimState) -> None:
        super().reset(state)
        self._batch_epoch = None
        self._batch = []

    def decide(self, state: SimState, task: TaskInstance) -> int:
        return etf_decide(state, [task], self.objective)[1]

    def _plan_batch(self, state: SimState, ready: Sequence[TaskInstance]) -> None:
        snapshot = list(state.pe_ready_time)
        plan = []
        for task in ready:
            _, pe_id = etf_decide(state, [task], self.objective, snapshot)
            cost, finish = assignment_cost(state, task, pe_id, self.objective, snapshot)
            plan.append(((cost, finish, pe_id, task.frame_id, task.task_id), task, pe_id))
        plan.sort(key=lambda p: p[0])
        self._batch = [(task, pe_id) for _, task, pe_id in plan]
        self._batch_epoch = state.epoch

    def next_assignment(
        self, state: SimState, ready: Sequence[TaskInstance]
    ) -> Tuple[TaskInstance, int]:
        if self.reevaluate:
            return etf_decide(state, ready, self.objective)
        if self._batch_epoch != state.epoch or not self._batch:
            self._plan_batch(state, ready)
        return self._batch.pop(0)


@dataclass(frozen=True)
class OracleDecision:
    task: TaskInstance
    pe_id: int
    cluster_id: int
    features: Optional[FeatureVector]
    objective: Objective


class RecordingOracleScheduler(ETFScheduler):
    """ETF that snapshots the features of every decision before dispatch."""

    def __init__(
        self,
        extractor: FeatureExtractor,
        objective: Objective = Objective.PERFORMANCE,
        reevaluate: bool = True,
    ):
        super().__init__(objective, reevaluate)
        self.extractor = extractor
        self.decisions: List[OracleDecision] = []

    def next_assignment(
        self, state: SimState, ready: Sequence[TaskInstance]
    ) -> Tuple[TaskInstance, int]:
        task, pe_id = super().next_assignment(state, ready)
        self.decisions.append(
            OracleDecision(
                task=task,
                pe_id=pe_id,
                cluster_id=state.arch.pes[pe_id].cluster_id,
                features=self.extractor.extract(state, task),
                objective=self.objective,
            )
        )
        return task, pe_id


def oracle_schedule_step(
    state: SimState,
    objective: Objective = Objective.PERFORMANCE,
    extractor: Optional[FeatureExtractor] = None,
) -> List[OracleDecision]:
    """Drains the ready set with ETF, one dispatch per decision."""
    objective = Objective(objective)
    decisions: List[OracleDecision] = []
    while state.ready_set:
        task, pe_id = etf_decide(state, list(state.ready_set), objective)
        features = extractor.extract(state, task) if extractor is not None else None
        dispatch(state, task, pe_id)
        decisions.append(
            OracleDecision(task, pe_id, state.arch.pes[pe_id].cluster_id, features, objective)
        )
    return decisions
