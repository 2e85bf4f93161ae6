# src/simengine/state.py

import heapq
import logging
from bisect import insort
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Deque, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.appgraph.graph import ApplicationGraph
from src.common.exceptions import (
    TaskNotReady,
    UnknownApp,
    UnsupportedTask,
    ValidationError,
)
from src.platforms.architecture import ArchitectureGraph, comm_latency

logger = logging.getLogger(__name__)

NOISE_CLIP_SIGMA = 3.0
NOISE_FLOOR = 0.01


class EventKind(IntEnum):
    # completions are handled before arrivals at equal timestamps
    COMPLETION = 0
    ARRIVAL = 1


class TaskStatus(str, Enum):
    PENDING = "pending"
    READY = "ready"
    RUNNING = "running"
    DONE = "done"


@dataclass(order=True)
class Event:
    time: float
    kind: int
    seq: int
    payload: Tuple = field(compare=False, default=())


@dataclass(frozen=True)
class PredRecord:
    task_id: int
    pe_id: int
    finish_time: float
    volume: float


@dataclass(frozen=True)
class TaskInstance:
    frame_id: int
    task_id: int
    app_id: int
    app_name: str
    task_type: str
    ready_time: float
    preds: Tuple[PredRecord, ...] = ()

    @property
    def key(self) -> Tuple[int, int]:
        return (self.frame_id, self.task_id)

    @property
    def sort_key(self) -> Tuple[float, int, int]:
        return (self.ready_time, self.frame_id, self.task_id)


@dataclass(frozen=True)
class TaskRecord:
    frame_id: int
    app: str
    task_id: int
    task_type: str
    pe_id: int
    cluster_id: int
    ready_time: float
    comm_delay: float
    start: float
    finish: float
    exec_time: float
    energy_uj: float


@dataclass
class FrameState:
    frame_id: int
    app: ApplicationGraph
    arrival_time: float
    status: Dict[int, TaskStatus]
    pending_preds: Dict[int, int]
    finish_pe: Dict[int, int] = field(default_factory=dict)
    finish_time: Dict[int, float] = field(default_factory=dict)
    energy_uj: float = 0.0
    done: int = 0

    @property
    def complete(self) -> bool:
        return self.done == self.app.num_tasks


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    app: str
    arrival_us: float
    completion_us: float
    latency_us: float
    energy_uj: float


class SimState:
    """
    Live simulator state. Schedulers and the feature extractor read it;
    only the engine (through ``dispatch`` and the event helpers) mutates it.
    """

    def __init__(
        self,
        arch: ArchitectureGraph,
        apps: Mapping[str, ApplicationGraph],
        noise_pct: float = 0.0,
        seed: int = 0,
    ):
        if noise_pct < 0:
            raise ValidationError("Invalid simulation setup", [f"noise_pct must be >= 0, got {noise_pct}"])
        self.arch = arch
        self.apps: Dict[str, ApplicationGraph] = dict(apps)
        self.noise_pct = float(noise_pct)
        self.rng = np.random.default_rng(seed)
        self.now = 0.0
        self.event_queue: List[Event] = []
        self.pe_ready_time: List[float] = [0.0] * arch.num_pes
        self.pe_queue: List[Deque[Tuple[Tuple[int, int], float]]] = [
            deque() for _ in range(arch.num_pes)
        ]
        self.ready_set: List[TaskInstance] = []
        self.inflight: Dict[int, FrameState] = {}
        self.task_log: List[TaskRecord] = []
        self.completed_frames: List[FrameRecord] = []
        # bumped whenever events change the ready set
        self.epoch = 0
        self._seq = 0

    # --- events ---

    def push_event(self, time: float, kind: EventKind, payload: Tuple = ()) -> None:
        self._seq += 1
        heapq.heappush(self.event_queue, Event(float(time), int(kind), self._seq, payload))

    def pop_simultaneous_events(self) -> List[Event]:
        if not self.event_queue:
            return []
        t = self.event_queue[0].time
        batch = []
        while self.event_queue and self.event_queue[0].time == t:
            batch.append(heapq.heappop(self.event_queue))
        return batch

    def advance_to(self, time: float) -> None:
        if time < self.now:
            raise ValueError(f"Simulated time cannot go backwards ({time} < {self.now})")
        self.now = float(time)
        for queue in self.pe_queue:
            while queue and queue[0][1] <= self.now:
                queue.popleft()

    # --- frames and tasks ---

    def app_of(self, task: TaskInstance) -> ApplicationGraph:
        return self.apps[task.app_name]

    def admit_frame(self, frame_id: int, app_name: str, arrival_time: float) -> FrameState:
        if app_name not in self.apps:
            raise UnknownApp(f"Frame {frame_id} references unloaded app '{app_name}'")
        app = self.apps[app_name]
        frame = FrameState(
            frame_id=frame_id,
            app=app,
            arrival_time=float(arrival_time),
            status={n.id: TaskStatus.PENDING for n in app.nodes},
            pending_preds={n.id: len(n.predecessors) for n in app.nodes},
        )
        self.inflight[frame_id] = frame
        for tid in app.sources():
            self._make_ready(frame, tid, float(arrival_time))
        self.epoch += 1
        return frame

    def _make_ready(self, frame: FrameState, task_id: int, ready_time: float) -> None:
        node = frame.app.node(task_id)
        preds = tuple(
            PredRecord(p, frame.finish_pe[p], frame.finish_time[p], float(v))
            for p, v in node.predecessors
        )
        instance = TaskInstance(
            frame_id=frame.frame_id,
            task_id=task_id,
            app_id=frame.app.app_id,
            app_name=frame.app.name,
            task_type=node.task_type,
            ready_time=ready_time,
            preds=preds,
        )
        frame.status[task_id] = TaskStatus.READY
        insort(self.ready_set, instance, key=lambda t: t.sort_key)

    def complete_task(self, frame_id: int, task_id: int) -> Optional[FrameRecord]:
        """Marks a running task done, releasing successors; returns the frame record when the frame finishes."""
        frame = self.inflight[frame_id]
        frame.status[task_id] = TaskStatus.DONE
        frame.done += 1
        for succ, _ in frame.app.successors(task_id):
            frame.pending_preds[succ] -= 1
            if frame.pending_preds[succ] == 0:
                ready_at = max(frame.finish_time[p] for p, _ in frame.app.node(succ).predecessors)
                self._make_ready(frame, succ, ready_at)
        self.epoch += 1
        if not frame.complete:
            return None
        completion = max(frame.finish_time.values())
        record = FrameRecord(
            frame_id=frame_id,
            app=frame.app.name,
            arrival_us=frame.arrival_time,
            completion_us=completion,
            latency_us=completion - frame.arrival_time,
            energy_uj=frame.energy_uj,
        )
        self.completed_frames.append(record)
        del self.inflight[frame_id]
        return record

    def is_ready(self, task: TaskInstance) -> bool:
        frame = self.inflight.get(task.frame_id)
        return frame is not None and frame.status.get(task.task_id) is TaskStatus.READY

    # --- cost model shared with the oracles ---

    def comm_delay(self, task: TaskInstance, pe_id: int) -> float:
        return max(
            (comm_latency(self.arch, r.pe_id, pe_id, r.volume) for r in task.preds),
            default=0.0,
        )

    def earliest_start(
        self, task: TaskInstance, pe_id: int, pe_ready_time: Optional[Sequence[float]] = None
    ) -> float:
        ready = self.pe_ready_time if pe_ready_time is None else pe_ready_time
        return max(ready[pe_id], task.ready_time + self.comm_delay(task, pe_id))

    def noise_factor(self) -> float:
        if self.noise_pct == 0:
            return 1.0
        z = float(np.clip(self.rng.standard_normal(), -NOISE_CLIP_SIGMA, NOISE_CLIP_SIGMA))
        return max(1.0 + self.noise_pct * z, NOISE_FLOOR)


def ready_tasks(state: SimState) -> List[TaskInstance]:
    """Ready, unassigned tasks ordered by (ready_time, frame_id, task_id)."""
    return list(state.ready_set)


def dispatch(state: SimState, task: TaskInstance, pe_id: int) -> TaskRecord:
    """
    Assigns ``task`` to ``pe_id``: the task starts once the PE is free and
    all predecessor outputs have arrived, and its completion is enqueued.
    """
    arch = state.arch
    pe = arch.pe(pe_id)
    if not pe.supports(task.task_type):
        raise UnsupportedTask(
            f"PE {pe_id} ({arch.clusters[pe.cluster_id].name}) cannot run task type '{task.task_type}'"
        )
    if not state.is_ready(task):
        raise TaskNotReady(f"Task {task.key} is not in the ready set")

    comm = state.comm_delay(task, pe_id)
    start = max(state.pe_ready_time[pe_id], task.ready_time + comm)
    exec_time = pe.exec_time[task.task_type] * state.noise_factor()
    finish = start + exec_time
    energy_uj = exec_time * pe.power[task.task_type] / 1000.0

    state.ready_set.remove(task)
    state.pe_ready_time[pe_id] = finish
    if start > state.now:
        state.pe_queue[pe_id].append((task.key, start))

    frame = state.inflight[task.frame_id]
    frame.status[task.task_id] = TaskStatus.RUNNING
    frame.finish_pe[task.task_id] = pe_id
    frame.finish_time[task.task_id] = finish
    frame.energy_uj += energy_uj
    state.push_event(finish, EventKind.COMPLETION, task.key)

    record = TaskRecord(
        frame_id=task.frame_id,
        app=task.app_name,
        task_id=task.task_id,
        task_type=task.task_type,
        pe_id=pe_id,
        cluster_id=pe.cluster_id,
        ready_time=task.ready_time,
        comm_delay=comm,
        start=start,
        finish=finish,
        exec_time=exec_time,
        energy_uj=energy_uj,
    )
    state.task_log.append(record)
    return record
