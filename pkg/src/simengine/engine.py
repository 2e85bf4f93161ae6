# src/simengine/engine.py

import logging
import time
from typing import Dict, List, Mapping, Optional

from tqdm.auto import tqdm

from src.appgraph.graph import ApplicationGraph
from src.appgraph.workload import FrameArrivalTrace
from src.common.exceptions import ILSchedError, NoCapablePe, SchedulerError, UnknownApp
from src.platforms.architecture import ArchitectureGraph
from src.simengine.report import SimReport
from src.simengine.scheduler import SchedulerInterface
from src.simengine.state import EventKind, SimState, dispatch, ready_tasks


class SimulationEngine:
    """
    Streams the frames of a trace through their DAGs on one platform,
    calling the scheduler once per task instance when it becomes ready.
    """

    def __init__(
        self,
        arch: ArchitectureGraph,
        apps: Mapping[str, ApplicationGraph],
        trace: FrameArrivalTrace,
        scheduler: SchedulerInterface,
        noise_pct: float = 0.0,
        seed: int = 0,
        progress: bool = False,
    ):
        self.arch = arch
        self.apps = dict(apps)
        self.trace = trace
        self.scheduler = scheduler
        self.noise_pct = noise_pct
        self.seed = seed
        self.progress = progress
        self.logger = logging.getLogger(self.__class__.__name__)

        self.state: Optional[SimState] = None
        self.decision_ns: List[int] = []

    def _validate_inputs(self) -> None:
        missing = sorted(set(self.trace.apps) - set(self.apps))
        if missing:
            raise UnknownApp(f"Trace references apps that are not loaded: {missing}")
        for name in self.trace.apps:
            for task_type in self.apps[name].task_types:
                if not self.arch.capable_pes(task_type):
                    raise NoCapablePe(
                        f"No PE on platform '{self.arch.name}' supports task type "
                        f"'{task_type}' (app '{name}')"
                    )

    def _setup_state(self) -> None:
        used = {name: self.apps[name] for name in self.trace.apps}
        self.state = SimState(self.arch, used, noise_pct=self.noise_pct, seed=self.seed)
        for arrival in self.trace:
            self.state.push_event(
                arrival.time_us, EventKind.ARRIVAL, (arrival.frame_id, arrival.app)
            )
        self.scheduler.reset(self.state)
        self.decision_ns = []

    def _schedule_ready(self, pbar) -> None:
        state = self.state
        while state.ready_set:
            ready = ready_tasks(state)
            t0 = time.perf_counter_ns()
            try:
                task, pe_id = self.scheduler.next_assignment(state, ready)
            except ILSchedError:
                raise
            except Exception as e:
                raise SchedulerError(
                    f"Scheduler '{self.scheduler.name}' failed at t={state.now:.3f}: {e}"
                ) from e
            self.decision_ns.append(time.perf_counter_ns() - t0)
            if task not in ready:
                raise SchedulerError(
                    f"Scheduler '{self.scheduler.name}' returned task {task.key} outside the ready set"
                )
            record = dispatch(state, task, int(pe_id))
            self.logger.debug(
                f"t={state.now:.3f} frame {task.frame_id} task {task.task_id} "
                f"({task.task_type}) -> PE {record.pe_id} start {record.start:.3f} finish {record.finish:.3f}"
            )
            pbar.update(1)

    def _run_event_loop(self) -> None:
        state = self.state
        total = sum(self.apps[a.app].num_tasks for a in self.trace)
        with tqdm(
            total=total,
            desc=f"Simulating ({self.scheduler.name})",
            unit="task",
            disable=not self.progress,
        ) as pbar:
            while state.event_queue:
                batch = state.pop_simultaneous_events()
                state.advance_to(batch[0].time)
                for event in batch:
                    if event.kind == EventKind.COMPLETION:
                        frame_id, task_id = event.payload
                        state.complete_task(frame_id, task_id)
                    else:
                        frame_id, app_name = event.payload
                        state.admit_frame(frame_id, app_name, event.time)
                self._schedule_ready(pbar)

    def _calculate_results(self) -> SimReport:
        return SimReport.from_state(
            self.state,
            scheduler=self.scheduler.name,
            decision_ns=self.decision_ns,
            noise_pct=self.noise_pct,
            seed=self.seed,
            fallbacks=self.scheduler.fallback_count,
        )

    def run(self) -> SimReport:
        self.logger.info(
            f"===== Starting simulation: {len(self.trace)} frames on {self.arch.name} "
            f"with '{self.scheduler.name}' (noise {self.noise_pct}, seed {self.seed}) ====="
        )
        self._validate_inputs()
        self._setup_state()
        self._run_event_loop()
        report = self._calculate_results()
        self.logger.info(
            f"Simulation finished: avg latency {report.avg_latency:.2f} µs, "
            f"avg energy {report.avg_energy:.2f} µJ, {report.decisions} decisions"
        )
        return report


def run_simulation(
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    trace: FrameArrivalTrace,
    scheduler: SchedulerInterface,
    noise_pct: float = 0.0,
    seed: int = 0,
    progress: bool = False,
) -> SimReport:
    return SimulationEngine(
        arch, apps, trace, scheduler, noise_pct=noise_pct, seed=seed, progress=progress
    ).run()
