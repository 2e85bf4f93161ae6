# src/oracle/exact.py
"""
Branch-and-bound scheduler for one frame of one application. It explores
list schedules (task, PE) appended in precedence order under the same
start-time rule as the simulator, so its makespans are directly comparable
with a single-frame ETF run.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from src.appgraph.graph import ApplicationGraph
from src.appgraph.workload import FrameArrival, FrameArrivalTrace
from src.common.exceptions import InstanceTooLarge, NoCapablePe
from src.oracle.etf import ETFScheduler, Objective
from src.platforms.architecture import ArchitectureGraph, comm_latency
from src.simengine.engine import run_simulation

logger = logging.getLogger(__name__)

DEFAULT_MAX_TASKS = 12
DEFAULT_TIME_LIMIT = 60.0
CLOCK_CHECK_INTERVAL = 1024
EPS = 1e-9


@dataclass
class ExactResult:
    makespan: float
    assignment: Dict[int, int]
    starts: Dict[int, float]
    optimal: bool
    nodes: int
    etf_makespan: float
    elapsed_s: float = 0.0
    order: List[int] = field(default_factory=list)

    @property
    def etf_gap(self) -> float:
        """Relative excess of the ETF makespan over the best found."""
        return self.etf_makespan / self.makespan - 1.0 if self.makespan > 0 else 0.0


def single_frame_etf(app: ApplicationGraph, arch: ArchitectureGraph) -> Tuple[float, Dict[int, int], Dict[int, float]]:
    trace = FrameArrivalTrace((FrameArrival(0.0, app.name, 0),))
    report = run_simulation(arch, {app.name: app}, trace, ETFScheduler(Objective.PERFORMANCE))
    tasks = report.tasks
    assignment = {int(t): int(p) for t, p in zip(tasks["task_id"], tasks["pe_id"])}
    starts = {int(t): float(s) for t, s in zip(tasks["task_id"], tasks["start"])}
    return float(report.frames["latency_us"].iloc[0]), assignment, starts


def links_cluster_uniform(arch: ArchitectureGraph) -> bool:
    """True when link rates depend only on the cluster pair, making same-cluster PEs interchangeable."""
    seen: Dict[Tuple[int, int], float] = {}
    for src in arch.pes:
        for dst in arch.pes:
            if src.id == dst.id:
                continue
            key = (src.cluster_id, dst.cluster_id)
            rate = arch.latency_per_unit(src.id, dst.id)
            if seen.setdefault(key, rate) != rate:
                return False
    return True


class BranchAndBound:
    def __init__(
        self,
        app: ApplicationGraph,
        arch: ArchitectureGraph,
        time_limit: float,
        node_limit: Optional[int] = None,
    ):
        self.app = app
        self.arch = arch
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.logger = logging.getLogger(self.__class__.__name__)

        self.topo = app.topological_order()
        self.preds = {n.id: n.predecessors for n in app.nodes}
        self.pred_ids = {n.id: set(n.predecessor_ids) for n in app.nodes}
        self.capable: Dict[int, Tuple[int, ...]] = {}
        self.exec: Dict[int, Dict[int, float]] = {}
        for node in app.nodes:
            capable = arch.capable_pes(node.task_type)
            if not capable:
                raise NoCapablePe(f"No PE supports task type '{node.task_type}'")
            self.capable[node.id] = capable
            self.exec[node.id] = {p: arch.exec_time(p, node.task_type) for p in capable}
        self.min_exec = {t: min(e.values()) for t, e in self.exec.items()}
        self.bottom = {}
        for t in reversed(self.topo):
            succ = app.successors(t)
            self.bottom[t] = self.min_exec[t] + max((self.bottom[s] for s, _ in succ), default=0.0)
        self.symmetric = links_cluster_uniform(arch)

        self.finish: Dict[int, float] = {}
        self.start: Dict[int, float] = {}
        self.pe_of: Dict[int, int] = {}
        self.pe_ready = [0.0] * arch.num_pes
        self.used: Set[int] = set()
        self.remaining = {n.id: len(n.predecessors) for n in app.nodes}
        self.ready: Set[int] = {t for t, c in self.remaining.items() if c == 0}
        self.sequence: List[int] = []

        self.best = float("inf")
        self.best_assignment: Dict[int, int] = {}
        self.best_starts: Dict[int, float] = {}
        self.best_order: List[int] = []
        self.nodes = 0
        self.stopped = False
        self._deadline = 0.0

    def _lower_bound(self) -> float:
        lb = max(self.finish.values(), default=0.0)
        est: Dict[int, float] = {}
        for t in self.topo:
            if t in self.finish:
                continue
            e = min(self.pe_ready[p] for p in self.capable[t])
            for p, _ in self.preds[t]:
                e = max(e, self.finish[p] if p in self.finish else est[p] + self.min_exec[p])
            est[t] = e
            lb = max(lb, e + self.bottom[t])
        load = (sum(self.pe_ready) + sum(self.min_exec[t] for t in est)) / self.arch.num_pes
        return max(lb, load)

    def _swap_dominated(self, last: Tuple[int, int, bool], task: int, pe: int) -> bool:
        # (u on q) then (t on p) with both orders feasible builds the same
        # schedule; keep only the order with the smaller task id first.
        u, q, u_first_use = last
        if pe == q or u in self.pred_ids[task] or task > u:
            return False
        if (
            self.symmetric
            and u_first_use
            and pe not in self.used
            and self.arch.pes[pe].cluster_id == self.arch.pes[q].cluster_id
        ):
            return False
        return True

    def _candidates(self, last) -> List[Tuple[float, int, int, float]]:
        out = []
        for t in sorted(self.ready):
            ready_time = max((self.finish[p] for p, _ in self.preds[t]), default=0.0)
            unused_clusters: Set[int] = set()
            for pe in self.capable[t]:
                if self.symmetric and pe not in self.used:
                    cid = self.arch.pes[pe].cluster_id
                    if cid in unused_clusters:
                        continue
                    unused_clusters.add(cid)
                if last is not None and self._swap_dominated(last, t, pe):
                    continue
                comm = max(
                    (comm_latency(self.arch, self.pe_of[p], pe, v) for p, v in self.preds[t]),
                    default=0.0,
                )
                start = max(self.pe_ready[pe], ready_time + comm)
                out.append((start + self.exec[t][pe], t, pe, start))
        out.sort()
        return out

    def _search(self, last) -> None:
        self.nodes += 1
        if self.nodes % CLOCK_CHECK_INTERVAL == 0 and time.perf_counter() > self._deadline:
            self.stopped = True
        if self.node_limit is not None and self.nodes >= self.node_limit:
            self.stopped = True
        if self.stopped:
            return
        if not self.ready:
            makespan = max(self.finish.values(), default=0.0)
            if makespan < self.best - EPS:
                self.best = makespan
                self.best_assignment = dict(self.pe_of)
                self.best_starts = dict(self.start)
                self.best_order = list(self.sequence)
            return
        if self._lower_bound() >= self.best - EPS:
            return

        for finish, t, pe, start in self._candidates(last):
            if finish >= self.best - EPS:
                continue
            first_use = pe not in self.used
            prev_ready = self.pe_ready[pe]
            self.finish[t], self.start[t], self.pe_of[t] = finish, start, pe
            self.pe_ready[pe] = finish
            self.used.add(pe)
            self.ready.discard(t)
            self.sequence.append(t)
            released = []
            for s, _ in self.app.successors(t):
                self.remaining[s] -= 1
                if self.remaining[s] == 0:
                    self.ready.add(s)
                    released.append(s)

            self._search((t, pe, first_use))

            for s, _ in self.app.successors(t):
                self.remaining[s] += 1
            for s in released:
                self.ready.discard(s)
            self.sequence.pop()
            self.ready.add(t)
            if first_use:
                self.used.discard(pe)
            self.pe_ready[pe] = prev_ready
            del self.finish[t], self.start[t], self.pe_of[t]
            if self.stopped:
                return

    def solve(self, upper_bound: float, assignment: Dict[int, int], starts: Dict[int, float]) -> bool:
        """Runs the search; returns True when it finished (optimum proven)."""
        self.best = upper_bound
        self.best_assignment = dict(assignment)
        self.best_starts = dict(starts)
        self.best_order = sorted(starts, key=lambda t: (starts[t], t))
        self._deadline = time.perf_counter() + self.time_limit
        self._search(None)
        return not self.stopped


def exact_schedule(
    app: ApplicationGraph,
    arch: ArchitectureGraph,
    time_limit: float = DEFAULT_TIME_LIMIT,
    max_tasks: int = DEFAULT_MAX_TASKS,
    anytime: bool = False,
    node_limit: Optional[int] = None,
) -> ExactResult:
    """
    Minimum single-frame makespan of ``app`` on ``arch``. The ETF schedule
    is the initial incumbent; ``optimal`` is False when the time or node
    limit cut the search short, in which case the best schedule found is
    returned.
    """
    if app.num_tasks > max_tasks and not anytime:
        raise InstanceTooLarge(
            f"App '{app.name}' has {app.num_tasks} tasks; guaranteed-optimal mode is "
            f"limited to {max_tasks}. Use anytime mode for larger instances."
        )
    t0 = time.perf_counter()
    etf_makespan, etf_assignment, etf_starts = single_frame_etf(app, arch)
    solver = BranchAndBound(app, arch, time_limit=time_limit, node_limit=node_limit)
    optimal = solver.solve(etf_makespan, etf_assignment, etf_starts)
    elapsed = time.perf_counter() - t0
    logger.info(
        f"Exact schedule of '{app.name}' on {arch.name}: makespan {solver.best:.3f} "
        f"(ETF {etf_makespan:.3f}), optimal={optimal}, {solver.nodes} nodes, {elapsed:.2f}s"
    )
    return ExactResult(
        makespan=solver.best,
        assignment=solver.best_assignment,
        starts=solver.best_starts,
        optimal=optimal,
        nodes=solver.nodes,
        etf_makespan=etf_makespan,
        elapsed_s=elapsed,
        order=solver.best_order,
    )
