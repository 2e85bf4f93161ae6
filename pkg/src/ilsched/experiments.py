# src/ilsched/experiments.py

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.appgraph.graph import ApplicationGraph
from src.appgraph.workload import (
    FrameArrival,
    FrameArrivalTrace,
    WorkloadSpec,
    generate_trace,
)
from src.common.exceptions import EmptyDataset, UnknownApp
from src.features.extractor import FeatureExtractor
from src.features.schema import DEFAULT_PRED_SLOTS, FeatureSchema, feature_schema
from src.ilsched.dagger import DEFAULT_DAGGER_ITERS, DEFAULT_TARGET_PCT, dagger_run
from src.ilsched.dataset import Dataset
from src.ilsched.policy import PolicyScheduler, train_hierarchical
from src.ilsched.tree import DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF
from src.oracle.etf import ETFScheduler, Objective, RecordingOracleScheduler
from src.platforms.architecture import ArchitectureGraph
from src.simengine.engine import run_simulation
from src.simengine.report import SimReport, slowdown
from src.simengine.state import SimState, TaskInstance, dispatch

logger = logging.getLogger(__name__)


def collect_oracle_dataset(
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    traces: Sequence[FrameArrivalTrace],
    objective: Objective = Objective.PERFORMANCE,
    schema: Optional[FeatureSchema] = None,
    pred_slots: int = DEFAULT_PRED_SLOTS,
    noise_pct: float = 0.0,
    seed: int = 0,
    provenance: str = "initial",
    progress: bool = False,
) -> Dataset:
    """One labelled row per executed task instance of every trace."""
    objective = Objective(objective)
    schema = schema or feature_schema(arch, pred_slots)
    dataset = Dataset(schema, objective.value, arch.name)
    extractor = FeatureExtractor(schema)
    for trace in traces:
        sched = RecordingOracleScheduler(extractor, objective)
        run_simulation(arch, apps, trace, sched, noise_pct=noise_pct, seed=seed, progress=progress)
        dataset.add_decisions(sched.decisions, arch, provenance)
    if len(dataset) == 0:
        raise EmptyDataset("The workload produced no scheduling decisions")
    logger.info(f"Collected {len(dataset)} oracle decisions ({objective.value}) on {arch.name}")
    return dataset


def saturation_trace(spec: WorkloadSpec) -> FrameArrivalTrace:
    """Same frame mix as ``spec`` with every frame injected at t=0."""
    base = generate_trace(spec)
    return FrameArrivalTrace(tuple(FrameArrival(0.0, a.app, a.frame_id) for a in base))


def measure_saturation_rate(
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    spec: WorkloadSpec,
    objective: Objective = Objective.PERFORMANCE,
) -> float:
    """Frames per ms the oracle sustains when the whole workload is queued at once."""
    report = run_simulation(arch, apps, saturation_trace(spec), ETFScheduler(objective))
    makespan_ms = float(report.frames["completion_us"].max()) / 1000.0
    rate = report.num_frames / makespan_ms if makespan_ms > 0 else float("inf")
    logger.info(f"Saturation rate on {arch.name}: {rate:.3f} frames/ms")
    return rate


@dataclass
class LeaveOneOutReport:
    app: str
    before_slowdown: float
    after_slowdown: float
    iterations: int
    converged: bool
    training_rows: int

    def to_dict(self) -> Dict:
        return asdict(self)


def leave_one_out(
    app: str,
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    specs: Sequence[WorkloadSpec],
    objective: Objective = Objective.PERFORMANCE,
    pred_slots: int = DEFAULT_PRED_SLOTS,
    depth_cluster: int = DEFAULT_MAX_DEPTH,
    depth_pe: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    dagger_iters: int = DEFAULT_DAGGER_ITERS,
    target_pct: float = DEFAULT_TARGET_PCT,
    progress: bool = False,
) -> LeaveOneOutReport:
    """
    Trains on the workloads with ``app`` removed, measures slowdown against
    the oracle on the full workloads, then lets DAgger adapt on them.
    """
    if app not in apps:
        raise UnknownApp(f"'{app}' is not part of the loaded suite")
    objective = Objective(objective)
    train_traces = []
    for spec in specs:
        entries = tuple(e for e in spec.entries if e[0] != app)
        if entries:
            train_traces.append(generate_trace(WorkloadSpec(entries, spec.injection_rate, spec.arrival_model, spec.seed)))
    eval_traces = [generate_trace(s) for s in specs]

    dataset = collect_oracle_dataset(arch, apps, train_traces, objective, pred_slots=pred_slots, progress=progress)
    policy = train_hierarchical(dataset, depth_cluster, depth_pe, min_leaf, strict=False)

    oracle_reports = [run_simulation(arch, apps, t, ETFScheduler(objective)) for t in eval_traces]
    before = _mean_slowdown(
        [run_simulation(arch, apps, t, PolicyScheduler(policy)) for t in eval_traces], oracle_reports
    )
    result = dagger_run(
        policy,
        arch,
        apps,
        eval_traces,
        dataset,
        objective=objective,
        max_iters=dagger_iters,
        target_pct=target_pct,
        depth_cluster=depth_cluster,
        depth_pe=depth_pe,
        min_leaf=min_leaf,
        oracle_reports=oracle_reports,
        progress=progress,
    )
    after = _mean_slowdown(
        [run_simulation(arch, apps, t, PolicyScheduler(result.policy)) for t in eval_traces], oracle_reports
    )
    logger.info(f"Leave-one-out '{app}': slowdown {before:.3f} -> {after:.3f} in {result.iterations} iterations")
    return LeaveOneOutReport(app, before, after, result.iterations, result.converged, len(dataset))


def _mean_slowdown(reports: Sequence[SimReport], baselines: Sequence[SimReport]) -> float:
    return float(np.mean([slowdown(r, b) for r, b in zip(reports, baselines)]))


def make_decision_state(
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    ready_size: int,
    rng: np.random.Generator,
    max_busy_us: float = 200.0,
) -> Tuple[SimState, List[TaskInstance]]:
    """
    Random mid-run state with exactly ``ready_size`` ready tasks: frames are
    admitted and random tasks dispatched and retired until the ready set is
    large enough, then PE availability is scrambled.
    """
    names = sorted(apps)
    state = SimState(arch, apps, seed=int(rng.integers(1 << 31)))
    frame_id = 0
    while len(state.ready_set) < ready_size:
        if not state.ready_set or rng.random() < 0.4:
            state.admit_frame(frame_id, names[int(rng.integers(len(names)))], state.now)
            frame_id += 1
            continue
        task = state.ready_set[int(rng.integers(len(state.ready_set)))]
        capable = arch.capable_pes(task.task_type)
        dispatch(state, task, capable[int(rng.integers(len(capable)))])
        state.complete_task(task.frame_id, task.task_id)
    state.event_queue.clear()
    state.ready_set = state.ready_set[:ready_size]
    state.now = float(rng.uniform(0.0, max_busy_us))
    state.pe_ready_time = [
        state.now + float(rng.uniform(0.0, max_busy_us)) if rng.random() < 0.6 else state.now
        for _ in range(arch.num_pes)
    ]
    return state, list(state.ready_set)

