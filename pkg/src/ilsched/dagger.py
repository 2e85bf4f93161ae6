# src/ilsched/dagger.py

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from src.appgraph.graph import ApplicationGraph
from src.appgraph.workload import FrameArrivalTrace
from src.features.extractor import FeatureExtractor
from src.ilsched.dataset import USAGE_CLUSTER, USAGE_PE, Dataset
from src.ilsched.policy import HierarchicalPolicy, PolicyScheduler, train_hierarchical
from src.ilsched.tree import DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF
from src.oracle.etf import ETFScheduler, Objective, etf_decide
from src.platforms.architecture import ArchitectureGraph
from src.simengine.engine import run_simulation
from src.simengine.report import SimReport
from src.simengine.state import SimState, TaskInstance

DEFAULT_DAGGER_ITERS = 10
DEFAULT_TARGET_PCT = 0.02


class DaggerScheduler(PolicyScheduler):
    """
    The learner acts; at each decision the oracle labels the same state and
    disagreements are aggregated level by level.
    """

    def __init__(self, policy: HierarchicalPolicy, dataset: Dataset, objective: Objective, provenance: str):
        super().__init__(policy, name=f"dagger-{policy.objective.value}")
        self.dataset = dataset
        self.objective = Objective(objective)
        self.provenance = provenance
        self.raw_extractor = FeatureExtractor(policy.schema)
        self.cluster_rows = 0
        self.pe_rows = 0

    def decide(self, state: SimState, task: TaskInstance) -> int:
        policy = self.policy
        schema = policy.schema
        raw = self.raw_extractor.extract(state, task).values
        values = policy.mask(raw)

        _, oracle_pe = etf_decide(state, [task], self.objective)
        oracle_cluster = state.arch.clusters[state.arch.pes[oracle_pe].cluster_id]
        c_star = schema.cluster_names.index(oracle_cluster.name)
        k_star = oracle_cluster.pe_ids.index(oracle_pe)

        row = dict(
            cluster_label=c_star,
            pe_label=k_star,
            pe_id=oracle_pe,
            provenance=self.provenance,
            frame_id=task.frame_id,
            task_id=task.task_id,
            app=task.app_name,
        )
        c_pred = policy.predict_cluster(values)
        if c_pred != c_star:
            self.dataset.add(raw, usage=USAGE_CLUSTER, **row)
            self.cluster_rows += 1
        if policy.predict_pe(c_star, values) != k_star:
            self.dataset.add(raw, usage=USAGE_PE, **row)
            self.pe_rows += 1

        return super().decide(state, task)


@dataclass
class DaggerResult:
    policy: HierarchicalPolicy
    dataset: Dataset
    stats: pd.DataFrame
    best_iteration: int
    converged: bool
    oracle_metric: float
    iterations: int = 0

    @property
    def no_improvement(self) -> bool:
        return not self.converged


def _mean_metric(reports: Sequence[SimReport], objective: Objective) -> float:
    return float(np.mean([r.metric(objective.value) for r in reports]))


def dagger_run(
    policy: HierarchicalPolicy,
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    traces: Sequence[FrameArrivalTrace],
    dataset: Dataset,
    objective: Objective = Objective.PERFORMANCE,
    max_iters: int = DEFAULT_DAGGER_ITERS,
    target_pct: float = DEFAULT_TARGET_PCT,
    depth_cluster: int = DEFAULT_MAX_DEPTH,
    depth_pe: int = DEFAULT_MAX_DEPTH,
    min_leaf: int = DEFAULT_MIN_LEAF,
    noise_pct: float = 0.0,
    seed: int = 0,
    oracle_reports: Optional[Sequence[SimReport]] = None,
    progress: bool = False,
) -> DaggerResult:
    """
    Hierarchical DAgger. Each iteration runs every trace under the current
    policy, aggregates oracle labels where it disagrees and retrains from
    scratch on the union. Stops once the objective's aggregate is within
    ``target_pct`` of the oracle's or after ``max_iters`` passes, and returns
    the best policy seen (smallest gap, ties to the smaller dataset).
    """
    log = logging.getLogger("dagger_run")
    objective = Objective(objective)
    if oracle_reports is None:
        oracle_reports = [
            run_simulation(arch, apps, t, ETFScheduler(objective), noise_pct=noise_pct, seed=seed)
            for t in traces
        ]
    oracle_metric = _mean_metric(oracle_reports, objective)
    data = dataset.copy()
    current = policy
    best = None
    stats: List[Dict] = []
    converged = False

    log.info(
        f"===== Starting DAgger: {len(traces)} traces, objective {objective.value}, "
        f"target {target_pct:.2%}, max {max_iters} iterations ====="
    )
    for it in tqdm(range(1, max_iters + 1), desc="DAgger", disable=not progress):
        rows_before = len(data)
        reports = []
        cluster_rows = pe_rows = fallbacks = 0
        for trace in traces:
            sched = DaggerScheduler(current, data, objective, provenance=f"dagger-{it}")
            reports.append(run_simulation(arch, apps, trace, sched, noise_pct=noise_pct, seed=seed))
            cluster_rows += sched.cluster_rows
            pe_rows += sched.pe_rows
            fallbacks += sched.fallback_count
        metric = _mean_metric(reports, objective)
        gap = metric / oracle_metric - 1.0 if oracle_metric > 0 else 0.0
        stats.append(
            {
                "iteration": it,
                "dataset_rows": rows_before,
                "cluster_rows_added": cluster_rows,
                "pe_rows_added": pe_rows,
                "fallbacks": fallbacks,
                "metric": metric,
                "oracle_metric": oracle_metric,
                "gap": gap,
            }
        )
        log.info(
            f"Iteration {it}: {objective.value} {metric:.3f} vs oracle {oracle_metric:.3f} "
            f"(gap {gap:+.2%}), aggregated {cluster_rows} cluster / {pe_rows} PE rows"
        )
        candidate = (gap, rows_before, it)
        if best is None or candidate[:2] < best[0][:2]:
            best = (candidate, current)
        if gap <= target_pct:
            converged = True
            break
        if cluster_rows + pe_rows == 0:
            log.info("No disagreement with the oracle on this workload; stopping")
            break
        if it < max_iters:
            current = train_hierarchical(
                data,
                depth_cluster=depth_cluster,
                depth_pe=depth_pe,
                min_leaf=min_leaf,
                exclude_groups=policy.exclude_groups,
                strict=False,
            )

    if not converged:
        log.warning(
            f"DAgger did not reach the {target_pct:.2%} target in {len(stats)} iterations "
            f"(best gap {best[0][0]:+.2%}); more iterations may help"
        )
    return DaggerResult(
        policy=best[1],
        dataset=data,
        stats=pd.DataFrame(stats),
        best_iteration=best[0][2],
        converged=converged,
        oracle_metric=oracle_metric,
        iterations=len(stats),
    )
