# src/cli/runner.py
"""
Parallel sweep execution.

Each SweepJob is one independent (platform, workload, noise, seed) run of
the oracle and the policy on the same trace. Jobs only read immutable
inputs (builtin suite, platform documents, the model file), write their own
result file and hand back a plain dict, so they can run in separate
processes. Aggregation happens afterwards, serially and sorted by job id.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from tqdm.auto import tqdm

from src.appgraph.suite import builtin_suite
from src.appgraph.workload import WorkloadSpec, generate_trace
from src.common.fileio import read_json, write_csv, write_json
from src.ilsched.policy import PolicyScheduler, load_policy
from src.oracle.etf import ETFScheduler, Objective
from src.platforms.loader import resolve_platform
from src.simengine.engine import run_simulation
from src.simengine.report import aggregate_slowdown, slowdown

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "job_id",
    "platform",
    "workload",
    "injection_rate",
    "noise_pct",
    "seed",
    "frames",
    "oracle_latency_us",
    "policy_latency_us",
    "oracle_metric",
    "policy_metric",
    "metric_gap",
    "slowdown",
    "aggregate_slowdown",
    "oracle_energy_uj",
    "policy_energy_uj",
    "policy_throughput",
    "fallbacks",
]


@dataclass(frozen=True)
class SweepJob:
    job_id: int
    platform: str
    workload: str
    spec: Dict[str, Any]
    noise_pct: float
    seed: int
    policy_path: str
    objective: str
    output_dir: str

    @property
    def result_path(self) -> str:
        return os.path.join(self.output_dir, "jobs", f"job_{self.job_id:04d}.json")


def run_sweep_job(job: SweepJob) -> Dict[str, Any]:
    """Oracle and policy on one trace; returns one sweep row and writes it to the job file."""
    objective = Objective(job.objective)
    spec = WorkloadSpec.from_dict(job.spec)
    arch = resolve_platform(job.platform)
    apps = builtin_suite(spec.apps)
    policy = load_policy(job.policy_path)
    trace = generate_trace(spec)

    oracle = run_simulation(arch, apps, trace, ETFScheduler(objective), noise_pct=job.noise_pct, seed=job.seed)
    learned = run_simulation(arch, apps, trace, PolicyScheduler(policy), noise_pct=job.noise_pct, seed=job.seed)

    oracle_metric = oracle.metric(objective.value)
    policy_metric = learned.metric(objective.value)
    row = {
        "job_id": job.job_id,
        "platform": arch.name,
        "workload": job.workload,
        "injection_rate": spec.injection_rate,
        "noise_pct": job.noise_pct,
        "seed": job.seed,
        "frames": learned.num_frames,
        "oracle_latency_us": oracle.avg_latency,
        "policy_latency_us": learned.avg_latency,
        "oracle_metric": oracle_metric,
        "policy_metric": policy_metric,
        "metric_gap": policy_metric / oracle_metric - 1.0 if oracle_metric > 0 else 0.0,
        "slowdown": slowdown(learned, oracle),
        "aggregate_slowdown": aggregate_slowdown(learned, oracle),
        "oracle_energy_uj": oracle.avg_energy,
        "policy_energy_uj": learned.avg_energy,
        "policy_throughput": learned.throughput,
        "fallbacks": learned.fallbacks,
    }
    write_json(job.result_path, {"row": row})
    return row


def run_jobs(jobs: Sequence[SweepJob], workers: int = 1, progress: bool = True) -> pd.DataFrame:
    """
    Runs every job, in-process when ``workers`` is 1, otherwise in a process
    pool. The returned table is rebuilt from the per-job files in job order.
    """
    logger.info(f"===== Starting sweep: {len(jobs)} jobs on {workers} worker(s) =====")
    failures: List[str] = []
    if workers <= 1:
        for job in tqdm(jobs, desc="Sweep", disable=not progress):
            run_sweep_job(job)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(run_sweep_job, job): job for job in jobs}
            for future in tqdm(as_completed(futures), total=len(futures), desc="Sweep", disable=not progress):
                job = futures[future]
                try:
                    future.result()
                except Exception as e:
                    logger.error(f"Sweep job {job.job_id} ({job.platform}, {job.workload}) failed: {e}")
                    failures.append(f"job {job.job_id}: {e}")
        if failures:
            raise RuntimeError(f"{len(failures)} sweep job(s) failed: " + "; ".join(failures))
    return collect_results(jobs)


def collect_results(jobs: Sequence[SweepJob]) -> pd.DataFrame:
    rows = [read_json(job.result_path)["row"] for job in sorted(jobs, key=lambda j: j.job_id)]
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def summarize_sweep(results: pd.DataFrame, saturation: Optional[Dict[str, float]] = None) -> pd.DataFrame:
    """Per (platform, workload, rate, noise) means over seeds, with normalized throughput."""
    keys = ["platform", "workload", "injection_rate", "noise_pct"]
    summary = (
        results.groupby(keys, sort=True)
        .agg(
            seeds=("seed", "count"),
            slowdown=("slowdown", "mean"),
            aggregate_slowdown=("aggregate_slowdown", "mean"),
            metric_gap=("metric_gap", "mean"),
            policy_throughput=("policy_throughput", "mean"),
            fallbacks=("fallbacks", "sum"),
        )
        .reset_index()
    )
    if saturation:
        summary["saturation_rate"] = summary["platform"].map(saturation)
        summary["normalized_throughput"] = summary["policy_throughput"] / summary["saturation_rate"]
    return summary


def save_sweep(results: pd.DataFrame, summary: pd.DataFrame, output_dir: str, jobs: Sequence[SweepJob]) -> Dict[str, str]:
    paths = {
        "runs": write_csv(os.path.join(output_dir, "sweep_runs.csv"), results),
        "summary": write_csv(os.path.join(output_dir, "sweep_summary.csv"), summary),
    }
    write_json(
        os.path.join(output_dir, "sweep.json"),
        {
            "jobs": [{k: v for k, v in asdict(j).items() if k != "output_dir"} for j in jobs],
            "worst_slowdown": float(summary["slowdown"].max()) if len(summary) else None,
            "mean_slowdown": float(summary["slowdown"].mean()) if len(summary) else None,
        },
    )
    return paths
