# src/cli/bench.py

import logging
import time
from typing import Dict, List, Mapping, Sequence

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from src.appgraph.graph import ApplicationGraph
from src.ilsched.experiments import make_decision_state
from src.ilsched.policy import Policy
from src.oracle.etf import etf_decide
from src.platforms.architecture import ArchitectureGraph

logger = logging.getLogger(__name__)

DEFAULT_READY_SIZES = (1, 2, 4, 8, 16, 32, 64)
DEFAULT_ITERATIONS = 200


def _stats(prefix: str, samples_ns: Sequence[int]) -> Dict[str, float]:
    arr = np.asarray(samples_ns, dtype=float)
    return {
        f"{prefix}_mean_ns": float(arr.mean()),
        f"{prefix}_median_ns": float(np.median(arr)),
        f"{prefix}_p99_ns": float(np.percentile(arr, 99)),
    }


def bench_latency(
    policy: Policy,
    arch: ArchitectureGraph,
    apps: Mapping[str, ApplicationGraph],
    ready_sizes: Sequence[int] = DEFAULT_READY_SIZES,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    progress: bool = False,
) -> pd.DataFrame:
    """
    Wall-clock cost of one scheduling decision. For every ready-set size the
    same random states are handed to the oracle (a full scan of the ready
    set) and to the policy (one decision for the head of the ready set,
    feature extraction included).
    """
    rng = np.random.default_rng(seed)
    rows: List[Dict[str, float]] = []
    for size in tqdm(ready_sizes, desc="Latency", disable=not progress):
        etf_ns: List[int] = []
        policy_ns: List[int] = []
        for _ in range(iterations):
            state, ready = make_decision_state(arch, apps, size, rng)
            t0 = time.perf_counter_ns()
            etf_decide(state, ready, policy.objective)
            etf_ns.append(time.perf_counter_ns() - t0)
            t0 = time.perf_counter_ns()
            policy.decide(state, ready[0])
            policy_ns.append(time.perf_counter_ns() - t0)
        row = {"ready_size": int(size), "iterations": int(iterations)}
        row.update(_stats("etf", etf_ns))
        row.update(_stats("policy", policy_ns))
        rows.append(row)
        logger.debug(
            f"Ready size {size}: etf median {row['etf_median_ns']:.0f} ns, "
            f"policy median {row['policy_median_ns']:.0f} ns"
        )
    return pd.DataFrame(rows)
