# src/platforms/profiles.py
"""
Deterministic generator for the execution-time and power profiles of the
bundled platforms. The emitted platform documents are the ground truth the
rest of the framework (and the test-suite) reads; nothing downstream
re-derives profile numbers.
"""

import logging
from typing import Dict, List, Mapping, Tuple

import numpy as np

from src.common.exceptions import UnknownConfig

logger = logging.getLogger(__name__)

PROFILE_SEED = 20201
INTRA_CLUSTER_RATE = 0.05  # µs per volume unit between PEs of one cluster
INTER_CLUSTER_RATE = 0.2   # µs per volume unit across clusters

GENERAL_TASK_TYPES: Tuple[str, ...] = (
    "scrambler",
    "encoder",
    "interleaver",
    "modulator",
    "pilot_insert",
    "crc",
    "demodulator",
    "deinterleaver",
    "descrambler",
    "payload_extract",
    "waveform_gen",
    "vector_mult",
    "amplitude",
    "max_detect",
    "matrix_inverse",
)

# Accelerator cluster kind -> task types it runs.
ACCELERATOR_TASK_TYPES: Dict[str, Tuple[str, ...]] = {
    "MatMul": ("matmul",),
    "FFT": ("fft", "ifft"),
    "Decoder": ("viterbi",),
}

TASK_TYPES: Tuple[str, ...] = GENERAL_TASK_TYPES + tuple(
    t for kind in ("MatMul", "FFT", "Decoder") for t in ACCELERATOR_TASK_TYPES[kind]
)

CLUSTER_KINDS: Tuple[str, ...] = ("LITTLE", "big", "MatMul", "FFT", "Decoder")

# PE count per cluster kind, in CLUSTER_KINDS order.
PLATFORM_CONFIGS: Dict[str, Tuple[int, int, int, int, int]] = {
    "G1": (4, 4, 2, 4, 2),
    "G2": (2, 2, 2, 2, 2),
    "G3": (1, 1, 1, 1, 1),
    "G4": (4, 4, 1, 1, 1),
    "G5": (4, 4, 0, 0, 0),
}


def generate_profile_table(
    seed: int = PROFILE_SEED,
) -> Dict[str, Dict[str, Tuple[float, float]]]:
    """
    Returns {cluster kind: {task type: (exec_time µs, power mW)}}.

    LITTLE runs every type; big is 1.5-3x faster than LITTLE; each
    accelerator is 5-20x faster than LITTLE on its own types. Power per task
    is ordered LITTLE < accelerator < big.
    """
    rng = np.random.default_rng(seed)
    table: Dict[str, Dict[str, Tuple[float, float]]] = {k: {} for k in CLUSTER_KINDS}
    for task_type in TASK_TYPES:
        little_exec = float(rng.uniform(20.0, 120.0))
        little_power = float(rng.uniform(80.0, 200.0))
        big_exec = little_exec / float(rng.uniform(1.5, 3.0))
        big_power = float(rng.uniform(600.0, 1200.0))
        table["LITTLE"][task_type] = (round(little_exec, 3), round(little_power, 3))
        table["big"][task_type] = (round(big_exec, 3), round(big_power, 3))
        for kind, supported in ACCELERATOR_TASK_TYPES.items():
            if task_type not in supported:
                continue
            acc_exec = little_exec / float(rng.uniform(5.0, 20.0))
            acc_power = little_power + (big_power - little_power) * float(
                rng.uniform(0.1, 0.9)
            )
            table[kind][task_type] = (round(acc_exec, 3), round(acc_power, 3))
    return table


def generate_platform_document(
    name: str,
    counts: Mapping[str, int] = None,
    seed: int = PROFILE_SEED,
    intra_cluster_rate: float = INTRA_CLUSTER_RATE,
    inter_cluster_rate: float = INTER_CLUSTER_RATE,
) -> Dict:
    """
    Builds a platform document (the same JSON structure ``load_platform``
    reads). ``counts`` maps cluster kind to PE count; when omitted the named
    configuration G1..G5 is used. Kinds with zero PEs are left out.
    """
    if counts is None:
        if name not in PLATFORM_CONFIGS:
            raise UnknownConfig(
                f"Unknown platform configuration '{name}'. "
                f"Known: {sorted(PLATFORM_CONFIGS)}"
            )
        counts = dict(zip(CLUSTER_KINDS, PLATFORM_CONFIGS[name]))

    profiles = generate_profile_table(seed)
    clusters: List[Dict] = []
    pes: List[Dict] = []
    next_pe = 0
    for kind in CLUSTER_KINDS:
        count = int(counts.get(kind, 0))
        if count <= 0:
            continue
        cluster_id = len(clusters)
        pe_ids = list(range(next_pe, next_pe + count))
        next_pe += count
        clusters.append({"id": cluster_id, "name": kind, "pe_ids": pe_ids})
        for pe_id in pe_ids:
            pes.append(
                {
                    "id": pe_id,
                    "cluster_id": cluster_id,
                    "exec_time": {t: v[0] for t, v in profiles[kind].items()},
                    "power": {t: v[1] for t, v in profiles[kind].items()},
                }
            )

    logger.debug(
        f"Generated platform '{name}' with {len(pes)} PEs in {len(clusters)} clusters"
    )
    return {
        "name": name,
        "task_types": list(TASK_TYPES),
        "link_rates": {
            "intra_cluster": intra_cluster_rate,
            "inter_cluster": inter_cluster_rate,
        },
        "clusters": clusters,
        "pes": pes,
    }
