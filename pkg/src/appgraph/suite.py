# src/appgraph/suite.py
"""
Bundled synthetic application suite. Task counts and the task types each
application may use follow the reference benchmark table. The topologies
come from a fixed layered constructor and are frozen as DAG documents under
src/configs/apps/; builtin_app reads those files.
"""

import functools
import logging
import os
from typing import Dict, List, Sequence, Tuple

from src.appgraph.graph import ApplicationGraph, TaskNode
from src.appgraph.io import load_app_file, save_app
from src.common.exceptions import UnknownApp

logger = logging.getLogger(__name__)

APPS_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs", "apps")

SUITE_SEED = 2020
MAX_FAN_IN = 3
VOLUME_RANGE = (1, 16)

# Each stage is (task type, width); consecutive stages are connected.
APP_STAGES: Dict[str, Tuple[Tuple[str, int], ...]] = {
    "WiFi-TX": (
        ("scrambler", 1),
        ("encoder", 1),
        ("interleaver", 5),
        ("modulator", 5),
        ("pilot_insert", 5),
        ("ifft", 5),
        ("crc", 5),
    ),
    "WiFi-RX": (
        ("fft", 6),
        ("demodulator", 6),
        ("deinterleaver", 6),
        ("viterbi", 6),
        ("descrambler", 5),
        ("payload_extract", 5),
    ),
    "RangeDet": (
        ("waveform_gen", 1),
        ("fft", 2),
        ("vector_mult", 1),
        ("ifft", 1),
        ("amplitude", 1),
        ("max_detect", 1),
    ),
    "SC-TX": (
        ("scrambler", 1),
        ("encoder", 1),
        ("interleaver", 1),
        ("modulator", 2),
        ("pilot_insert", 1),
        ("crc", 2),
    ),
    "SC-RX": (
        ("demodulator", 2),
        ("deinterleaver", 2),
        ("viterbi", 2),
        ("descrambler", 1),
        ("payload_extract", 1),
    ),
    "TempMit": (
        ("matmul", 2),
        ("matrix_inverse", 2),
        ("matmul", 2),
        ("vector_mult", 2),
        ("amplitude", 2),
    ),
    "PulseDoppler": (
        ("fft", 128),
        ("vector_mult", 64),
        ("ifft", 128),
        ("fft", 64),
        ("amplitude", 64),
        ("max_detect", 1),
    ),
}

SUITE: Tuple[str, ...] = tuple(APP_STAGES)

# The six applications of the mixed workload (PulseDoppler is evaluated alone).
MIX_APPS: Tuple[str, ...] = ("WiFi-TX", "WiFi-RX", "RangeDet", "SC-TX", "SC-RX", "TempMit")

# Frames per application in the 500-frame reference mix.
DEFAULT_FRAME_COUNTS: Dict[str, int] = {
    "WiFi-TX": 69,
    "WiFi-RX": 111,
    "RangeDet": 64,
    "SC-TX": 64,
    "SC-RX": 91,
    "TempMit": 101,
}


def build_layered_app(
    name: str,
    app_id: int,
    stages: Sequence[Tuple[str, int]],
    seed: int = SUITE_SEED,
) -> ApplicationGraph:
    """
    Layered DAG with fan-in <= MAX_FAN_IN. Task j of stage i (width w)
    reads from the previous stage (width p) starting at index j*p // w and
    takes 1 + (i + j) % MAX_FAN_IN consecutive tasks, wrapping around.
    Previous-stage tasks left without a successor are attached to task
    q*w // p, or to the first task with fan-in headroom when that one is
    full. Edge volumes are 1 + (seed + 7*src + 13*dst) % 16.
    """
    layers: List[List[int]] = []
    preds: Dict[int, Dict[int, float]] = {}
    types: Dict[int, str] = {}
    next_id = 0

    def volume(src: int, dst: int) -> float:
        return float(VOLUME_RANGE[0] + (seed + 7 * src + 13 * dst) % VOLUME_RANGE[1])

    for stage, (task_type, width) in enumerate(stages):
        layer = list(range(next_id, next_id + width))
        next_id += width
        for tid in layer:
            types[tid] = task_type
            preds[tid] = {}
        if layers:
            previous = layers[-1]
            p, w = len(previous), len(layer)
            for j, tid in enumerate(layer):
                base = j * p // w
                k = min(MAX_FAN_IN, p, 1 + (stage + j) % MAX_FAN_IN)
                for d in range(k):
                    src = previous[(base + d) % p]
                    preds[tid][src] = volume(src, tid)
            used = {src for tid in layer for src in preds[tid]}
            for q, orphan in enumerate(previous):
                if orphan in used:
                    continue
                target = layer[q * w // p]
                if len(preds[target]) >= MAX_FAN_IN:
                    open_slots = [t for t in layer if len(preds[t]) < MAX_FAN_IN]
                    if not open_slots:
                        continue
                    target = open_slots[0]
                preds[target][orphan] = volume(orphan, target)
        layers.append(layer)

    nodes = tuple(
        TaskNode(
            id=tid,
            task_type=types[tid],
            predecessors=tuple(sorted(preds[tid].items())),
            app_id=app_id,
        )
        for tid in range(next_id)
    )
    return ApplicationGraph(app_id=app_id, name=name, nodes=nodes)


def suite_path(name: str, directory: str = APPS_DIR) -> str:
    return os.path.join(directory, f"{name}.json")


def freeze_suite(directory: str = APPS_DIR) -> List[str]:
    """Writes every suite application built by the layered constructor."""
    paths = [
        save_app(build_layered_app(name, app_id, APP_STAGES[name]), suite_path(name, directory))
        for app_id, name in enumerate(SUITE)
    ]
    logger.info(f"Froze {len(paths)} suite applications into {directory}")
    return paths


@functools.lru_cache(maxsize=None)
def builtin_app(name: str) -> ApplicationGraph:
    """Loads a bundled application from its frozen DAG document."""
    if name not in APP_STAGES:
        raise UnknownApp(f"Unknown application '{name}'. Known: {list(SUITE)}")
    app = load_app_file(suite_path(name))
    logger.debug(f"Loaded app '{name}' with {app.num_tasks} tasks")
    return app


def builtin_suite(names: Sequence[str] = MIX_APPS) -> Dict[str, ApplicationGraph]:
    return {name: builtin_app(name) for name in names}
