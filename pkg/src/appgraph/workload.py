# src/appgraph/workload.py

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.appgraph.suite import DEFAULT_FRAME_COUNTS, MIX_APPS, SUITE
from src.common.exceptions import ParseError, UnknownApp, ValidationError
from src.common.fileio import read_csv, read_json, write_csv

logger = logging.getLogger(__name__)


class ArrivalModel(str, Enum):
    EXPONENTIAL = "exponential"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class WorkloadSpec:
    entries: Tuple[Tuple[str, int], ...]
    injection_rate: float  # frames per ms
    arrival_model: ArrivalModel = ArrivalModel.EXPONENTIAL
    seed: int = 0

    def __post_init__(self):
        violations = []
        if not self.entries:
            violations.append("workload has no entries")
        for app, count in self.entries:
            if int(count) <= 0:
                violations.append(f"frame count for '{app}' must be > 0, got {count}")
        if not self.injection_rate > 0:
            violations.append(f"injection_rate must be > 0, got {self.injection_rate}")
        if violations:
            raise ValidationError("Invalid workload spec", violations)
        object.__setattr__(self, "arrival_model", ArrivalModel(self.arrival_model))

    @property
    def total_frames(self) -> int:
        return sum(int(c) for _, c in self.entries)

    @property
    def apps(self) -> Tuple[str, ...]:
        return tuple(app for app, _ in self.entries)

    def with_rate(self, injection_rate: float) -> "WorkloadSpec":
        return replace(self, injection_rate=float(injection_rate))

    def with_seed(self, seed: int) -> "WorkloadSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": [{"app": a, "frames": int(c)} for a, c in self.entries],
            "injection_rate": self.injection_rate,
            "arrival_model": self.arrival_model.value,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WorkloadSpec":
        try:
            entries = tuple((str(e["app"]), int(e["frames"])) for e in data["entries"])
            return cls(
                entries=entries,
                injection_rate=float(data["injection_rate"]),
                arrival_model=ArrivalModel(data.get("arrival_model", "exponential")),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed workload spec: {e!r}") from e


@dataclass(frozen=True)
class FrameArrival:
    time_us: float
    app: str
    frame_id: int


@dataclass(frozen=True)
class FrameArrivalTrace:
    arrivals: Tuple[FrameArrival, ...]

    def __post_init__(self):
        violations = []
        times = [a.time_us for a in self.arrivals]
        if any(b < a for a, b in zip(times, times[1:])):
            violations.append("arrival times must be non-decreasing")
        ids = [a.frame_id for a in self.arrivals]
        if len(set(ids)) != len(ids):
            violations.append("frame ids must be unique")
        if violations:
            raise ValidationError("Invalid frame arrival trace", violations)

    def __len__(self) -> int:
        return len(self.arrivals)

    def __iter__(self) -> Iterator[FrameArrival]:
        return iter(self.arrivals)

    @property
    def apps(self) -> Tuple[str, ...]:
        return tuple(sorted({a.app for a in self.arrivals}))

    def frame_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for a in self.arrivals:
            counts[a.app] = counts.get(a.app, 0) + 1
        return counts

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "time_us": [a.time_us for a in self.arrivals],
                "app": [a.app for a in self.arrivals],
                "frame_id": [a.frame_id for a in self.arrivals],
            }
        )

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "FrameArrivalTrace":
        missing = {"time_us", "app", "frame_id"} - set(df.columns)
        if missing:
            raise ParseError(f"Trace table is missing columns {sorted(missing)}")
        return cls(
            tuple(
                FrameArrival(float(t), str(a), int(f))
                for t, a, f in zip(df["time_us"], df["app"], df["frame_id"])
            )
        )


def generate_trace(
    spec: WorkloadSpec, known_apps: Optional[Iterable[str]] = None
) -> FrameArrivalTrace:
    """
    Materializes the arrival process of ``spec``. The multiset of frames is
    shuffled with the spec seed, then arrival times are assigned in order;
    the first frame arrives at t=0.
    """
    known = set(SUITE if known_apps is None else known_apps)
    unknown = [app for app in spec.apps if app not in known]
    if unknown:
        raise UnknownApp(f"Workload references unknown apps {unknown}")

    rng = np.random.default_rng(spec.seed)
    frames = np.array([app for app, count in spec.entries for _ in range(int(count))])
    order = rng.permutation(len(frames))
    mean_gap_us = 1000.0 / spec.injection_rate

    if spec.arrival_model is ArrivalModel.PERIODIC:
        times = np.arange(len(frames), dtype=float) * mean_gap_us
    else:
        gaps = rng.exponential(mean_gap_us, size=max(len(frames) - 1, 0))
        times = np.concatenate(([0.0], np.cumsum(gaps)))

    arrivals = tuple(
        FrameArrival(time_us=float(t), app=str(frames[idx]), frame_id=i)
        for i, (t, idx) in enumerate(zip(times, order))
    )
    logger.debug(
        f"Generated trace: {len(arrivals)} frames, rate {spec.injection_rate} frames/ms, "
        f"model {spec.arrival_model.value}, seed {spec.seed}"
    )
    return FrameArrivalTrace(arrivals)


def default_workload_spec(
    injection_rate: float = 1.0,
    seed: int = 0,
    arrival_model: ArrivalModel = ArrivalModel.EXPONENTIAL,
) -> WorkloadSpec:
    """The 500-frame mix of the six streaming applications."""
    return WorkloadSpec(
        entries=tuple((app, DEFAULT_FRAME_COUNTS[app]) for app in MIX_APPS),
        injection_rate=injection_rate,
        arrival_model=arrival_model,
        seed=seed,
    )


def intensive_workload_spec(
    app: str,
    injection_rate: float,
    seed: int = 0,
    total_frames: int = 500,
    share: float = 0.6,
    apps: Sequence[str] = MIX_APPS,
) -> WorkloadSpec:
    """``share`` of the frames from ``app``; the rest split evenly over the others."""
    if app not in apps:
        raise UnknownApp(f"'{app}' is not one of {list(apps)}")
    others = [a for a in apps if a != app]
    main = int(round(total_frames * share))
    rest = total_frames - main
    base, extra = divmod(rest, len(others)) if others else (0, 0)
    entries = [(app, main)]
    for i, other in enumerate(others):
        count = base + (1 if i < extra else 0)
        if count > 0:
            entries.append((other, count))
    return WorkloadSpec(tuple(entries), injection_rate=injection_rate, seed=seed)


def balanced_workload_spec(
    injection_rate: float,
    seed: int = 0,
    total_frames: int = 500,
    apps: Sequence[str] = MIX_APPS,
) -> WorkloadSpec:
    base, extra = divmod(total_frames, len(apps))
    entries = tuple((a, base + (1 if i < extra else 0)) for i, a in enumerate(apps))
    return WorkloadSpec(tuple(e for e in entries if e[1] > 0), injection_rate, seed=seed)


def load_workload_spec(path: str) -> WorkloadSpec:
    return WorkloadSpec.from_dict(read_json(path))


def save_trace(trace: FrameArrivalTrace, path: str) -> str:
    return write_csv(path, trace.to_frame())


def load_trace(path: str) -> FrameArrivalTrace:
    return FrameArrivalTrace.from_frame(read_csv(path))
