# src/simengine/report.py

import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.common.exceptions import TraceMismatch
from src.common.fileio import read_csv, read_json, write_csv, write_json

logger = logging.getLogger(__name__)

FRAME_COLUMNS = ["frame_id", "app", "arrival_us", "completion_us", "latency_us", "energy_uj"]


def _latency_stats(samples_ns: Sequence[int]) -> Dict[str, float]:
    if len(samples_ns) == 0:
        return {"mean_ns": 0.0, "median_ns": 0.0, "p99_ns": 0.0, "samples": 0}
    arr = np.asarray(samples_ns, dtype=float)
    return {
        "mean_ns": float(arr.mean()),
        "median_ns": float(np.median(arr)),
        "p99_ns": float(np.percentile(arr, 99)),
        "samples": int(arr.size),
    }


@dataclass
class SimReport:
    """
    Per-frame timing and energy of one simulation plus its aggregates.
    Wall-clock decision latencies are kept apart from the simulated values
    so that everything except ``wall_clock`` is reproducible.
    """

    frames: pd.DataFrame
    tasks: pd.DataFrame = field(default_factory=pd.DataFrame)
    scheduler: str = ""
    platform: str = ""
    noise_pct: float = 0.0
    seed: int = 0
    fallbacks: int = 0
    decisions: int = 0
    wall_clock: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_state(
        cls,
        state,
        scheduler: str,
        decision_ns: Sequence[int],
        noise_pct: float,
        seed: int,
        fallbacks: int = 0,
    ) -> "SimReport":
        frames = pd.DataFrame([asdict(r) for r in state.completed_frames], columns=FRAME_COLUMNS)
        frames = frames.sort_values("frame_id").reset_index(drop=True)
        tasks = pd.DataFrame([asdict(r) for r in state.task_log])
        return cls(
            frames=frames,
            tasks=tasks,
            scheduler=scheduler,
            platform=state.arch.name,
            noise_pct=noise_pct,
            seed=seed,
            fallbacks=fallbacks,
            decisions=len(decision_ns),
            wall_clock=_latency_stats(decision_ns),
        )

    # --- aggregates ---

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    @property
    def avg_latency(self) -> float:
        return float(self.frames["latency_us"].mean()) if self.num_frames else 0.0

    @property
    def avg_energy(self) -> float:
        return float(self.frames["energy_uj"].mean()) if self.num_frames else 0.0

    @property
    def edp(self) -> float:
        return self.avg_energy * self.avg_latency

    @property
    def ed2p(self) -> float:
        return self.avg_energy * self.avg_latency ** 2

    @property
    def total_energy(self) -> float:
        return float(self.frames["energy_uj"].sum()) if self.num_frames else 0.0

    @property
    def throughput(self) -> float:
        """Completed frames per ms over the span from first arrival to last completion."""
        if not self.num_frames:
            return 0.0
        span = float(self.frames["completion_us"].max() - self.frames["arrival_us"].min())
        return self.num_frames / (span / 1000.0) if span > 0 else float("inf")

    def metric(self, objective: str) -> float:
        """The aggregate an objective is judged by."""
        return {
            "performance": self.avg_latency,
            "energy": self.avg_energy,
            "edp": self.edp,
            "ed2p": self.ed2p,
        }[str(objective)]

    def aggregates(self) -> Dict[str, Any]:
        return {
            "frames": self.num_frames,
            "avg_latency_us": self.avg_latency,
            "avg_energy_uj": self.avg_energy,
            "total_energy_uj": self.total_energy,
            "edp": self.edp,
            "ed2p": self.ed2p,
            "throughput_frames_per_ms": self.throughput,
            "decisions": self.decisions,
            "fallbacks": self.fallbacks,
        }

    def per_app(self) -> pd.DataFrame:
        if not self.num_frames:
            return pd.DataFrame(columns=["app", "frames", "avg_latency_us", "avg_energy_uj"])
        grouped = self.frames.groupby("app", sort=True)
        return pd.DataFrame(
            {
                "frames": grouped.size(),
                "avg_latency_us": grouped["latency_us"].mean(),
                "avg_energy_uj": grouped["energy_uj"].mean(),
            }
        ).reset_index()

    # --- persistence ---

    def save(self, output_dir: str, stem: str, include_tasks: bool = False) -> Dict[str, str]:
        paths = {
            "frames": os.path.join(output_dir, f"{stem}_frames.csv"),
            "summary": os.path.join(output_dir, f"{stem}.json"),
        }
        write_csv(paths["frames"], self.frames)
        if include_tasks and not self.tasks.empty:
            paths["tasks"] = os.path.join(output_dir, f"{stem}_tasks.csv")
            write_csv(paths["tasks"], self.tasks)
        write_json(
            paths["summary"],
            {
                "scheduler": self.scheduler,
                "platform": self.platform,
                "noise_pct": self.noise_pct,
                "seed": self.seed,
                "aggregates": self.aggregates(),
                "wall_clock": self.wall_clock,
            },
        )
        logger.info(f"Report for '{self.scheduler}' saved to {paths['summary']}")
        return paths

    @classmethod
    def load(cls, output_dir: str, stem: str) -> "SimReport":
        summary = read_json(os.path.join(output_dir, f"{stem}.json"))
        frames = read_csv(os.path.join(output_dir, f"{stem}_frames.csv"))
        return cls(
            frames=frames,
            scheduler=summary.get("scheduler", ""),
            platform=summary.get("platform", ""),
            noise_pct=float(summary.get("noise_pct", 0.0)),
            seed=int(summary.get("seed", 0)),
            fallbacks=int(summary.get("aggregates", {}).get("fallbacks", 0)),
            decisions=int(summary.get("aggregates", {}).get("decisions", 0)),
            wall_clock=summary.get("wall_clock", {}),
        )


def _aligned(report_a: SimReport, report_b: SimReport) -> pd.DataFrame:
    a = report_a.frames[["frame_id", "app", "latency_us"]]
    b = report_b.frames[["frame_id", "app", "latency_us"]]
    if len(a) != len(b) or set(zip(a["frame_id"], a["app"])) != set(zip(b["frame_id"], b["app"])):
        raise TraceMismatch(
            f"Reports '{report_a.scheduler}' and '{report_b.scheduler}' cover different frames"
        )
    return a.merge(b, on=["frame_id", "app"], suffixes=("_a", "_b"))


def slowdown(report_a: SimReport, report_b: SimReport) -> float:
    """Mean over frames of latency_a / latency_b."""
    merged = _aligned(report_a, report_b)
    if merged.empty:
        return 1.0
    ratio = merged["latency_us_a"] / merged["latency_us_b"]
    return float(ratio.mean())


def aggregate_slowdown(report_a: SimReport, report_b: SimReport) -> float:
    """Ratio of average job execution times."""
    _aligned(report_a, report_b)
    if report_b.avg_latency == 0:
        return 1.0
    return report_a.avg_latency / report_b.avg_latency


def slowdown_table(report_a: SimReport, report_b: SimReport) -> pd.DataFrame:
    """Per-app slowdown rows plus an ``ALL`` row."""
    merged = _aligned(report_a, report_b)
    merged["slowdown"] = merged["latency_us_a"] / merged["latency_us_b"]
    rows: List[Dict[str, Any]] = []
    for app, group in merged.groupby("app", sort=True):
        rows.append(
            {
                "app": app,
                "frames": len(group),
                "slowdown": float(group["slowdown"].mean()),
                "aggregate_slowdown": float(group["latency_us_a"].mean() / group["latency_us_b"].mean()),
            }
        )
    rows.append(
        {
            "app": "ALL",
            "frames": len(merged),
            "slowdown": slowdown(report_a, report_b),
            "aggregate_slowdown": aggregate_slowdown(report_a, report_b),
        }
    )
    return pd.DataFrame(rows)
