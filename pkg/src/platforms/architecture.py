# src/platforms/architecture.py

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from src.common.exceptions import UnknownPe


@dataclass(frozen=True)
class Cluster:
    id: int
    name: str
    pe_ids: Tuple[int, ...]


@dataclass(frozen=True)
class ProcessingElement:
    id: int
    cluster_id: int
    exec_time: Mapping[str, float]
    power: Mapping[str, float]

    @property
    def supported_task_types(self) -> FrozenSet[str]:
        return frozenset(self.exec_time)

    def supports(self, task_type: str) -> bool:
        return task_type in self.exec_time


@dataclass(frozen=True)
class CommLink:
    src_pe: int
    dst_pe: int
    latency_per_unit: float


@dataclass(frozen=True)
class ArchitectureGraph:
    """
    Immutable description of a heterogeneous platform: clusters of PEs with
    identical static profiles and a total table of per-unit link latencies.
    Built and validated by ``load_platform``; shared read-only between runs.
    """

    name: str
    task_types: Tuple[str, ...]
    clusters: Tuple[Cluster, ...]
    pes: Tuple[ProcessingElement, ...]
    links: Tuple[CommLink, ...]

    _latency: Tuple[Tuple[float, ...], ...] = field(
        init=False, repr=False, compare=False
    )
    _capable: Dict[str, Tuple[int, ...]] = field(
        init=False, repr=False, compare=False
    )
    _cluster_index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.pes)
        table: List[List[float]] = [[0.0] * n for _ in range(n)]
        for link in self.links:
            table[link.src_pe][link.dst_pe] = float(link.latency_per_unit)
        object.__setattr__(self, "_latency", tuple(tuple(row) for row in table))

        capable: Dict[str, List[int]] = {}
        for pe in self.pes:
            for task_type in sorted(pe.exec_time):
                capable.setdefault(task_type, []).append(pe.id)
        object.__setattr__(
            self, "_capable", {t: tuple(ids) for t, ids in capable.items()}
        )
        object.__setattr__(
            self, "_cluster_index", {c.name: c.id for c in self.clusters}
        )

    # --- lookups ---

    @property
    def num_pes(self) -> int:
        return len(self.pes)

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def pe(self, pe_id: int) -> ProcessingElement:
        if not isinstance(pe_id, int) or pe_id < 0 or pe_id >= len(self.pes):
            raise UnknownPe(f"PE {pe_id!r} is not defined on platform {self.name}")
        return self.pes[pe_id]

    def cluster_of(self, pe_id: int) -> Cluster:
        return self.clusters[self.pe(pe_id).cluster_id]

    def cluster_by_name(self, name: str) -> Optional[Cluster]:
        idx = self._cluster_index.get(name)
        return None if idx is None else self.clusters[idx]

    def capable_pes(self, task_type: str) -> Tuple[int, ...]:
        """PE ids able to execute ``task_type``, ascending."""
        return self._capable.get(task_type, ())

    def supports(self, pe_id: int, task_type: str) -> bool:
        return self.pe(pe_id).supports(task_type)

    def exec_time(self, pe_id: int, task_type: str) -> float:
        return self.pe(pe_id).exec_time[task_type]

    def power(self, pe_id: int, task_type: str) -> float:
        return self.pe(pe_id).power[task_type]

    def cluster_exec_time(self, cluster_id: int, task_type: str) -> Optional[float]:
        pe = self.pes[self.clusters[cluster_id].pe_ids[0]]
        return pe.exec_time.get(task_type)

    def cluster_power(self, cluster_id: int, task_type: str) -> Optional[float]:
        pe = self.pes[self.clusters[cluster_id].pe_ids[0]]
        return pe.power.get(task_type)

    def latency_per_unit(self, src: int, dst: int) -> float:
        self.pe(src)
        self.pe(dst)
        return self._latency[src][dst]


def comm_latency(arch: ArchitectureGraph, src: int, dst: int, volume: float) -> float:
    """Transfer time of ``volume`` units from PE ``src`` to PE ``dst`` (µs)."""
    if volume < 0:
        raise ValueError(f"Communication volume must be non-negative, got {volume}")
    rate = arch.latency_per_unit(src, dst)
    if src == dst:
        return 0.0
    return rate * volume
