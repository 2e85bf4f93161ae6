# src/platforms/loader.py

import json
import logging
import os
from typing import Any, Dict, List, Union

from src.common.exceptions import ParseError, UnknownConfig, ValidationError
from src.common.fileio import read_json, write_json
from src.platforms.architecture import (
    ArchitectureGraph,
    Cluster,
    CommLink,
    ProcessingElement,
)
from src.platforms.profiles import PLATFORM_CONFIGS, generate_platform_document

logger = logging.getLogger(__name__)


def _as_document(document: Union[str, Dict[str, Any]]) -> Dict[str, Any]:
    if isinstance(document, dict):
        return document
    if not isinstance(document, str):
        raise ParseError(f"Unsupported platform document type {type(document)!r}")
    try:
        parsed = json.loads(document)
    except json.JSONDecodeError as e:
        raise ParseError(f"Malformed platform document: {e}") from e
    if not isinstance(parsed, dict):
        raise ParseError("Platform document must be a JSON object")
    return parsed


def _require(doc: Dict[str, Any], key: str, kind: type):
    if key not in doc:
        raise ParseError(f"Platform document is missing '{key}'")
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(f"'{key}' must be of type {kind.__name__}")
    return value


def load_platform(document: Union[str, Dict[str, Any]]) -> ArchitectureGraph:
    """
    Parses and validates a platform description.

    Raises ParseError for malformed input and ValidationError naming every
    violated invariant (PE listed twice, heterogeneous cluster, ...).
    """
    doc = _as_document(document)
    name = str(doc.get("name", "custom"))
    task_types = _require(doc, "task_types", list)
    raw_clusters = _require(doc, "clusters", list)
    raw_pes = _require(doc, "pes", list)
    declared = set(task_types)
    violations: List[str] = []

    try:
        pes = [
            ProcessingElement(
                id=int(p["id"]),
                cluster_id=int(p["cluster_id"]),
                exec_time={str(k): float(v) for k, v in p["exec_time"].items()},
                power={str(k): float(v) for k, v in p["power"].items()},
            )
            for p in raw_pes
        ]
        clusters = [
            Cluster(id=int(c["id"]), name=str(c["name"]), pe_ids=tuple(int(i) for i in c["pe_ids"]))
            for c in raw_clusters
        ]
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise ParseError(f"Malformed PE or cluster entry: {e!r}") from e

    pes.sort(key=lambda p: p.id)
    clusters.sort(key=lambda c: c.id)

    if not pes:
        violations.append("platform declares no PEs")
    if [p.id for p in pes] != list(range(len(pes))):
        violations.append("PE ids must be dense and start at 0")
    if [c.id for c in clusters] != list(range(len(clusters))):
        violations.append("cluster ids must be dense and start at 0")
    if len({c.name for c in clusters}) != len(clusters):
        violations.append("cluster names must be unique")

    known = {p.id for p in pes}
    owner: Dict[int, int] = {}
    for cluster in clusters:
        if not cluster.pe_ids:
            violations.append(f"cluster '{cluster.name}' has no PEs")
        for pe_id in cluster.pe_ids:
            if pe_id not in known:
                violations.append(f"cluster '{cluster.name}' lists unknown PE {pe_id}")
            elif pe_id in owner:
                violations.append(
                    f"PE {pe_id} listed in clusters {owner[pe_id]} and {cluster.id}"
                )
            else:
                owner[pe_id] = cluster.id

    for pe in pes:
        if pe.id not in owner:
            violations.append(f"PE {pe.id} belongs to no cluster")
        elif owner[pe.id] != pe.cluster_id:
            violations.append(
                f"PE {pe.id} declares cluster {pe.cluster_id} but is listed in {owner[pe.id]}"
            )
        if set(pe.exec_time) != set(pe.power):
            violations.append(f"PE {pe.id} exec_time and power cover different task types")
        undeclared = set(pe.exec_time) - declared
        if undeclared:
            violations.append(f"PE {pe.id} references undeclared task types {sorted(undeclared)}")
        if any(v <= 0 for v in pe.exec_time.values()):
            violations.append(f"PE {pe.id} has a non-positive execution time")
        if any(v <= 0 for v in pe.power.values()):
            violations.append(f"PE {pe.id} has a non-positive power")

    if not violations:
        by_id = {p.id: p for p in pes}
        for cluster in clusters:
            first = by_id[cluster.pe_ids[0]]
            for pe_id in cluster.pe_ids[1:]:
                other = by_id[pe_id]
                if other.exec_time != first.exec_time or other.power != first.power:
                    violations.append(
                        f"cluster '{cluster.name}' is not homogeneous (PE {first.id} vs PE {pe_id})"
                    )

    if violations:
        raise ValidationError(f"Invalid platform '{name}'", violations)

    links = _build_links(doc, pes, violations)
    if violations:
        raise ValidationError(f"Invalid platform '{name}'", violations)

    arch = ArchitectureGraph(
        name=name,
        task_types=tuple(task_types),
        clusters=tuple(clusters),
        pes=tuple(pes),
        links=tuple(links),
    )
    logger.debug(
        f"Loaded platform '{name}': {arch.num_pes} PEs in {arch.num_clusters} clusters"
    )
    return arch


def _build_links(doc: Dict[str, Any], pes: List[ProcessingElement], violations: List[str]) -> List[CommLink]:
    """Expands link rates into a table total over ordered PE pairs."""
    rates = doc.get("link_rates", {}) or {}
    try:
        intra = float(rates.get("intra_cluster", 0.0))
        inter = float(rates.get("inter_cluster", intra))
    except (TypeError, ValueError) as e:
        raise ParseError(f"Malformed link_rates: {e!r}") from e

    table: Dict[tuple, float] = {}
    for src in pes:
        for dst in pes:
            if src.id == dst.id:
                rate = 0.0
            elif src.cluster_id == dst.cluster_id:
                rate = intra
            else:
                rate = inter
            table[(src.id, dst.id)] = rate

    for entry in doc.get("links", []) or []:
        try:
            key = (int(entry["src"]), int(entry["dst"]))
            rate = float(entry["latency_per_unit"])
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed link entry {entry!r}") from e
        if key not in table:
            violations.append(f"link {key} references an unknown PE")
            continue
        table[key] = rate

    for (src, dst), rate in table.items():
        if rate < 0:
            violations.append(f"link {src}->{dst} has negative latency {rate}")
        if src == dst and rate != 0:
            violations.append(f"self link on PE {src} must have zero latency")

    return [CommLink(src, dst, rate) for (src, dst), rate in sorted(table.items())]


def load_platform_file(path: str) -> ArchitectureGraph:
    return load_platform(read_json(path))


def builtin_platform(name: str) -> ArchitectureGraph:
    """Returns one of the bundled configurations G1..G5."""
    if name not in PLATFORM_CONFIGS:
        raise UnknownConfig(
            f"Unknown platform configuration '{name}'. Known: {sorted(PLATFORM_CONFIGS)}"
        )
    return load_platform(generate_platform_document(name))


def resolve_platform(name_or_path: str) -> ArchitectureGraph:
    """Accepts either a builtin configuration name or a platform file path."""
    if name_or_path in PLATFORM_CONFIGS:
        return builtin_platform(name_or_path)
    if os.path.exists(name_or_path):
        return load_platform_file(name_or_path)
    raise UnknownConfig(f"'{name_or_path}' is neither a builtin platform nor a file")


def platform_to_document(arch: ArchitectureGraph) -> Dict[str, Any]:
    """Serializes a platform with its explicit link table."""
    return {
        "name": arch.name,
        "task_types": list(arch.task_types),
        "clusters": [
            {"id": c.id, "name": c.name, "pe_ids": list(c.pe_ids)} for c in arch.clusters
        ],
        "pes": [
            {
                "id": p.id,
                "cluster_id": p.cluster_id,
                "exec_time": dict(sorted(p.exec_time.items())),
                "power": dict(sorted(p.power.items())),
            }
            for p in arch.pes
        ],
        "links": [
            {"src": l.src_pe, "dst": l.dst_pe, "latency_per_unit": l.latency_per_unit}
            for l in arch.links
        ],
    }


def save_platform(arch: ArchitectureGraph, path: str) -> str:
    return write_json(path, platform_to_document(arch))
