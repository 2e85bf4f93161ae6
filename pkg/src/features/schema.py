# src/features/schema.py

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Tuple

from src.common.exceptions import ParseError, ValidationError
from src.platforms.architecture import ArchitectureGraph

SENTINEL = -1.0
DEFAULT_PRED_SLOTS = 4

STATIC = "static"
DYNAMIC = "dynamic"

# Feature groups that can be excluded from training and inference.
GROUP_STATIC = "static"
GROUP_DYNAMIC = "dynamic"
GROUP_PE_AVAILABILITY = "pe_availability"
GROUP_TASK_IDENTITY = "task_identity"
FEATURE_GROUPS: Tuple[str, ...] = (
    GROUP_STATIC,
    GROUP_DYNAMIC,
    GROUP_PE_AVAILABILITY,
    GROUP_TASK_IDENTITY,
)

_TASK_IDENTITY = {"task_id", "app_id", "downward_depth"}


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names of one encoding, parameterized by cluster list and K."""

    names: Tuple[str, ...]
    kinds: Tuple[str, ...]
    cluster_names: Tuple[str, ...]
    cluster_sizes: Tuple[int, ...]
    pred_slots: int

    @property
    def length(self) -> int:
        return len(self.names)

    @property
    def cluster_count(self) -> int:
        return len(self.cluster_names)

    @property
    def schema_hash(self) -> str:
        payload = json.dumps(
            {
                "names": list(self.names),
                "clusters": list(self.cluster_names),
                "sizes": list(self.cluster_sizes),
                "pred_slots": self.pred_slots,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def index(self, name: str) -> int:
        return self.names.index(name)

    def group_indices(self, group: str) -> Tuple[int, ...]:
        if group == GROUP_STATIC:
            return tuple(i for i, k in enumerate(self.kinds) if k == STATIC)
        if group == GROUP_DYNAMIC:
            return tuple(i for i, k in enumerate(self.kinds) if k == DYNAMIC)
        if group == GROUP_PE_AVAILABILITY:
            return tuple(i for i, n in enumerate(self.names) if n.startswith("ready_offset_"))
        if group == GROUP_TASK_IDENTITY:
            return tuple(i for i, n in enumerate(self.names) if n in _TASK_IDENTITY)
        raise ValidationError("Unknown feature group", [f"'{group}' not in {list(FEATURE_GROUPS)}"])

    def masked_indices(self, groups) -> Tuple[int, ...]:
        return tuple(sorted({i for g in groups for i in self.group_indices(g)}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "names": list(self.names),
            "kinds": list(self.kinds),
            "cluster_names": list(self.cluster_names),
            "cluster_sizes": list(self.cluster_sizes),
            "pred_slots": self.pred_slots,
            "schema_hash": self.schema_hash,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureSchema":
        try:
            schema = cls(
                names=tuple(data["names"]),
                kinds=tuple(data["kinds"]),
                cluster_names=tuple(data["cluster_names"]),
                cluster_sizes=tuple(int(s) for s in data["cluster_sizes"]),
                pred_slots=int(data["pred_slots"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed feature schema: {e!r}") from e
        expected = data.get("schema_hash")
        if expected is not None and expected != schema.schema_hash:
            raise ParseError("Feature schema hash does not match its field list")
        return schema


def feature_schema(arch: ArchitectureGraph, pred_slots: int = DEFAULT_PRED_SLOTS) -> FeatureSchema:
    """
    Static features first (task id, app id, downward depth, per-cluster exec
    time and power, predecessor ids, app task count), then dynamic ones
    (ready-queue order, per-cluster ready offsets, predecessor clusters and
    volumes).
    """
    if pred_slots < 1:
        raise ValidationError("Invalid feature schema", [f"pred_slots must be >= 1, got {pred_slots}"])
    clusters = [c.name for c in arch.clusters]
    names: List[str] = ["task_id", "app_id", "downward_depth"]
    names += [f"exec_{c}" for c in clusters]
    names += [f"power_{c}" for c in clusters]
    names += [f"pred_id_{k}" for k in range(pred_slots)]
    names += ["app_task_count"]
    n_static = len(names)
    names += ["ready_order"]
    names += [f"ready_offset_{c}" for c in clusters]
    names += [f"pred_cluster_{k}" for k in range(pred_slots)]
    names += [f"pred_volume_{k}" for k in range(pred_slots)]
    kinds = [STATIC] * n_static + [DYNAMIC] * (len(names) - n_static)
    return FeatureSchema(
        names=tuple(names),
        kinds=tuple(kinds),
        cluster_names=tuple(clusters),
        cluster_sizes=tuple(len(c.pe_ids) for c in arch.clusters),
        pred_slots=pred_slots,
    )
