# src/ilsched/dataset.py

import json
import logging
import os
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.common.exceptions import ParseError, SchemaMismatch
from src.common.fileio import FORMAT_VERSION, ensure_parent
from src.features.schema import FeatureSchema
from src.platforms.architecture import ArchitectureGraph

logger = logging.getLogger(__name__)

HEADER_PREFIX = "#schema "

USAGE_BOTH = "both"
USAGE_CLUSTER = "cluster"
USAGE_PE = "pe"

LABEL_COLUMNS = ["cluster_label", "pe_label", "pe_id"]
META_COLUMNS = ["frame_id", "task_id", "app", "provenance", "usage"]


class Dataset:
    """
    Oracle-labelled feature rows. Every row carries the oracle cluster,
    the PE index inside that cluster and the global PE id; ``usage`` says
    which level(s) of the hierarchical policy train on it.
    """

    def __init__(self, schema: FeatureSchema, objective: str = "performance", platform: str = ""):
        self.schema = schema
        self.objective = str(objective)
        self.platform = platform
        self._features: List[np.ndarray] = []
        self._labels: List[tuple] = []
        self._meta: List[tuple] = []

    def __len__(self) -> int:
        return len(self._features)

    def add(
        self,
        values: np.ndarray,
        cluster_label: int,
        pe_label: int,
        pe_id: int,
        provenance: str = "initial",
        usage: str = USAGE_BOTH,
        frame_id: int = -1,
        task_id: int = -1,
        app: str = "",
    ) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.schema.length,):
            raise SchemaMismatch(
                f"Row of length {values.size} does not match schema length {self.schema.length}"
            )
        if not 0 <= cluster_label < self.schema.cluster_count:
            raise SchemaMismatch(f"Cluster label {cluster_label} outside the schema's clusters")
        if not 0 <= pe_label < self.schema.cluster_sizes[cluster_label]:
            raise SchemaMismatch(f"PE label {pe_label} outside cluster {cluster_label}")
        self._features.append(values.copy())
        self._labels.append((int(cluster_label), int(pe_label), int(pe_id)))
        self._meta.append((int(frame_id), int(task_id), str(app), str(provenance), str(usage)))

    def add_decisions(self, decisions: Iterable, arch: ArchitectureGraph, provenance: str = "initial") -> int:
        """Appends OracleDecision records; returns the number of rows added."""
        added = 0
        for d in decisions:
            cluster = arch.clusters[d.cluster_id]
            self.add(
                d.features.values,
                cluster_label=self.schema.cluster_names.index(cluster.name),
                pe_label=cluster.pe_ids.index(d.pe_id),
                pe_id=d.pe_id,
                provenance=provenance,
                frame_id=d.task.frame_id,
                task_id=d.task.task_id,
                app=d.task.app_name,
            )
            added += 1
        return added

    def extend(self, other: "Dataset") -> None:
        if other.schema.schema_hash != self.schema.schema_hash:
            raise SchemaMismatch("Cannot merge datasets built on different schemas")
        self._features.extend(other._features)
        self._labels.extend(other._labels)
        self._meta.extend(other._meta)

    def copy(self) -> "Dataset":
        out = Dataset(self.schema, self.objective, self.platform)
        out.extend(self)
        return out

    # --- column access ---

    def features(self) -> np.ndarray:
        if not self._features:
            return np.zeros((0, self.schema.length))
        return np.vstack(self._features)

    def _label(self, i: int) -> np.ndarray:
        return np.array([row[i] for row in self._labels], dtype=int)

    def cluster_labels(self) -> np.ndarray:
        return self._label(0)

    def pe_labels(self) -> np.ndarray:
        return self._label(1)

    def pe_ids(self) -> np.ndarray:
        return self._label(2)

    def usage(self) -> np.ndarray:
        return np.array([m[4] for m in self._meta], dtype=object)

    def provenance(self) -> np.ndarray:
        return np.array([m[3] for m in self._meta], dtype=object)

    def cluster_rows(self) -> np.ndarray:
        return np.isin(self.usage(), [USAGE_BOTH, USAGE_CLUSTER])

    def pe_rows(self, cluster_label: int) -> np.ndarray:
        return np.isin(self.usage(), [USAGE_BOTH, USAGE_PE]) & (self.cluster_labels() == cluster_label)

    def subset(self, mask: np.ndarray) -> "Dataset":
        out = Dataset(self.schema, self.objective, self.platform)
        for keep, f, l, m in zip(mask, self._features, self._labels, self._meta):
            if keep:
                out._features.append(f)
                out._labels.append(l)
                out._meta.append(m)
        return out

    def label_histogram(self) -> pd.DataFrame:
        rows = []
        labels = self.cluster_labels()
        pe_ids = self.pe_ids()
        for c, name in enumerate(self.schema.cluster_names):
            mask = labels == c
            rows.append({"cluster": name, "rows": int(mask.sum()), "distinct_pes": int(np.unique(pe_ids[mask]).size)})
        return pd.DataFrame(rows)

    # --- persistence ---

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.features(), columns=list(self.schema.names))
        labels = np.array(self._labels, dtype=int).reshape(-1, 3)
        for i, col in enumerate(LABEL_COLUMNS):
            df[col] = labels[:, i]
        for i, col in enumerate(META_COLUMNS):
            df[col] = [m[i] for m in self._meta]
        return df

    def save(self, path: str) -> str:
        """Schema header line followed by CSV rows."""
        ensure_parent(path)
        header = {
            "schema": self.schema.to_dict(),
            "objective": self.objective,
            "platform": self.platform,
        }
        df = self.to_frame()
        df.insert(0, "format_version", FORMAT_VERSION)
        with open(path, "w", newline="") as f:
            f.write(HEADER_PREFIX + json.dumps(header, sort_keys=True) + "\n")
            df.to_csv(f, index=False)
        logger.info(f"Dataset with {len(self)} rows saved to {path}")
        return path

    @classmethod
    def load(cls, path: str) -> "Dataset":
        if not os.path.exists(path):
            raise FileNotFoundError(f"Dataset not found: {path}")
        with open(path, "r") as f:
            first = f.readline()
            if not first.startswith(HEADER_PREFIX):
                raise ParseError(f"{path} does not start with a schema header")
            try:
                header = json.loads(first[len(HEADER_PREFIX):])
            except json.JSONDecodeError as e:
                raise ParseError(f"Malformed schema header in {path}: {e}") from e
            try:
                df = pd.read_csv(f, keep_default_na=False)
            except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
                raise ParseError(f"Malformed dataset rows in {path}: {e}") from e
        schema = FeatureSchema.from_dict(header["schema"])
        missing = set(schema.names) | set(LABEL_COLUMNS) | set(META_COLUMNS)
        missing -= set(df.columns)
        if missing:
            raise SchemaMismatch(f"{path} is missing columns {sorted(missing)}")
        if "format_version" in df.columns and set(df["format_version"].unique()) - {FORMAT_VERSION}:
            raise ParseError(f"{path} has an unsupported format_version")
        ds = cls(schema, header.get("objective", "performance"), header.get("platform", ""))
        X = df[list(schema.names)].to_numpy(dtype=float)
        for i, row in enumerate(df.itertuples(index=False)):
            ds._features.append(X[i])
            ds._labels.append((int(row.cluster_label), int(row.pe_label), int(row.pe_id)))
            ds._meta.append((int(row.frame_id), int(row.task_id), str(row.app), str(row.provenance), str(row.usage)))
        return ds
