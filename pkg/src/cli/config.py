# src/cli/config.py

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Mapping, Optional

from dotenv import load_dotenv

from src.appgraph.workload import WorkloadSpec, load_workload_spec
from src.common.exceptions import ParseError, ValidationError
from src.oracle.etf import Objective
from src.features.schema import FEATURE_GROUPS

logger = logging.getLogger(__name__)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")
DEFAULT_CONFIG_PATH = os.path.join(CONFIG_DIR, "experiment.json")
DEFAULT_WORKLOAD_PATH = os.path.join(CONFIG_DIR, "workload_mix.json")

SCHEDULERS = ("oracle", "policy", "flat", "exact")


@dataclass
class ExperimentConfig:
    platform: str = "G1"
    workload: str = ""
    objective: str = Objective.PERFORMANCE.value
    scheduler: str = "oracle"
    policy_file: str = ""
    noise_pct: float = 0.0
    seeds: List[int] = field(default_factory=lambda: [0])
    injection_rates: List[float] = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 6.0])
    platforms: List[str] = field(default_factory=lambda: ["G1"])
    noise_levels: List[float] = field(default_factory=lambda: [0.0])
    output_dir: str = "results"
    pred_slots: int = 4
    depth_cluster: int = 12
    depth_pe: int = 12
    depth_flat: int = 12
    min_leaf: int = 4
    dagger_iters: int = 10
    target_pct: float = 0.02
    holdout: float = 0.2
    exact_time_limit: float = 60.0
    exact_max_tasks: int = 12
    exclude_features: List[str] = field(default_factory=list)
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        violations = []
        if self.scheduler not in SCHEDULERS:
            violations.append(f"scheduler must be one of {list(SCHEDULERS)}, got '{self.scheduler}'")
        try:
            Objective(self.objective)
        except ValueError:
            violations.append(f"unknown objective '{self.objective}'")
        if self.workload and not os.path.exists(self.workload):
            violations.append(f"workload file not found: {self.workload}")
        if self.scheduler in ("policy", "flat") and not self.policy_file:
            violations.append(f"scheduler '{self.scheduler}' needs a policy file")
        if self.policy_file and not os.path.exists(self.policy_file):
            violations.append(f"policy file not found: {self.policy_file}")
        for name in ("seeds", "injection_rates", "platforms", "noise_levels"):
            if not getattr(self, name):
                violations.append(f"sweep list '{name}' must not be empty")
        if any(r <= 0 for r in self.injection_rates):
            violations.append("injection rates must be > 0")
        if self.noise_pct < 0 or any(n < 0 for n in self.noise_levels):
            violations.append("noise levels must be >= 0")
        if not 0 <= self.holdout < 1:
            violations.append("holdout must be in [0, 1)")
        unknown_groups = set(self.exclude_features) - set(FEATURE_GROUPS)
        if unknown_groups:
            violations.append(f"unknown feature groups {sorted(unknown_groups)}")
        if self.workers < 1:
            violations.append("workers must be >= 1")
        if violations:
            raise ValidationError("Invalid experiment configuration", violations)
        return self

    @property
    def objective_kind(self) -> Objective:
        return Objective(self.objective)

    def workload_spec(self) -> WorkloadSpec:
        return load_workload_spec(self.workload or DEFAULT_WORKLOAD_PATH)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _from_document(document: Mapping[str, Any]) -> Dict[str, Any]:
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    unknown = []
    for key, value in document.items():
        name = key.lower()
        if name == "format_version":
            continue
        if name not in known:
            unknown.append(key)
            continue
        values[name] = value
    if unknown:
        raise ValidationError("Unknown configuration keys", [str(k) for k in sorted(unknown)])
    return values


def load_experiment_config(
    path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None
) -> ExperimentConfig:
    """
    Bundled defaults, then environment (.env), then the config file, then
    explicit overrides (CLI flags); ``None`` overrides are ignored.
    """
    load_dotenv()
    with open(DEFAULT_CONFIG_PATH, "r") as f:
        config = ExperimentConfig(**_from_document(json.load(f)))

    env_output = os.getenv("ILSCHED_OUTPUT_DIR")
    if env_output:
        config.output_dir = env_output
    env_workers = os.getenv("ILSCHED_WORKERS")
    if env_workers:
        try:
            config.workers = int(env_workers)
        except ValueError:
            raise ValidationError("Invalid environment", [f"ILSCHED_WORKERS={env_workers!r} is not an integer"])

    if path:
        if not os.path.exists(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        try:
            with open(path, "r") as f:
                document = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"Malformed config {path}: {e}") from e
        config = replace(config, **_from_document(document))

    if overrides:
        unknown = set(overrides) - {f.name for f in fields(ExperimentConfig)}
        if unknown:
            raise ValidationError("Unknown configuration overrides", sorted(unknown))
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})

    logger.debug(f"Experiment config: {config}")
    return config.validate()
