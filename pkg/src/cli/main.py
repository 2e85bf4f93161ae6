# src/cli/main.py

import argparse
import logging
from typing import List, Optional

from src.cli import commands
from src.cli.bench import DEFAULT_ITERATIONS, DEFAULT_READY_SIZES
from src.cli.config import SCHEDULERS
from src.common.exceptions import (
    ILSchedError,
    ParseError,
    SchemaMismatch,
    UnknownApp,
    UnknownConfig,
    ValidationError,
)

logger = logging.getLogger("ilsched_cli")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CONFIG_ERRORS = (ValidationError, ParseError, UnknownConfig, UnknownApp, SchemaMismatch, FileNotFoundError)


def add_config_args(sp: argparse.ArgumentParser) -> None:
    """One flag per ExperimentConfig field; unset flags keep the config file value."""
    sp.add_argument("--config", help="Experiment config JSON (default: bundled src/configs/experiment.json)")
    sp.add_argument("--platform", help="Platform name (G1..G5) or platform JSON file")
    sp.add_argument("--workload", help="WorkloadSpec JSON (default: bundled 500-frame mix)")
    sp.add_argument("--objective", choices=["performance", "energy", "edp", "ed2p"])
    sp.add_argument("--scheduler", choices=list(SCHEDULERS))
    sp.add_argument("--policy-file", dest="policy_file", help="Trained model JSON")
    sp.add_argument("--noise-pct", dest="noise_pct", type=float, help="Gaussian runtime variation, e.g. 0.05")
    sp.add_argument("--seeds", nargs="+", type=int)
    sp.add_argument("--injection-rates", dest="injection_rates", nargs="+", type=float, help="Frames per ms")
    sp.add_argument("--platforms", nargs="+")
    sp.add_argument("--noise-levels", dest="noise_levels", nargs="+", type=float)
    sp.add_argument("--output-dir", dest="output_dir", help="Default: $ILSCHED_OUTPUT_DIR or results/")
    sp.add_argument("--pred-slots", dest="pred_slots", type=int)
    sp.add_argument("--depth-cluster", dest="depth_cluster", type=int)
    sp.add_argument("--depth-pe", dest="depth_pe", type=int)
    sp.add_argument("--depth-flat", dest="depth_flat", type=int)
    sp.add_argument("--min-leaf", dest="min_leaf", type=int)
    sp.add_argument("--dagger-iters", dest="dagger_iters", type=int)
    sp.add_argument("--target-pct", dest="target_pct", type=float)
    sp.add_argument("--holdout", type=float)
    sp.add_argument("--exact-time-limit", dest="exact_time_limit", type=float, help="Seconds per instance")
    sp.add_argument("--exact-max-tasks", dest="exact_max_tasks", type=int)
    sp.add_argument(
        "--exclude-features",
        dest="exclude_features",
        nargs="+",
        choices=["static", "dynamic", "pe_availability", "task_identity"],
        help="Feature groups masked in training and inference",
    )
    sp.add_argument("--workers", type=int, help="Parallel sweep processes (default: $ILSCHED_WORKERS or 1)")
    sp.add_argument("--out", default="", help="Output file or directory (default: under the output dir)")
    sp.add_argument("--no-progress", dest="progress", action="store_false", help="Hide progress bars")
    sp.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)",
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ilsched",
        description="Heterogeneous DAG scheduling: ETF oracle, imitation-learned policies and DAgger",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gen-dataset", help="Run the oracle over the workload sweep and write a dataset")
    add_config_args(sp)
    sp.set_defaults(func=commands.cmd_gen_dataset)

    sp = sub.add_parser("train", help="Train hierarchical and flat policies and report held-out accuracy")
    add_config_args(sp)
    sp.add_argument("--dataset", required=True, help="Dataset file from gen-dataset or dagger")
    sp.add_argument("--ablation", action="store_true", help="Add one accuracy row set per excluded feature group")
    sp.add_argument("--lenient", action="store_true", help="Constant PE policy for clusters without enough rows")
    sp.set_defaults(func=commands.cmd_train)

    sp = sub.add_parser("dagger", help="Refine a policy with oracle-labelled states it visits")
    add_config_args(sp)
    sp.add_argument("--dataset", required=True, help="Initial dataset")
    sp.set_defaults(func=commands.cmd_dagger)

    sp = sub.add_parser("simulate", help="Simulate the workload sweep under one scheduler")
    add_config_args(sp)
    sp.add_argument("--label", default="", help="Report directory name under the output dir")
    sp.add_argument("--include-tasks", dest="include_tasks", action="store_true", help="Also write per-task logs")
    sp.add_argument("--apps", nargs="+", help="Applications for --scheduler exact")
    sp.set_defaults(func=commands.cmd_simulate)

    sp = sub.add_parser("compare", help="Slowdown tables of one report directory against another")
    add_config_args(sp)
    sp.add_argument("--a", required=True, help="Report directory being measured")
    sp.add_argument("--b", required=True, help="Baseline report directory")
    sp.set_defaults(func=commands.cmd_compare)

    sp = sub.add_parser("loo", help="Leave-one-application-out training with DAgger recovery")
    add_config_args(sp)
    sp.add_argument("--apps", nargs="+", help="Applications to leave out (default: every app of the workload)")
    sp.set_defaults(func=commands.cmd_loo)

    sp = sub.add_parser("sweep", help="Policy against oracle over rates, platforms, noise levels or workloads")
    add_config_args(sp)
    sp.add_argument("--multi-workload", dest="multi_workload", type=int, default=0, help="Number of generated workloads")
    sp.add_argument("--skip-saturation", dest="skip_saturation", action="store_true")
    sp.set_defaults(func=commands.cmd_sweep)

    sp = sub.add_parser("bench-latency", help="Per-decision wall-clock latency of the oracle and a policy")
    add_config_args(sp)
    sp.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    sp.add_argument("--ready-sizes", dest="ready_sizes", nargs="+", type=int, default=list(DEFAULT_READY_SIZES))
    sp.set_defaults(func=commands.cmd_bench_latency)

    sp = sub.add_parser("gen-profiles", help="Write the builtin platforms, applications and profile table")
    add_config_args(sp)
    sp.set_defaults(func=commands.cmd_gen_profiles)

    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level, logging.INFO), format=LOG_FORMAT)
    logger.debug(f"Parsed arguments: {args}")
    try:
        args.func(args)
    except CONFIG_ERRORS as e:
        logger.error(f"{args.command}: {e}")
        raise SystemExit(2)
    except ILSchedError as e:
        logger.error(f"{args.command} failed: {e}")
        raise SystemExit(1)
    except Exception:
        logger.exception(f"{args.command} failed")
        raise SystemExit(1)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
