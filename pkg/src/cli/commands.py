# src/cli/commands.py
# Subcommand handlers. Heavy imports stay inside the handlers so that
# --help and argument errors return quickly.

import logging
import os
import re
from dataclasses import fields
from typing import List, Tuple

import pandas as pd

from src.cli.config import ExperimentConfig, load_experiment_config
from src.common.exceptions import TraceMismatch, ValidationError
from src.common.fileio import write_csv, write_json

logger = logging.getLogger("ilsched_cli")

REPORT_STEM = re.compile(r"^rate_(?P<rate>[0-9.eE+-]+)_seed_(?P<seed>\d+)$")


def _config(args) -> ExperimentConfig:
    overrides = {f.name: getattr(args, f.name, None) for f in fields(ExperimentConfig)}
    return load_experiment_config(getattr(args, "config", None), overrides)


def _output(cfg: ExperimentConfig, explicit: str, default_name: str) -> str:
    return explicit or os.path.join(cfg.output_dir, default_name)


def _require_policy(cfg: ExperimentConfig, command: str) -> None:
    if not cfg.policy_file:
        raise ValidationError(f"'{command}' needs a trained model", ["pass --policy-file"])


def _show(title: str, df: pd.DataFrame) -> None:
    print(f"\n{title}")
    print(df.to_string(index=False))


def _rate_seed_specs(cfg: ExperimentConfig):
    spec = cfg.workload_spec()
    return spec, [spec.with_rate(r).with_seed(s) for r in cfg.injection_rates for s in cfg.seeds]


def cmd_gen_dataset(args):
    from src.appgraph.suite import builtin_suite
    from src.appgraph.workload import generate_trace
    from src.ilsched.experiments import collect_oracle_dataset
    from src.platforms.loader import resolve_platform

    cfg = _config(args)
    spec, specs = _rate_seed_specs(cfg)
    arch = resolve_platform(cfg.platform)
    apps = builtin_suite(spec.apps)
    traces = [generate_trace(s) for s in specs]
    logger.info(
        f"===== Starting dataset generation: {len(traces)} traces, {spec.total_frames} frames each, "
        f"objective {cfg.objective}, platform {arch.name} ====="
    )
    dataset = collect_oracle_dataset(
        arch,
        apps,
        traces,
        cfg.objective_kind,
        pred_slots=cfg.pred_slots,
        noise_pct=cfg.noise_pct,
        seed=cfg.seeds[0],
        progress=args.progress,
    )
    path = dataset.save(_output(cfg, args.out, f"dataset_{cfg.objective}.csv"))
    print(f"Dataset rows: {len(dataset)} -> {path}")
    _show("Label histogram", dataset.label_histogram())


def _train_pair(dataset, cfg: ExperimentConfig, exclude: List[str], strict: bool):
    from src.ilsched.policy import train_flat, train_hierarchical

    hier = train_hierarchical(
        dataset, cfg.depth_cluster, cfg.depth_pe, cfg.min_leaf, exclude_groups=exclude, strict=strict
    )
    flat = train_flat(dataset, cfg.depth_flat, cfg.min_leaf, exclude_groups=exclude)
    return hier, flat


def cmd_train(args):
    from src.features.schema import FEATURE_GROUPS
    from src.ilsched.dataset import Dataset
    from src.ilsched.policy import evaluate_policies, save_policy, split_dataset

    cfg = _config(args)
    dataset = Dataset.load(args.dataset)
    strict = not args.lenient
    train, test = split_dataset(dataset, cfg.holdout, seed=cfg.seeds[0])
    logger.info(f"===== Starting training: {len(train)} train / {len(test)} held-out rows =====")

    rows = [(cfg.exclude_features, "+".join(cfg.exclude_features) or "none")]
    if args.ablation:
        rows += [([group], group) for group in FEATURE_GROUPS if [group] != cfg.exclude_features]
    tables = []
    for exclude, label in rows:
        hier, flat = _train_pair(train, cfg, exclude, strict)
        table = evaluate_policies(hier, flat, train, test)
        table.insert(0, "excluded", label)
        tables.append(table)
    accuracy = pd.concat(tables, ignore_index=True)

    hier, flat = _train_pair(dataset, cfg, cfg.exclude_features, strict)
    model_path = save_policy(hier, _output(cfg, args.out, f"model_{dataset.objective}.json"))
    flat_path = save_policy(flat, os.path.splitext(model_path)[0] + "_flat.json")
    table_path = write_csv(os.path.splitext(model_path)[0] + "_accuracy.csv", accuracy)

    _show("Held-out accuracy", accuracy)
    print(f"\nModel: {model_path}\nFlat baseline: {flat_path}\nAccuracy table: {table_path}")


def cmd_dagger(args):
    from src.appgraph.suite import builtin_suite
    from src.appgraph.workload import generate_trace
    from src.ilsched.dataset import Dataset
    from src.ilsched.dagger import dagger_run
    from src.ilsched.policy import HierarchicalPolicy, load_policy, save_policy, train_hierarchical
    from src.platforms.loader import resolve_platform

    cfg = _config(args)
    dataset = Dataset.load(args.dataset)
    if cfg.policy_file:
        policy = load_policy(cfg.policy_file, dataset.schema)
        if not isinstance(policy, HierarchicalPolicy):
            raise ValidationError("DAgger needs a hierarchical model", [f"{cfg.policy_file} is {policy.kind}"])
    else:
        policy = train_hierarchical(
            dataset, cfg.depth_cluster, cfg.depth_pe, cfg.min_leaf,
            exclude_groups=cfg.exclude_features, strict=False,
        )
    spec, specs = _rate_seed_specs(cfg)
    arch = resolve_platform(cfg.platform)
    result = dagger_run(
        policy,
        arch,
        builtin_suite(spec.apps),
        [generate_trace(s) for s in specs],
        dataset,
        objective=cfg.objective_kind,
        max_iters=cfg.dagger_iters,
        target_pct=cfg.target_pct,
        depth_cluster=cfg.depth_cluster,
        depth_pe=cfg.depth_pe,
        min_leaf=cfg.min_leaf,
        noise_pct=cfg.noise_pct,
        seed=cfg.seeds[0],
        progress=args.progress,
    )
    model_path = save_policy(result.policy, _output(cfg, args.out, f"model_{cfg.objective}_dagger.json"))
    stem = os.path.splitext(model_path)[0]
    write_csv(f"{stem}_stats.csv", result.stats)
    result.dataset.save(f"{stem}_dataset.csv")

    _show("DAgger iterations", result.stats)
    status = "reached" if result.converged else "did not reach"
    print(
        f"\nSelected iteration {result.best_iteration}; {status} the {cfg.target_pct:.2%} target. "
        f"Model: {model_path}"
    )


def _make_scheduler(cfg: ExperimentConfig):
    from src.ilsched.policy import PolicyScheduler, load_policy
    from src.oracle.etf import ETFScheduler

    if cfg.scheduler == "oracle":
        return ETFScheduler(cfg.objective_kind)
    _require_policy(cfg, "simulate")
    policy = load_policy(cfg.policy_file)
    if policy.kind != ("flat" if cfg.scheduler == "flat" else "hierarchical"):
        raise ValidationError(
            "Model kind does not match the scheduler", [f"{cfg.policy_file} is {policy.kind}, scheduler is {cfg.scheduler}"]
        )
    return PolicyScheduler(policy)


def _simulate_exact(cfg: ExperimentConfig, args) -> None:
    from src.appgraph.suite import builtin_app
    from src.oracle.exact import exact_schedule
    from src.platforms.loader import resolve_platform

    arch = resolve_platform(cfg.platform)
    names = args.apps or list(cfg.workload_spec().apps)
    rows = []
    for name in names:
        app = builtin_app(name)
        result = exact_schedule(
            app, arch, time_limit=cfg.exact_time_limit, max_tasks=cfg.exact_max_tasks,
            anytime=app.num_tasks > cfg.exact_max_tasks,
        )
        rows.append(
            {
                "app": name,
                "tasks": app.num_tasks,
                "makespan_us": result.makespan,
                "optimal": result.optimal,
                "etf_makespan_us": result.etf_makespan,
                "etf_gap": result.etf_gap,
                "nodes": result.nodes,
            }
        )
    table = pd.DataFrame(rows)
    path = write_csv(os.path.join(cfg.output_dir, f"exact_{arch.name}.csv"), table)
    _show(f"Single-frame exact schedules on {arch.name}", table)
    print(f"\nSaved {path}")


def cmd_simulate(args):
    from src.appgraph.suite import builtin_suite
    from src.appgraph.workload import generate_trace
    from src.platforms.loader import resolve_platform
    from src.simengine.engine import run_simulation

    cfg = _config(args)
    if cfg.scheduler == "exact":
        _simulate_exact(cfg, args)
        return
    spec = cfg.workload_spec()
    arch = resolve_platform(cfg.platform)
    apps = builtin_suite(spec.apps)
    out_dir = os.path.join(cfg.output_dir, args.label or f"{cfg.scheduler}_{cfg.objective}_{arch.name}")
    rows = []
    for rate in cfg.injection_rates:
        for seed in cfg.seeds:
            trace = generate_trace(spec.with_rate(rate).with_seed(seed))
            report = run_simulation(
                arch, apps, trace, _make_scheduler(cfg), noise_pct=cfg.noise_pct, seed=seed, progress=args.progress
            )
            report.save(out_dir, f"rate_{rate:g}_seed_{seed}", include_tasks=args.include_tasks)
            rows.append({"injection_rate": rate, "seed": seed, **report.aggregates()})
    _show(f"Simulation results ({out_dir})", pd.DataFrame(rows))


def _report_stems(directory: str) -> List[str]:
    if not os.path.isdir(directory):
        raise FileNotFoundError(f"Report directory not found: {directory}")
    stems = []
    for name in sorted(os.listdir(directory)):
        stem, ext = os.path.splitext(name)
        if ext == ".json" and os.path.exists(os.path.join(directory, f"{stem}_frames.csv")):
            stems.append(stem)
    return stems


def compare_reports(dir_a: str, dir_b: str) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Per-app slowdown of the reports in ``dir_a`` against their namesakes in ``dir_b``."""
    from src.simengine.report import SimReport, slowdown_table

    common = [s for s in _report_stems(dir_a) if s in set(_report_stems(dir_b))]
    if not common:
        raise TraceMismatch(f"No report in {dir_a} has a counterpart in {dir_b}")
    tables = []
    for stem in common:
        table = slowdown_table(SimReport.load(dir_a, stem), SimReport.load(dir_b, stem))
        match = REPORT_STEM.match(stem)
        table.insert(0, "seed", int(match["seed"]) if match else -1)
        table.insert(0, "injection_rate", float(match["rate"]) if match else float("nan"))
        table.insert(0, "report", stem)
        tables.append(table)
    detail = pd.concat(tables, ignore_index=True)
    overall = detail[detail["app"] == "ALL"]
    per_rate = (
        overall.groupby("injection_rate", dropna=False, sort=True)[["slowdown", "aggregate_slowdown"]]
        .mean()
        .reset_index()
    )
    total = pd.DataFrame(
        [{
            "injection_rate": float("nan"),
            "slowdown": float(overall["slowdown"].mean()),
            "aggregate_slowdown": float(overall["aggregate_slowdown"].mean()),
        }]
    )
    return detail, pd.concat([per_rate, total], ignore_index=True)


def cmd_compare(args):
    cfg = _config(args)
    detail, summary = compare_reports(args.a, args.b)
    out = _output(cfg, args.out, "compare.csv")
    write_csv(out, detail)
    summary_path = write_csv(os.path.splitext(out)[0] + "_summary.csv", summary)
    _show(f"Slowdown of {args.a} against {args.b} (last row: all rates)", summary)
    print(f"\nSaved {out} and {summary_path}")


def cmd_loo(args):
    from src.appgraph.suite import builtin_suite
    from src.ilsched.experiments import leave_one_out
    from src.platforms.loader import resolve_platform

    cfg = _config(args)
    spec, specs = _rate_seed_specs(cfg)
    arch = resolve_platform(cfg.platform)
    apps = builtin_suite(spec.apps)
    rows = []
    for name in args.apps or list(spec.apps):
        report = leave_one_out(
            name,
            arch,
            apps,
            specs,
            cfg.objective_kind,
            pred_slots=cfg.pred_slots,
            depth_cluster=cfg.depth_cluster,
            depth_pe=cfg.depth_pe,
            min_leaf=cfg.min_leaf,
            dagger_iters=cfg.dagger_iters,
            target_pct=cfg.target_pct,
            progress=args.progress,
        )
        rows.append(report.to_dict())
    table = pd.DataFrame(rows)
    path = write_csv(_output(cfg, args.out, f"loo_{cfg.objective}.csv"), table)
    _show("Leave-one-out slowdown before and after DAgger", table)
    print(f"\nSaved {path}")


def _sweep_workloads(cfg: ExperimentConfig, multi: int):
    from src.appgraph.workload import balanced_workload_spec, intensive_workload_spec

    spec = cfg.workload_spec()
    if not multi:
        return [("mix", spec.with_rate(rate)) for rate in cfg.injection_rates]
    kinds = [f"intensive-{app}" for app in spec.apps] + ["balanced"]
    workloads = []
    for i in range(multi):
        kind = kinds[i % len(kinds)]
        rate = cfg.injection_rates[i % len(cfg.injection_rates)]
        if kind == "balanced":
            wspec = balanced_workload_spec(rate, total_frames=spec.total_frames, apps=spec.apps)
        else:
            wspec = intensive_workload_spec(
                kind.split("-", 1)[1], rate, total_frames=spec.total_frames, apps=spec.apps
            )
        workloads.append((f"{kind}#{i}", wspec))
    return workloads


def cmd_sweep(args):
    from src.appgraph.suite import builtin_suite
    from src.cli.runner import SweepJob, run_jobs, save_sweep, summarize_sweep
    from src.ilsched.experiments import measure_saturation_rate
    from src.platforms.loader import resolve_platform

    cfg = _config(args)
    _require_policy(cfg, "sweep")
    out_dir = _output(cfg, args.out, "sweep")
    jobs = []
    for platform in cfg.platforms:
        for label, wspec in _sweep_workloads(cfg, args.multi_workload):
            for noise in cfg.noise_levels:
                for seed in cfg.seeds:
                    jobs.append(
                        SweepJob(
                            job_id=len(jobs),
                            platform=platform,
                            workload=label,
                            spec=wspec.with_seed(seed).to_dict(),
                            noise_pct=noise,
                            seed=seed,
                            policy_path=os.path.abspath(cfg.policy_file),
                            objective=cfg.objective,
                            output_dir=out_dir,
                        )
                    )
    results = run_jobs(jobs, workers=cfg.workers, progress=args.progress)

    saturation = None
    if not args.skip_saturation:
        spec = cfg.workload_spec()
        apps = builtin_suite(spec.apps)
        saturation = {}
        for platform in cfg.platforms:
            arch = resolve_platform(platform)
            saturation[arch.name] = measure_saturation_rate(arch, apps, spec, cfg.objective_kind)
    summary = summarize_sweep(results, saturation)
    paths = save_sweep(results, summary, out_dir, jobs)
    _show("Policy against oracle", summary)
    print(f"\nSaved {paths['runs']} and {paths['summary']}")


def cmd_bench_latency(args):
    from src.appgraph.suite import builtin_suite
    from src.cli.bench import bench_latency
    from src.ilsched.policy import load_policy, model_size_kb
    from src.platforms.loader import resolve_platform

    cfg = _config(args)
    _require_policy(cfg, "bench-latency")
    policy = load_policy(cfg.policy_file)
    arch = resolve_platform(cfg.platform)
    apps = builtin_suite(cfg.workload_spec().apps)
    table = bench_latency(policy, arch, apps, args.ready_sizes, args.iterations, cfg.seeds[0], args.progress)
    out = _output(cfg, args.out, "bench_latency.csv")
    write_csv(out, table)
    size_kb = model_size_kb(cfg.policy_file)
    write_json(
        os.path.splitext(out)[0] + ".json",
        {
            "platform": arch.name,
            "model": os.path.basename(cfg.policy_file),
            "model_kb": size_kb,
            "rows": table.to_dict(orient="records"),
        },
    )
    _show(f"Decision latency on {arch.name}", table)
    print(f"\nModel size: {size_kb:.1f} KB")


def cmd_gen_profiles(args):
    from src.appgraph.io import save_app
    from src.appgraph.suite import SUITE, builtin_app
    from src.platforms.loader import builtin_platform, save_platform
    from src.platforms.profiles import PLATFORM_CONFIGS, generate_profile_table

    cfg = _config(args)
    out_dir = _output(cfg, args.out, "profiles")
    for name in PLATFORM_CONFIGS:
        save_platform(builtin_platform(name), os.path.join(out_dir, "platforms", f"{name}.json"))
    for name in SUITE:
        save_app(builtin_app(name), os.path.join(out_dir, "apps", f"{name}.json"))
    rows = [
        {"cluster_kind": kind, "task_type": task_type, "exec_us": exec_us, "power_mw": power_mw}
        for kind, table in generate_profile_table().items()
        for task_type, (exec_us, power_mw) in sorted(table.items())
    ]
    path = write_csv(os.path.join(out_dir, "profiles.csv"), pd.DataFrame(rows))
    print(f"Wrote {len(PLATFORM_CONFIGS)} platforms, {len(SUITE)} applications and {path}")
