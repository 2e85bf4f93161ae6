# tests/test_dagger.py

import numpy as np
import pytest

from src.appgraph.suite import builtin_suite
from src.appgraph.workload import FrameArrival, FrameArrivalTrace, WorkloadSpec, generate_trace
from src.common.exceptions import UnknownApp
from src.features.schema import feature_schema
from src.ilsched.dagger import DaggerScheduler, dagger_run
from src.ilsched.dataset import USAGE_CLUSTER, USAGE_PE, Dataset
from src.ilsched.experiments import collect_oracle_dataset, leave_one_out
from src.ilsched.policy import HierarchicalPolicy, train_hierarchical
from src.ilsched.tree import constant_tree
from src.oracle.etf import Objective
from src.simengine.state import SimState, ready_tasks

from tests.conftest import make_app, make_platform


def pinned_policy(schema, cluster_label, pe_label):
    """Answers the same cluster and PE index for every input."""
    return HierarchicalPolicy(
        schema,
        constant_tree(cluster_label, schema.length),
        {c: constant_tree(pe_label, schema.length) for c, size in enumerate(schema.cluster_sizes) if size > 1},
    )


def one_task_state(arch, task_type):
    app = make_app({0: task_type}, name="one")
    state = SimState(arch, {"one": app})
    state.admit_frame(0, "one", 0.0)
    return state


class TestDaggerScheduler:
    def test_pe_disagreement_adds_pe_row(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = Dataset(schema)
        sched = DaggerScheduler(pinned_policy(schema, 0, 1), ds, Objective.PERFORMANCE, "dagger-1")
        state = one_task_state(toy_arch, "a")
        # oracle breaks the LITTLE tie towards PE 0
        assert sched.decide(state, ready_tasks(state)[0]) == 1
        assert (sched.cluster_rows, sched.pe_rows) == (0, 1)
        assert ds.usage().tolist() == [USAGE_PE]
        assert ds.pe_ids().tolist() == [0]

    def test_cluster_and_pe_disagreement(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = Dataset(schema)
        sched = DaggerScheduler(pinned_policy(schema, 0, 1), ds, Objective.PERFORMANCE, "dagger-1")
        state = one_task_state(toy_arch, "b")
        assert sched.decide(state, ready_tasks(state)[0]) == 1
        assert (sched.cluster_rows, sched.pe_rows) == (1, 1)
        assert sorted(ds.usage().tolist()) == sorted([USAGE_CLUSTER, USAGE_PE])
        # ACC PE 2 is the oracle's pick
        assert set(ds.pe_ids().tolist()) == {2}
        assert set(ds.cluster_labels().tolist()) == {1}
        assert set(ds.pe_labels().tolist()) == {0}

    def test_agreement_adds_nothing(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = Dataset(schema)
        sched = DaggerScheduler(pinned_policy(schema, 0, 0), ds, Objective.PERFORMANCE, "dagger-1")
        state = one_task_state(toy_arch, "a")
        assert sched.decide(state, ready_tasks(state)[0]) == 0
        assert len(ds) == 0

    def test_rows_keep_raw_features(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = Dataset(schema)
        policy = pinned_policy(schema, 0, 1)
        policy = HierarchicalPolicy(policy.schema, policy.cluster_tree, policy.pe_trees, exclude_groups=("task_identity",))
        sched = DaggerScheduler(policy, ds, Objective.PERFORMANCE, "dagger-1")
        app = make_app({0: "a", 1: "a"}, [(0, 1, 3)], name="pair")
        state = SimState(toy_arch, {"pair": app})
        state.admit_frame(0, "pair", 0.0)
        state.admit_frame(7, "pair", 0.0)
        task = ready_tasks(state)[1]
        sched.decide(state, task)
        assert ds.features()[0][schema.index("ready_order")] == 1.0
        assert ds.features()[0][schema.index("downward_depth")] == 1.0
        assert ds.to_frame()["frame_id"].tolist() == [7]


class TestDaggerRun:
    def test_single_pe_platform_converges_immediately(self):
        arch = make_platform([("solo", 1, {"a": (5.0, 1.0)})])
        app = make_app({0: "a", 1: "a"}, [(0, 1, 2)], name="pair")
        apps = {"pair": app}
        trace = FrameArrivalTrace(tuple(FrameArrival(10.0 * i, "pair", i) for i in range(3)))
        dataset = collect_oracle_dataset(arch, apps, [trace])
        policy = train_hierarchical(dataset, min_leaf=1)
        result = dagger_run(policy, arch, apps, [trace], dataset, max_iters=5, min_leaf=1)
        assert result.converged
        assert result.iterations == 1
        assert result.stats["cluster_rows_added"].sum() == result.stats["pe_rows_added"].sum() == 0
        assert len(result.dataset) == len(dataset)

    def test_stats_and_best_iteration(self, g1):
        apps = builtin_suite()
        spec = WorkloadSpec((("SC-TX", 4), ("WiFi-TX", 2)), injection_rate=3.0, seed=2)
        trace = generate_trace(spec)
        dataset = collect_oracle_dataset(g1, apps, [trace])
        start_rows = len(dataset)
        policy = pinned_policy(dataset.schema, 0, 0)
        result = dagger_run(policy, g1, apps, [trace], dataset, max_iters=3, target_pct=0.0, min_leaf=1)
        stats = result.stats
        assert list(stats.columns) == [
            "iteration",
            "dataset_rows",
            "cluster_rows_added",
            "pe_rows_added",
            "fallbacks",
            "metric",
            "oracle_metric",
            "gap",
        ]
        assert 1 <= result.iterations <= 3
        assert 1 <= result.best_iteration <= result.iterations
        assert stats["gap"].min() == pytest.approx(stats.set_index("iteration").loc[result.best_iteration, "gap"])
        assert stats["dataset_rows"].iloc[0] == start_rows
        assert len(dataset) == start_rows
        assert len(result.dataset) >= start_rows
        assert (np.diff(stats["dataset_rows"]) >= 0).all()

    def test_pinned_policy_disagrees_with_oracle(self, g1):
        apps = builtin_suite()
        trace = generate_trace(WorkloadSpec((("RangeDet", 2),), injection_rate=1.0))
        dataset = collect_oracle_dataset(g1, apps, [trace])
        policy = pinned_policy(dataset.schema, 0, 0)
        result = dagger_run(policy, g1, apps, [trace], dataset, max_iters=1, target_pct=0.0, min_leaf=1)
        first = result.stats.iloc[0]
        assert first["cluster_rows_added"] > 0
        assert result.best_iteration == 1


class TestLeaveOneOut:
    def test_small_workload(self, g1):
        apps = builtin_suite()
        specs = [WorkloadSpec((("SC-TX", 3), ("RangeDet", 3)), injection_rate=1.0)]
        report = leave_one_out("RangeDet", g1, apps, specs, min_leaf=1, dagger_iters=2)
        assert report.app == "RangeDet"
        assert report.training_rows == 3 * 8
        assert 1 <= report.iterations <= 2
        assert report.before_slowdown > 0 and report.after_slowdown > 0
        assert report.to_dict()["app"] == "RangeDet"

    def test_unknown_app(self, g1):
        with pytest.raises(UnknownApp):
            leave_one_out("Radar-9000", g1, builtin_suite(), [])
