# tests/test_policy.py

import numpy as np
import pytest

from src.appgraph.suite import builtin_suite
from src.appgraph.workload import WorkloadSpec, generate_trace
from src.common.exceptions import InsufficientData, ParseError, SchemaMismatch
from src.features.extractor import FeatureExtractor
from src.features.schema import GROUP_PE_AVAILABILITY, feature_schema
from src.ilsched.dataset import USAGE_PE, Dataset
from src.ilsched.experiments import collect_oracle_dataset
from src.ilsched.policy import (
    FALLBACK_ETF,
    HierarchicalPolicy,
    PolicyDecision,
    PolicyScheduler,
    evaluate_policies,
    load_policy,
    model_size_kb,
    save_policy,
    split_dataset,
    train_flat,
    train_hierarchical,
)
from src.ilsched.tree import constant_tree, train_tree
from src.oracle.etf import RecordingOracleScheduler
from src.platforms.loader import builtin_platform
from src.simengine.engine import run_simulation
from src.simengine.state import SimState, ready_tasks

from tests.conftest import make_app, make_platform


def constant_dataset(schema, cluster_label, pe_label, pe_id, rows=20, seed=0):
    rng = np.random.default_rng(seed)
    ds = Dataset(schema)
    for _ in range(rows):
        ds.add(rng.uniform(0, 50, schema.length), cluster_label, pe_label, pe_id)
    return ds


@pytest.fixture
def toy_state(toy_arch, fig1_app):
    state = SimState(toy_arch, {fig1_app.name: fig1_app})
    state.admit_frame(0, fig1_app.name, 0.0)
    return state


@pytest.fixture(scope="module")
def g1_dataset():
    g1 = builtin_platform("G1")
    spec = WorkloadSpec((("SC-TX", 6), ("RangeDet", 6), ("WiFi-TX", 2)), injection_rate=2.0)
    return collect_oracle_dataset(g1, builtin_suite(), [generate_trace(spec)])


class TestDataset:
    def test_rejects_wrong_length(self, toy_arch):
        ds = Dataset(feature_schema(toy_arch))
        with pytest.raises(SchemaMismatch):
            ds.add(np.zeros(3), 0, 0, 0)

    def test_rejects_pe_outside_cluster(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = Dataset(schema)
        with pytest.raises(SchemaMismatch):
            ds.add(np.zeros(schema.length), 0, 2, 2)

    def test_one_row_per_oracle_decision(self, g1):
        spec = WorkloadSpec((("SC-TX", 3),), injection_rate=1.0)
        sched = RecordingOracleScheduler(FeatureExtractor(feature_schema(g1)))
        run_simulation(g1, builtin_suite(), generate_trace(spec), sched)
        ds = Dataset(feature_schema(g1), platform=g1.name)
        assert ds.add_decisions(sched.decisions, g1) == 24
        for c, k, pe in zip(ds.cluster_labels(), ds.pe_labels(), ds.pe_ids()):
            assert g1.clusters[c].pe_ids[k] == pe

    def test_save_and_load(self, tmp_path, toy_arch):
        schema = feature_schema(toy_arch)
        ds = constant_dataset(schema, 1, 1, 3, rows=5)
        ds.add(np.ones(schema.length), 0, 0, 0, provenance="dagger-1", usage=USAGE_PE, app="fig1")
        path = ds.save(str(tmp_path / "ds.csv"))
        with open(path) as f:
            assert f.readline().startswith("#schema ")
        again = Dataset.load(path)
        assert len(again) == 6
        np.testing.assert_allclose(again.features(), ds.features())
        assert again.usage().tolist() == ds.usage().tolist()
        assert again.schema == schema

    def test_load_without_header(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParseError):
            Dataset.load(str(path))

    def test_label_histogram(self, g1_dataset):
        hist = g1_dataset.label_histogram()
        assert hist["rows"].sum() == len(g1_dataset)
        assert list(hist["cluster"]) == ["LITTLE", "big", "MatMul", "FFT", "Decoder"]


class TestTraining:
    def test_constant_labels_give_constant_policy(self, toy_arch, toy_state):
        ds = constant_dataset(feature_schema(toy_arch), 0, 1, 1)
        policy = train_hierarchical(ds, min_leaf=1, strict=False)
        decision = policy.decide(toy_state, ready_tasks(toy_state)[0])
        assert decision.pe_id == 1 and decision.fallback is None

    def test_strict_mode_needs_rows_per_cluster(self, toy_arch):
        ds = constant_dataset(feature_schema(toy_arch), 0, 1, 1)
        with pytest.raises(InsufficientData):
            train_hierarchical(ds, min_leaf=1, strict=True)

    def test_lenient_mode_uses_constant_tree(self, toy_arch):
        ds = constant_dataset(feature_schema(toy_arch), 0, 1, 1)
        policy = train_hierarchical(ds, min_leaf=1, strict=False)
        assert policy.pe_trees[1].node_count == 1
        assert policy.predict_pe(1, np.zeros(ds.schema.length)) == 0

    def test_single_pe_clusters_need_no_tree(self):
        arch = make_platform([("solo", 1, {"a": (1.0, 1.0)})])
        ds = constant_dataset(feature_schema(arch), 0, 0, 0)
        policy = train_hierarchical(ds, min_leaf=4)
        assert policy.pe_trees == {}

    def test_flat_policy_on_single_pe(self):
        arch = make_platform([("solo", 1, {"a": (1.0, 1.0)})])
        app = make_app({0: "a", 1: "a"}, [(0, 1, 1)], name="pair")
        ds = constant_dataset(feature_schema(arch), 0, 0, 0)
        policy = train_flat(ds, min_leaf=1)
        state = SimState(arch, {"pair": app})
        state.admit_frame(0, "pair", 0.0)
        assert policy.kind == "flat"
        assert policy.decide(state, ready_tasks(state)[0]).pe_id == 0

    def test_trained_policy_runs_workload(self, g1, g1_dataset):
        policy = train_hierarchical(g1_dataset, min_leaf=1, strict=False)
        spec = WorkloadSpec((("SC-TX", 4), ("RangeDet", 4)), injection_rate=2.0, seed=9)
        sched = PolicyScheduler(policy)
        report = run_simulation(g1, builtin_suite(), generate_trace(spec), sched)
        assert sched.name == "il-hierarchical-performance"
        assert report.num_frames == 8

    def test_excluded_groups_are_masked(self, g1_dataset):
        policy = train_hierarchical(g1_dataset, min_leaf=1, strict=False, exclude_groups=(GROUP_PE_AVAILABILITY,))
        masked = set(g1_dataset.schema.group_indices(GROUP_PE_AVAILABILITY))
        used = {int(f) for f in policy.cluster_tree.feature if f >= 0}
        assert not used & masked


class TestPlatformTransfer:
    def test_missing_cluster_falls_back_to_etf(self, g1):
        schema = feature_schema(g1)
        fft = g1.cluster_by_name("FFT")
        ds = constant_dataset(schema, fft.id, 0, fft.pe_ids[0])
        policy = train_hierarchical(ds, min_leaf=1, strict=False)
        g5 = builtin_platform("G5")
        state = SimState(g5, builtin_suite(("RangeDet",)))
        state.admit_frame(0, "RangeDet", 0.0)
        decision = policy.decide(state, ready_tasks(state)[0])
        assert decision.fallback == FALLBACK_ETF
        assert g5.supports(decision.pe_id, ready_tasks(state)[0].task_type)

    def test_g5_run_counts_fallbacks(self, g1):
        schema = feature_schema(g1)
        fft = g1.cluster_by_name("FFT")
        policy = train_hierarchical(constant_dataset(schema, fft.id, 0, fft.pe_ids[0]), min_leaf=1, strict=False)
        spec = WorkloadSpec((("RangeDet", 2),), injection_rate=1.0)
        report = run_simulation(builtin_platform("G5"), builtin_suite(), generate_trace(spec), PolicyScheduler(policy))
        assert report.fallbacks == report.decisions == 14


class TestEvaluation:
    def test_split_sizes(self, toy_arch):
        ds = constant_dataset(feature_schema(toy_arch), 0, 1, 1, rows=50)
        train, test = split_dataset(ds, holdout=0.2, seed=0)
        assert (len(train), len(test)) == (40, 10)

    def test_split_stratifies_on_cluster(self, toy_arch):
        schema = feature_schema(toy_arch)
        ds = constant_dataset(schema, 0, 0, 0, rows=38)
        ds.extend(constant_dataset(schema, 0, 1, 1, rows=1, seed=1))
        ds.extend(constant_dataset(schema, 1, 0, 2, rows=11, seed=2))
        _, test = split_dataset(ds, holdout=0.2, seed=3)
        assert np.bincount(test.cluster_labels(), minlength=2).tolist() == [8, 2]

    def test_constant_data_scores_one(self, toy_arch):
        ds = constant_dataset(feature_schema(toy_arch), 0, 1, 1, rows=50)
        train, test = split_dataset(ds)
        hier = train_hierarchical(train, min_leaf=1, strict=False)
        flat = train_flat(train, min_leaf=1)
        table = evaluate_policies(hier, flat, train, test).set_index("policy")
        for name in ("cluster", "pe:LITTLE", "composite", "flat"):
            assert table.loc[name, "test_accuracy"] == 1.0
        assert np.isnan(table.loc["pe:ACC", "test_accuracy"])

    def test_fitted_tree_beats_chance(self, g1_dataset):
        train, test = split_dataset(g1_dataset, holdout=0.2)
        hier = train_hierarchical(train, min_leaf=1, strict=False)
        table = evaluate_policies(hier, None, train, test).set_index("policy")
        assert table.loc["cluster", "train_accuracy"] >= 0.8
        assert "flat" not in table.index


class TestPersistence:
    def test_round_trip(self, tmp_path, g1_dataset):
        policy = train_hierarchical(g1_dataset, min_leaf=1, strict=False)
        path = save_policy(policy, str(tmp_path / "model.json"))
        again = load_policy(path, expected_schema=g1_dataset.schema)
        X = g1_dataset.features()
        assert [again.predict_cluster(x) for x in X] == [policy.predict_cluster(x) for x in X]
        assert set(again.pe_trees) == set(policy.pe_trees)
        assert model_size_kb(path) > 0

    def test_schema_mismatch(self, tmp_path, g1, g1_dataset):
        policy = train_flat(g1_dataset, min_leaf=1)
        path = save_policy(policy, str(tmp_path / "flat.json"))
        with pytest.raises(SchemaMismatch):
            load_policy(path, expected_schema=feature_schema(g1, pred_slots=3))

    def test_direct_construction(self, toy_arch):
        schema = feature_schema(toy_arch)
        policy = HierarchicalPolicy(schema, constant_tree(1, schema.length), {})
        assert policy.kind == "hierarchical"
        assert policy.to_dict()["pe_trees"] == {}


class TestPinnedDecision:
    @pytest.fixture
    def offset_policy(self, toy_arch):
        # LITTLE picks its second PE once the accelerators are 5us or more behind
        schema = feature_schema(toy_arch, pred_slots=2)
        X = np.zeros((4, schema.length))
        X[:, schema.index("ready_offset_ACC")] = [0.0, 2.0, 8.0, 10.0]
        pe_tree = train_tree(X, [0, 0, 1, 1], min_leaf=1)
        return HierarchicalPolicy(
            schema, constant_tree(0, schema.length), {0: pe_tree, 1: constant_tree(0, schema.length)}
        )

    def test_pe_tree_split(self, offset_policy):
        tree = offset_policy.pe_trees[0]
        assert tree.feature[0] == offset_policy.schema.index("ready_offset_ACC")
        assert tree.threshold[0] == 5.0

    def test_mid_run_decision(self, offset_policy, mid_run_state):
        decision = offset_policy.decide(mid_run_state, ready_tasks(mid_run_state)[0])
        assert decision == PolicyDecision(pe_id=1, cluster_id=0)

    def test_decision_follows_accelerator_offset(self, offset_policy, mid_run_state):
        mid_run_state.pe_ready_time[2] = mid_run_state.pe_ready_time[3] = 24.0
        decision = offset_policy.decide(mid_run_state, ready_tasks(mid_run_state)[0])
        assert decision == PolicyDecision(pe_id=0, cluster_id=0)
