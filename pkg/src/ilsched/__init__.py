from src.ilsched.dagger import DaggerResult, DaggerScheduler, dagger_run
from src.ilsched.dataset import Dataset
from src.ilsched.experiments import (
    LeaveOneOutReport,
    collect_oracle_dataset,
    leave_one_out,
    make_decision_state,
    measure_saturation_rate,
)
from src.ilsched.policy import (
    FlatPolicy,
    HierarchicalPolicy,
    PolicyDecision,
    PolicyScheduler,
    evaluate_policies,
    load_policy,
    save_policy,
    split_dataset,
    train_flat,
    train_hierarchical,
)
from src.ilsched.tree import DecisionTree, constant_tree, train_tree
