from src.appgraph.graph import ApplicationGraph, TaskNode, downward_depth, validate_dag
from src.appgraph.io import app_to_document, load_app, load_app_file, save_app
from src.appgraph.suite import (
    DEFAULT_FRAME_COUNTS,
    MIX_APPS,
    SUITE,
    build_layered_app,
    builtin_app,
    builtin_suite,
    freeze_suite,
    suite_path,
)
from src.appgraph.workload import (
    ArrivalModel,
    FrameArrival,
    FrameArrivalTrace,
    WorkloadSpec,
    balanced_workload_spec,
    default_workload_spec,
    generate_trace,
    intensive_workload_spec,
    load_trace,
    load_workload_spec,
    save_trace,
)
