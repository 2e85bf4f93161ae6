from src.oracle.etf import (
    ETFScheduler,
    Objective,
    OracleDecision,
    RecordingOracleScheduler,
    assignment_cost,
    etf_decide,
    oracle_schedule_step,
)
from src.oracle.exact import ExactResult, exact_schedule, single_frame_etf
