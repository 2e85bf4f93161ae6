from src.simengine.engine import SimulationEngine, run_simulation
from src.simengine.report import SimReport, aggregate_slowdown, slowdown, slowdown_table
from src.simengine.scheduler import SchedulerInterface
from src.simengine.state import (
    EventKind,
    FrameRecord,
    PredRecord,
    SimState,
    TaskInstance,
    TaskRecord,
    TaskStatus,
    dispatch,
    ready_tasks,
)
