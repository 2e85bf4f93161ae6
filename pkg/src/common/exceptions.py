# src/common/exceptions.py

from typing import Iterable, List, Optional


class ILSchedError(Exception):
    """Root of every error raised by the scheduling framework."""


class ParseError(ILSchedError):
    """A platform, DAG, trace, dataset or model document could not be parsed."""


class ValidationError(ILSchedError):
    """A document parsed but violates one or more invariants."""

    def __init__(self, message: str, violations: Optional[Iterable[str]] = None):
        self.violations: List[str] = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


class UnknownConfig(ILSchedError):
    pass


class UnknownPe(ILSchedError):
    pass


class UnknownTask(ILSchedError):
    pass


class UnknownApp(ILSchedError):
    pass


class NoCapablePe(ILSchedError):
    """No processing element on the platform supports a task type."""


class UnsupportedTask(ILSchedError):
    """A task was dispatched to a PE that cannot execute its type."""


class SchedulerError(ILSchedError):
    """Wraps failures raised from inside a scheduler decision."""


class TraceMismatch(ILSchedError):
    pass


class TaskNotReady(ILSchedError):
    pass


class EmptyDataset(ILSchedError):
    pass


class SchemaMismatch(ILSchedError):
    pass


class InsufficientData(ILSchedError):
    def __init__(self, cluster: str, rows: int, required: int):
        self.cluster = cluster
        self.rows = rows
        self.required = required
        super().__init__(
            f"Cluster '{cluster}' has {rows} training rows, at least {required} required."
        )


class InstanceTooLarge(ILSchedError):
    """Exact solver asked for a guaranteed optimum on an oversized instance."""
