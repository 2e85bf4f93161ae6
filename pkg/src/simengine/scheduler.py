# src/simengine/scheduler.py

import logging
from abc import ABC, abstractmethod
from typing import Sequence, Tuple

from src.simengine.state import SimState, TaskInstance


class SchedulerInterface(ABC):
    """
    Abstract base for everything the simulator can call at a ready event.

    Subclasses implement ``decide`` (one task -> one PE). Schedulers that
    choose the task as well as the PE (ETF scans every ready pair) override
    ``next_assignment``.
    """

    name = "base"

    def __init__(self):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.fallback_count = 0

    def reset(self, state: SimState) -> None:
        """Called once before the first decision of a run."""
        self.fallback_count = 0

    @abstractmethod
    def decide(self, state: SimState, task: TaskInstance) -> int:
        """Returns the id of a PE that supports ``task``."""

    def next_assignment(
        self, state: SimState, ready: Sequence[TaskInstance]
    ) -> Tuple[TaskInstance, int]:
        task = ready[0]
        return task, self.decide(state, task)
