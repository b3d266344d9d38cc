"""Shared environment types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class InvalidParamsError(ValueError):
    pass


class FailureReason(enum.Enum):
    UNREACHABLE = "Unreachable"
    INVALID_GOAL = "InvalidGoal"


@dataclass(frozen=True)
class ControllerResult:
    """Outcome of one low-level controller invocation.

    On success, replaying ``actions`` from the input state yields a state
    where every atom of the requested goal holds. A satisfied goal yields
    success with an empty trace.
    """

    success: bool
    actions: tuple = ()
    failure_reason: FailureReason | None = field(default=None)

    def __post_init__(self):
        if self.success and self.failure_reason is not None:
            raise ValueError("successful result cannot carry a failure reason")
        if not self.success and self.failure_reason is None:
            raise ValueError("failed result must carry a failure reason")
