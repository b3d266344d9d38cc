"""Deterministic symbolic environments with single-subgoal controllers."""

from .base import ControllerResult, FailureReason, InvalidParamsError
from .gridworld import GridState, gridworld_schema
from .kitchen import KitchenState, kitchen_schema

__all__ = [
    "ControllerResult",
    "FailureReason",
    "InvalidParamsError",
    "GridState",
    "gridworld_schema",
    "KitchenState",
    "kitchen_schema",
]
