"""Learned goal-regression planning: environments, oracle, models, harness."""

from .goals import (
    Atom,
    DomainSchema,
    Goal,
    GoalError,
    Predicate,
    format_goal,
    ground_atoms,
    parse_goal,
)

__all__ = [
    "Atom",
    "DomainSchema",
    "Goal",
    "GoalError",
    "Predicate",
    "format_goal",
    "ground_atoms",
    "parse_goal",
]

__version__ = "0.1.0"
