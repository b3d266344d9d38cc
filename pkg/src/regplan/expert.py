"""Hand-coded expert: demonstrations, ground-truth heads and precondition oracle.

The expert solves tasks by running the regression planner with oracle
heads backed by each domain's rule tables: satisfaction is evaluated in
the simulator, reachability is probed by running the controller on a
copy, dependencies and single-subgoal preconditions come from the rule
tables, and multi-subgoal preconditions are derived by regressing the
goal through the last step of a fresh expert rollout. Demonstrations are
therefore exactly the trajectories the oracle-headed planner produces,
which keeps labels, oracle and planner mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .goals import Atom, Goal, ground_atoms
from .planner import PlanResult, Termination, regression_planning


class UnsolvableError(Exception):
    pass


class NoPreconditionError(Exception):
    """The goal is already reachable, or no precondition can make it so."""


@dataclass(frozen=True)
class DependencyGraph:
    """Directed dependencies among the subgoals of one goal."""

    nodes: tuple[Atom, ...]
    edges: tuple[tuple[int, int], ...]  # (i, j): nodes[i] depends on nodes[j]


@dataclass
class DemoStep:
    state: object  # environment state before executing this step's goal
    goal: Goal
    serves: tuple[int, ...]  # indices into the final goal's atoms


@dataclass
class DemoTrajectory:
    domain: str
    task: str
    final_goal: Goal
    steps: list[DemoStep]
    dependency_edges: tuple[tuple[int, int], ...]
    final_state: object = None
    demo_id: int = -1


class OracleHeads:
    """Ground-truth heads bound to one environment state."""

    def __init__(self, domain, state):
        self.domain = domain
        self.state = state
        self._slots = {a.key: i for i, a in enumerate(ground_atoms(domain.schema))}

    def slot_index(self, atom: Atom) -> int:
        return self._slots.get(atom.key, len(self._slots))

    def satisfied(self, ents, atom: Atom) -> float:
        return 1.0 if self.domain.evaluate(self.state, atom) else 0.0

    def dependency(self, ents, atoms: tuple[Atom, ...]) -> np.ndarray:
        dep = np.zeros((len(atoms), len(atoms)))
        for i, j in self.domain.dependency_edges(self.state, atoms):
            dep[i, j] = 1.0
        return dep

    def reachable(self, ents, goal: Goal) -> float:
        result, _ = self.domain.execute(self.state, goal)
        return 1.0 if result.success else 0.0

    def precondition(self, ents, goal: Goal) -> Goal:
        try:
            return oracle_precondition(self.domain, self.state, goal)
        except NoPreconditionError:
            return Goal()


def oracle_dependencies(domain, goal: Goal, state) -> DependencyGraph:
    """Ground-truth dependency graph over the subgoals of ``goal``."""
    edges = domain.dependency_edges(state, goal.atoms)
    return DependencyGraph(goal.atoms, tuple(sorted(edges)))


def oracle_precondition(domain, state, goal: Goal) -> Goal:
    """The minimal goal that must hold before ``goal`` is controller-reachable.

    Single unsatisfied subgoals read the domain rule table directly. For
    larger goals the expert plan is regressed through its last step: the
    precondition keeps every other unsatisfied subgoal and swaps the last
    -achieved one for its own currently-unmet requirements.

    Raises NoPreconditionError when the goal is reachable already (or
    fully satisfied), or when no precondition can ever make it reachable.
    """
    unsat = [a for a in goal.atoms if not domain.evaluate(state, a)]
    if not unsat:
        raise NoPreconditionError("goal already satisfied")
    if len(unsat) == 1:
        unmet = _unmet_requirements(domain, state, unsat[0])
        if unmet is None:
            raise NoPreconditionError(f"{unsat[0]} cannot be made reachable")
        if not unmet:
            raise NoPreconditionError(f"{unsat[0]} is reachable already")
        return Goal(unmet)
    steps, _ = _solve(domain, state, Goal(unsat))
    if not steps:
        raise NoPreconditionError("goal already satisfied")
    last_goal = steps[-1].goal
    last_keys = {a.key for a in last_goal.atoms}
    remainder = [a for a in unsat if a.key not in last_keys]
    extras: list[Atom] = []
    for a in last_goal.atoms:
        unmet = _unmet_requirements(domain, state, a)
        for r in unmet or []:
            if r.key not in {x.key for x in remainder + extras}:
                extras.append(r)
    return Goal(remainder + extras)


def _unmet_requirements(domain, state, atom: Atom) -> list[Atom] | None:
    reqs = domain.requirements(state, atom)
    if reqs is None:
        return None
    return [r for r in reqs if not domain.evaluate(state, r)]


def _solve(domain, state, goal: Goal, max_calls: int = 200):
    """Oracle-headed planner rollout; returns (steps, final state)."""
    steps: list[DemoStep] = []
    current = state
    for _ in range(max_calls):
        if all(domain.evaluate(current, a) for a in goal.atoms):
            return steps, current
        heads = OracleHeads(domain, current)
        result: PlanResult = regression_planning(heads, None, goal)
        if result.status is not Termination.REACHABLE:
            raise UnsolvableError(
                f"expert cannot solve {goal} (planner terminated {result.status.value})"
            )
        serves = _final_indices(goal, result.trace.steps[0].block)
        controller_result, nxt = domain.execute(current, result.goal)
        if not controller_result.success:
            raise UnsolvableError(
                f"expert controller failed on {result.goal}: {controller_result.failure_reason}"
            )
        steps.append(DemoStep(current, result.goal, serves))
        current = nxt
    raise UnsolvableError(f"expert exceeded {max_calls} controller invocations on {goal}")


def _final_indices(final_goal: Goal, block: Goal) -> tuple[int, ...]:
    keys = {a.key: i for i, a in enumerate(final_goal.atoms)}
    return tuple(sorted(keys[a.key] for a in block.atoms if a.key in keys))


def demonstrate(domain, state, goal: Goal, task: str = "", demo_id: int = -1) -> DemoTrajectory:
    """Produce the expert demonstration for one task.

    Steps list the intermediate goals in execution order with the state
    snapshot taken before each controller call; an already-satisfied goal
    yields an empty step list. Dependency edges are recorded over the
    final goal's subgoals at the initial state.
    """
    steps, final_state = _solve(domain, state, goal)
    deps = oracle_dependencies(domain, goal, state)
    return DemoTrajectory(
        domain=domain.name,
        task=task,
        final_goal=goal,
        steps=steps,
        dependency_edges=deps.edges,
        final_state=final_state,
        demo_id=demo_id,
    )
