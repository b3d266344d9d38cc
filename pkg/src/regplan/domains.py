"""Domain adapters: one object bundling an environment's physics with the
hand-coded rule tables the expert and oracle heads rely on."""

from __future__ import annotations

from dataclasses import dataclass

from .envs import gridworld as gw
from .envs import kitchen as kt
from .envs.base import InvalidParamsError
from .features import EntitySet
from .goals import Atom, DomainSchema, Goal


class GridDomain:
    """DoorKey and RoomGoal task families over the shared grid schema.

    Tasks: ``d1``..``d6`` (open that many doors), ``k-d``, ``d-g``,
    ``k-d-g`` (RoomGoal family).
    """

    name = "gridworld"
    tasks = ("d1", "d2", "d3", "d4", "d5", "d6", "k-d", "d-g", "k-d-g")
    default_max_steps = 400
    net_scale = 0.5  # grid-world nets use half the kitchen layer sizes

    @property
    def schema(self) -> DomainSchema:
        return gw.gridworld_schema()

    def sample(self, task: str, seed: int):
        if task.startswith("d") and task[1:].isdigit():
            return gw.sample_task("doorkey", int(task[1:]), seed)
        if task in ("k-d", "d-g", "k-d-g"):
            return gw.sample_task("roomgoal", task, seed)
        raise InvalidParamsError(f"unknown gridworld task {task!r}")

    def encode(self, state) -> EntitySet:
        return gw.encode_entities(state)

    def evaluate(self, state, atom: Atom) -> bool:
        return gw.evaluate_atom(state, atom)

    def execute(self, state, goal: Goal):
        return gw.run_controller(state, goal)

    def snapshot(self, state) -> list[str]:
        return gw.snapshot_lines(state)

    def requirements(self, state, atom: Atom) -> list[Atom] | None:
        """Atoms that must hold before ``atom`` is controller-reachable.

        Returns [] when nothing is missing and None when no precondition
        can ever make the subgoal reachable (e.g. a spent key).
        """
        if atom.negated:
            return None
        schema = self.schema
        name = atom.predicate.name
        obj = state.objects[atom.args[0]]
        if name == "Holding":
            return None if obj.state == "consumed" else []
        if name == "Open":
            if obj.state == "locked":
                key = state.objects[f"key_{obj.color}"]
                if key.state == "consumed":
                    return None
                if key.state != "held":
                    return [schema.atom("Holding", key.id)]
            return []
        if name == "On":
            return [schema.atom("Open", d) for d in gw.blocking_doors(state, obj.pos)]
        return None  # Locked is not achievable by any controller

    def dependency_edges(self, state, atoms: tuple[Atom, ...]) -> set[tuple[int, int]]:
        """Directed edges (i, j): atoms[i] depends on atoms[j]."""
        edges = set()
        blocking: dict[str, list[str]] = {}
        for i, ai in enumerate(atoms):
            for j, aj in enumerate(atoms):
                if i == j:
                    continue
                ni, nj = ai.predicate.name, aj.predicate.name
                if ni == "Open" and nj == "Holding":
                    door = state.objects[ai.args[0]]
                    if door.state == "locked" and aj.args[0] == f"key_{door.color}":
                        edges.add((i, j))
                elif ni == "On" and nj == "Open":
                    tile = ai.args[0]
                    if tile not in blocking:
                        blocking[tile] = gw.blocking_doors(state, state.objects[tile].pos)
                    if aj.args[0] in blocking[tile]:
                        edges.add((i, j))
        return edges

    def subgoal_units(self, goal: Goal) -> list[tuple[Atom, ...]]:
        """Completion-metric units: one per final-goal atom."""
        return [(a,) for a in goal.atoms]


class KitchenDomain:
    """Symbolic cooking tasks. Task strings look like ``i3d2``."""

    name = "kitchen"
    tasks = tuple(f"i{i}d{d}" for d in (1, 2, 3) for i in range(d, 7))
    default_max_steps = 120
    net_scale = 1.0

    @property
    def schema(self) -> DomainSchema:
        return kt.kitchen_schema()

    def sample(self, task: str, seed: int):
        try:
            i, d = task[1:].split("d")
            return kt.sample_meal_task(int(i), int(d), seed)
        except (ValueError, IndexError):
            raise InvalidParamsError(f"unknown kitchen task {task!r}") from None

    def encode(self, state) -> EntitySet:
        return kt.encode_entities(state)

    def evaluate(self, state, atom: Atom) -> bool:
        return kt.evaluate_atom(state, atom)

    def execute(self, state, goal: Goal):
        return kt.run_macro(state, goal)

    def snapshot(self, state) -> list[str]:
        return kt.snapshot_lines(state)

    def requirements(self, state, atom: Atom) -> list[Atom] | None:
        if atom.negated:
            return None
        schema = self.schema
        name = atom.predicate.name
        if name in ("On", "Activated"):
            return []
        if name == "Cleaned":
            if state.objects["sink"].activated:
                return []
            return [schema.atom("Activated", "sink")]
        if name == "Cooked":
            x = atom.args[0]
            cookware = "pan" if state.objects[x].kind == "fruit" else "pot"
            need = []
            if not state.objects[x].cleaned:
                need.append(schema.atom("Cleaned", x))
            if state.objects[cookware].location != "stove":
                need.append(schema.atom("On", cookware, "stove"))
            if not state.objects["stove"].activated:
                need.append(schema.atom("Activated", "stove"))
            return need
        return None

    def dependency_edges(self, state, atoms: tuple[Atom, ...]) -> set[tuple[int, int]]:
        edges = set()
        ing = kt.INGREDIENTS
        for i, ai in enumerate(atoms):
            for j, aj in enumerate(atoms):
                if i == j:
                    continue
                ni, nj = ai.predicate.name, aj.predicate.name
                if ni == "On" and nj == "Cooked" and ai.args[0] in ing and ai.args[0] == aj.args[0]:
                    # plating an ingredient would be undone by cooking it later
                    if ai.args[1] not in ("pan", "pot", "sink"):
                        edges.add((i, j))
                elif ni == "On" and nj == "On":
                    if ai.args[0].startswith("plate_") and aj.args[1] == ai.args[0]:
                        edges.add((i, j))
                elif ni == "Cooked" and ai.args[0] == aj.args[0] and nj == "Cleaned":
                    edges.add((i, j))
                elif ni == "Cooked" and nj == "On" and aj.args[1] == "stove":
                    cookware = "pan" if state.objects[ai.args[0]].kind == "fruit" else "pot"
                    if aj.args[0] == cookware:
                        edges.add((i, j))
                elif ni == "Cooked" and nj == "Activated" and aj.args[0] == "stove":
                    edges.add((i, j))
                elif ni == "Cleaned" and nj == "Activated" and aj.args[0] == "sink":
                    edges.add((i, j))
        return edges

    def subgoal_units(self, goal: Goal) -> list[tuple[Atom, ...]]:
        """One unit per ingredient: cooked and sitting on its assigned plate."""
        units = []
        for a in goal.atoms:
            if a.predicate.name == "On" and a.args[0] in kt.INGREDIENTS:
                cooked = next(
                    (c for c in goal.atoms if c.predicate.name == "Cooked" and c.args == (a.args[0],)),
                    None,
                )
                units.append((a,) if cooked is None else (cooked, a))
        if not units:
            units = [(a,) for a in goal.atoms]
        return units


_DOMAINS = {"gridworld": GridDomain(), "kitchen": KitchenDomain()}


def domain_for(name: str):
    """Resolve a domain adapter by domain or task-family name."""
    aliases = {"doorkey": "gridworld", "roomgoal": "gridworld"}
    key = aliases.get(name, name)
    if key not in _DOMAINS:
        raise InvalidParamsError(f"unknown domain {name!r}")
    return _DOMAINS[key]


def domain_for_task(task: str):
    for dom in _DOMAINS.values():
        if task in dom.tasks:
            return dom
    raise InvalidParamsError(f"unknown task {task!r}")
