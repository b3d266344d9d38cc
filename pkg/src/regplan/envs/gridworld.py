"""Deterministic 2D grid environments (DoorKey, RoomGoal).

Both task families share one planning space: six door/key pairs in six
unique colors plus one goal tile. Doors can be open, closed or locked; a
locked door is unlocked only by the key of the same color, and a key can
be used only once (it transitions held -> consumed when spent). The
low-level controller is an A*-based search that executes exactly one
subgoal: picking a key, operating a door, or navigating to the tile.

State feature layout per object (15 channels):
  type one-hot(3)   door / key / tile
  color one-hot(6)  red / green / blue / purple / yellow / grey
  state one-hot(4)  open / closed / locked / holding
                    keys reuse the door channels: on-grid -> closed,
                    carried -> holding, consumed -> open
  location(2)       (x - agent.x)/width, (y - agent.y)/height;
                    off-grid objects sit at the agent (0, 0)
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np
from functools import lru_cache

from ..features import EntitySet, FeatureBlock, FeatureLayout
from ..goals import Atom, DomainSchema, Goal, Predicate, UnknownEntityError
from .base import ControllerResult, FailureReason, InvalidParamsError

COLORS = ("red", "green", "blue", "purple", "yellow", "grey")
GRID_SIZE = 13
DOOR_ROW = 6
DOORKEY_DOOR_CELLS = tuple((x, DOOR_ROW) for x in (1, 3, 5, 7, 9, 11))
ROOMGOAL_DOOR_CELLS = ((4, 2), (4, 6), (4, 10), (8, 2), (8, 6), (8, 10))
DIRS = {"N": (0, -1), "S": (0, 1), "E": (1, 0), "W": (-1, 0)}
# fixed expansion order keeps A* deterministic
DIR_ORDER = ("E", "W", "S", "N")


@lru_cache(maxsize=None)
def gridworld_schema() -> DomainSchema:
    sid = "gridworld"
    preds = (
        Predicate("Open", 1, sid, (frozenset({"door"}),)),
        Predicate("Locked", 1, sid, (frozenset({"door"}),)),
        Predicate("Holding", 1, sid, (frozenset({"key"}),)),
        Predicate("On", 1, sid, (frozenset({"tile"}),)),
    )
    entities = tuple(
        [(f"door_{c}", "door") for c in COLORS]
        + [(f"key_{c}", "key") for c in COLORS]
        + [("goal_tile", "tile")]
    )
    return DomainSchema(sid, preds, entities, feature_dim=15)


GRID_LAYOUT = FeatureLayout(
    blocks=(
        FeatureBlock("type", "onehot", 3, ("door", "key", "tile")),
        FeatureBlock("color", "onehot", 6, COLORS),
        FeatureBlock("state", "onehot", 4, ("open", "closed", "locked", "holding")),
        FeatureBlock("location", "real", 2, ("dx", "dy")),
    )
)


@dataclass
class GridObject:
    id: str
    type: str  # door | key | tile
    color: str
    state: str  # open | closed | locked | held | consumed
    pos: tuple[int, int] | None  # None once held or consumed


@dataclass
class GridState:
    layout: str  # doorkey | roomgoal
    width: int
    height: int
    walls: frozenset[tuple[int, int]]
    agent_pos: tuple[int, int]
    agent_dir: str
    objects: dict[str, GridObject]
    step_count: int = 0

    def copy(self) -> "GridState":
        return GridState(
            self.layout,
            self.width,
            self.height,
            self.walls,
            self.agent_pos,
            self.agent_dir,
            {k: copy.copy(v) for k, v in self.objects.items()},
            self.step_count,
        )

    def object_at(self, pos: tuple[int, int]) -> GridObject | None:
        for obj in self.objects.values():
            if obj.pos == pos:
                return obj
        return None

    def passable(self, pos: tuple[int, int]) -> bool:
        x, y = pos
        if not (0 <= x < self.width and 0 <= y < self.height):
            return False
        obj = self.object_at(pos)
        if obj is not None:
            if obj.type == "door":
                return obj.state == "open"
            if obj.type == "key":
                return False
            return True  # tiles are walkable floor marks
        return pos not in self.walls


# ---------------------------------------------------------------------------
# Layout construction and task sampling


def _doorkey_walls() -> frozenset:
    walls = set()
    for x in range(GRID_SIZE):
        walls.update({(x, 0), (x, GRID_SIZE - 1)})
    for y in range(GRID_SIZE):
        walls.update({(0, y), (GRID_SIZE - 1, y)})
    for x in range(1, GRID_SIZE - 1):
        if (x, DOOR_ROW) not in DOORKEY_DOOR_CELLS:
            walls.add((x, DOOR_ROW))
    return frozenset(walls)


def _roomgoal_walls() -> frozenset:
    walls = set()
    for x in range(GRID_SIZE):
        walls.update({(x, 0), (x, GRID_SIZE - 1)})
    for y in range(GRID_SIZE):
        walls.update({(0, y), (GRID_SIZE - 1, y)})
    for y in range(1, GRID_SIZE - 1):
        for x in (4, 8):
            if (x, y) not in ROOMGOAL_DOOR_CELLS:
                walls.add((x, y))
    for y in (4, 8):
        for x in list(range(1, 4)) + list(range(9, 12)):
            walls.add((x, y))
    return frozenset(walls)


ROOM_CELLS = {
    i: frozenset(
        (x, y)
        for x in ([1, 2, 3] if i < 3 else [9, 10, 11])
        for y in range(1 + 4 * (i % 3), 4 + 4 * (i % 3))
    )
    for i in range(6)
}
CORRIDOR_CELLS = frozenset((x, y) for x in (5, 6, 7) for y in range(1, 12))
LOWER_CELLS = frozenset((x, y) for x in range(1, 12) for y in range(7, 12))


def _room_of_door(door_cell: tuple[int, int]) -> int:
    return ROOMGOAL_DOOR_CELLS.index(door_cell)


def sample_task(domain: str, params, seed: int) -> tuple[GridState, Goal]:
    """Sample a solvable initial layout and goal.

    ``domain`` is 'doorkey' (params: D, the number of doors to open) or
    'roomgoal' (params: one of 'k-d', 'd-g', 'k-d-g'). The same seed
    always produces the identical layout and goal.
    """
    rng = np.random.default_rng(seed)
    schema = gridworld_schema()
    for _ in range(64):
        if domain == "doorkey":
            state, goal = _sample_doorkey(schema, params, rng)
        elif domain == "roomgoal":
            state, goal = _sample_roomgoal(schema, params, rng)
        else:
            raise InvalidParamsError(f"unknown grid domain {domain!r}")
        if _solvable(state, goal):
            return state, goal
    raise InvalidParamsError(f"could not sample a solvable {domain} task (seed={seed})")


def _place(rng, cells: list, n: int) -> list:
    idx = rng.choice(len(cells), size=n, replace=False)
    return [cells[int(i)] for i in idx]


def _sample_doorkey(schema, params, rng) -> tuple[GridState, Goal]:
    try:
        d = int(params)
    except (TypeError, ValueError):
        raise InvalidParamsError(f"DoorKey needs D in 1..6, got {params!r}") from None
    if not (1 <= d <= 6):
        raise InvalidParamsError(f"DoorKey needs D in 1..6, got {params!r}")
    walls = _doorkey_walls()
    colors = list(COLORS)
    rng.shuffle(colors)
    objects: dict[str, GridObject] = {}
    for cell, color in zip(DOORKEY_DOOR_CELLS, colors):
        st = ("open", "closed", "locked")[int(rng.integers(3))]
        objects[f"door_{color}"] = GridObject(f"door_{color}", "door", color, st, cell)
    free = sorted(LOWER_CELLS - walls)
    spots = _place(rng, free, 8)
    for color, cell in zip(COLORS, spots[:6]):
        objects[f"key_{color}"] = GridObject(f"key_{color}", "key", color, "closed", cell)
    objects["goal_tile"] = GridObject("goal_tile", "tile", "grey", "closed", spots[6])
    state = GridState("doorkey", GRID_SIZE, GRID_SIZE, walls, spots[7], "N", _roster_order(objects))
    target = rng.choice(6, size=d, replace=False)
    goal = Goal([schema.atom("Open", f"door_{COLORS[int(i)]}") for i in target])
    return state, goal


def _sample_roomgoal(schema, params, rng) -> tuple[GridState, Goal]:
    task = str(params)
    if task not in ("k-d", "d-g", "k-d-g"):
        raise InvalidParamsError(f"RoomGoal task must be k-d, d-g or k-d-g, got {params!r}")
    walls = _roomgoal_walls()
    colors = list(COLORS)
    rng.shuffle(colors)
    objects: dict[str, GridObject] = {}
    target_room = int(rng.integers(6))
    target_color = None
    for i, (cell, color) in enumerate(zip(ROOMGOAL_DOOR_CELLS, colors)):
        if i == target_room:
            target_color = color
            if task == "k-d":
                st = ("closed", "locked")[int(rng.integers(2))]
            elif task == "d-g":
                st = "closed"
            else:
                st = "locked"
        else:
            st = ("open", "closed", "locked")[int(rng.integers(3))]
        objects[f"door_{color}"] = GridObject(f"door_{color}", "door", color, st, cell)
    free = sorted(CORRIDOR_CELLS - walls)
    spots = _place(rng, free, 7)
    for color, cell in zip(COLORS, spots[:6]):
        objects[f"key_{color}"] = GridObject(f"key_{color}", "key", color, "closed", cell)
    tile_room = sorted(ROOM_CELLS[target_room])
    tile_cell = tile_room[int(rng.integers(len(tile_room)))]
    objects["goal_tile"] = GridObject("goal_tile", "tile", "grey", "closed", tile_cell)
    state = GridState(
        "roomgoal", GRID_SIZE, GRID_SIZE, walls, spots[6], "N", _roster_order(objects)
    )
    if task == "k-d":
        goal = Goal([schema.atom("Open", f"door_{target_color}")])
    else:
        goal = Goal([schema.atom("On", "goal_tile")])
    return state, goal


def _roster_order(objects: dict[str, GridObject]) -> dict[str, GridObject]:
    order = [f"door_{c}" for c in COLORS] + [f"key_{c}" for c in COLORS] + ["goal_tile"]
    return {k: objects[k] for k in order}


def _solvable(state: GridState, goal: Goal) -> bool:
    """Cheap reachability screen used during sampling (rejection loop)."""
    for atom in goal.atoms:
        obj = state.objects[atom.args[0]]
        if atom.predicate.name == "Open":
            if obj.state == "open":
                continue
            if not _adjacent_reachable(state, obj.pos):
                return False
            if obj.state == "locked":
                key = state.objects[f"key_{obj.color}"]
                if key.state == "consumed":
                    return False
                if key.state != "held" and not _adjacent_reachable(state, key.pos):
                    return False
        elif atom.predicate.name == "On":
            opened = state.copy()
            for d in opened.objects.values():
                if d.type == "door" and d.state in ("closed", "locked"):
                    d.state = "open"
            if _astar(opened, opened.agent_pos, {obj.pos}) is None:
                return False
            if blocking_doors(state, obj.pos):
                door = state.objects[blocking_doors(state, obj.pos)[0]]
                if door.state == "locked":
                    key = state.objects[f"key_{door.color}"]
                    if key.state == "consumed":
                        return False
                    if key.state != "held" and not _adjacent_reachable(state, key.pos):
                        return False
    return True


def _adjacent_reachable(state: GridState, pos) -> bool:
    if pos is None:
        return False
    return _astar(state, state.agent_pos, _approach_cells(state, pos)) is not None


def blocking_doors(state: GridState, pos) -> list[str]:
    """Doors that must be opened to reach ``pos`` (closed/locked on the route)."""
    if _astar(state, state.agent_pos, {pos}) is not None:
        return []
    blockers = []
    for obj in state.objects.values():
        if obj.type != "door" or obj.state == "open":
            continue
        trial = state.copy()
        trial.objects[obj.id].state = "open"
        if _astar(trial, trial.agent_pos, {pos}) is not None:
            blockers.append(obj.id)
    return blockers


# ---------------------------------------------------------------------------
# Atom semantics


def evaluate_atom(state: GridState, atom: Atom) -> bool:
    """Truth value of ``atom`` in ``state``; negated atoms return the complement."""
    name = atom.predicate.name
    eid = atom.args[0]
    if eid not in state.objects:
        raise UnknownEntityError(eid)
    obj = state.objects[eid]
    if name == "Open":
        value = obj.state == "open"
    elif name == "Locked":
        value = obj.state == "locked"
    elif name == "Holding":
        value = obj.state == "held"
    elif name == "On":
        value = state.agent_pos == obj.pos
    else:
        raise UnknownEntityError(f"{name} is not a gridworld predicate")
    return not value if atom.negated else value


# ---------------------------------------------------------------------------
# Feature encoding


def encode_entities(state: GridState) -> EntitySet:
    schema = gridworld_schema()
    feats = np.zeros((len(schema.entities), GRID_LAYOUT.dim))
    ax, ay = state.agent_pos
    for i, eid in enumerate(schema.entity_ids):
        obj = state.objects[eid]
        feats[i, ("door", "key", "tile").index(obj.type)] = 1.0
        feats[i, 3 + COLORS.index(obj.color)] = 1.0
        if obj.type == "door":
            chan = ("open", "closed", "locked").index(obj.state)
        elif obj.type == "key":
            chan = {"closed": 1, "held": 3, "consumed": 0}[obj.state]
        else:
            chan = 1
        feats[i, 9 + chan] = 1.0
        if obj.pos is not None:
            feats[i, 13] = (obj.pos[0] - ax) / state.width
            feats[i, 14] = (obj.pos[1] - ay) / state.height
    return EntitySet(schema, GRID_LAYOUT, schema.entity_ids, feats)


# ---------------------------------------------------------------------------
# A* controller


def _astar(state: GridState, start, targets: set) -> list | None:
    """Shortest path (list of cells, start excluded) to any passable target."""
    targets = {t for t in targets if t == start or state.passable(t)}
    if not targets:
        return None
    if start in targets:
        return []

    def h(p):
        return min(abs(p[0] - t[0]) + abs(p[1] - t[1]) for t in targets)

    frontier = [(h(start), 0, start)]
    best = {start: 0}
    parent = {}
    tick = 0
    while frontier:
        _, _, cur = heappop(frontier)
        if cur in targets:
            path = [cur]
            while path[-1] in parent:
                path.append(parent[path[-1]])
            path.pop()  # drop start
            return path[::-1]
        g = best[cur]
        for d in DIR_ORDER:
            dx, dy = DIRS[d]
            nxt = (cur[0] + dx, cur[1] + dy)
            if not state.passable(nxt):
                continue
            if nxt not in best or g + 1 < best[nxt]:
                best[nxt] = g + 1
                parent[nxt] = cur
                tick += 1
                heappush(frontier, (g + 1 + h(nxt), tick, nxt))
    return None


def _approach_cells(state: GridState, pos) -> set:
    """Cells from which the agent can interact with an object at ``pos``."""
    cells = set()
    for dx, dy in DIRS.values():
        p = (pos[0] + dx, pos[1] + dy)
        if p == state.agent_pos or state.passable(p):
            cells.add(p)
    return cells


def apply_action(state: GridState, action: tuple) -> None:
    """Apply one primitive action in place; raises on illegal actions."""
    kind, arg = action
    if kind == "move":
        dx, dy = DIRS[arg]
        nxt = (state.agent_pos[0] + dx, state.agent_pos[1] + dy)
        if not state.passable(nxt):
            raise ValueError(f"illegal move {arg} from {state.agent_pos}")
        state.agent_pos = nxt
        state.agent_dir = arg
    elif kind == "pickup":
        obj = state.objects[arg]
        if obj.type != "key" or obj.state != "closed" or obj.pos is None:
            raise ValueError(f"cannot pick up {arg}")
        if _manhattan(state.agent_pos, obj.pos) != 1:
            raise ValueError(f"{arg} is not adjacent")
        state.agent_dir = _facing(state.agent_pos, obj.pos)
        obj.state = "held"
        obj.pos = None
    elif kind == "toggle":
        obj = state.objects[arg]
        if obj.type != "door" or obj.pos is None or _manhattan(state.agent_pos, obj.pos) != 1:
            raise ValueError(f"cannot toggle {arg}")
        state.agent_dir = _facing(state.agent_pos, obj.pos)
        if obj.state == "locked":
            key = state.objects[f"key_{obj.color}"]
            if key.state != "held":
                raise ValueError(f"{arg} is locked and its key is not held")
            key.state = "consumed"
        obj.state = "open"
    else:
        raise ValueError(f"unknown action kind {kind!r}")
    state.step_count += 1


def _manhattan(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def _facing(origin, target) -> str:
    dx, dy = target[0] - origin[0], target[1] - origin[1]
    for name, vec in DIRS.items():
        if (dx, dy) == vec:
            return name
    return "N"


def _fail(reason: FailureReason, state: GridState) -> tuple[ControllerResult, GridState]:
    return ControllerResult(False, (), reason), state


def run_controller(state: GridState, goal: Goal) -> tuple[ControllerResult, GridState]:
    """Execute one subgoal with the A*-based controller.

    The input state is never mutated; the post state is returned. The
    goal must be a single positive atom the controller class supports:
    one key pick, one door operation, or one navigation. Locked doors
    require the matching non-consumed key to be held already (fetching
    it is the planner's job) and opening consumes the key.
    """
    work = state.copy()
    try:
        satisfied = all(evaluate_atom(work, a) for a in goal.atoms)
    except UnknownEntityError:
        return _fail(FailureReason.INVALID_GOAL, work)
    if satisfied and goal.atoms:
        return ControllerResult(True, ()), work
    if len(goal.atoms) != 1 or goal.atoms[0].negated:
        return _fail(FailureReason.INVALID_GOAL, work)
    atom = goal.atoms[0]
    obj = work.objects[atom.args[0]]
    actions: list[tuple] = []

    def walk(path):
        for cell in path:
            d = _facing(work.agent_pos, cell)
            actions.append(("move", d))
            apply_action(work, ("move", d))

    if atom.predicate.name == "Holding":
        if obj.state == "consumed":
            return _fail(FailureReason.INVALID_GOAL, work)
        path = _astar(work, work.agent_pos, _approach_cells(work, obj.pos))
        if path is None:
            return _fail(FailureReason.UNREACHABLE, work)
        walk(path)
        actions.append(("pickup", obj.id))
        apply_action(work, ("pickup", obj.id))
    elif atom.predicate.name == "Open":
        if obj.state == "locked":
            key = work.objects[f"key_{obj.color}"]
            if key.state != "held":
                return _fail(FailureReason.INVALID_GOAL, work)
        path = _astar(work, work.agent_pos, _approach_cells(work, obj.pos))
        if path is None:
            return _fail(FailureReason.UNREACHABLE, work)
        walk(path)
        actions.append(("toggle", obj.id))
        apply_action(work, ("toggle", obj.id))
    elif atom.predicate.name == "On":
        path = _astar(work, work.agent_pos, {obj.pos})
        if path is None:
            return _fail(FailureReason.UNREACHABLE, work)
        walk(path)
    else:
        return _fail(FailureReason.INVALID_GOAL, work)
    if not all(evaluate_atom(work, a) for a in goal.atoms):
        return _fail(FailureReason.INVALID_GOAL, work)
    return ControllerResult(True, tuple(actions)), work


# ---------------------------------------------------------------------------
# Snapshot text records (golden tests)


def snapshot_lines(state: GridState) -> list[str]:
    lines = [f"gridworld {state.layout} {state.width} {state.height} {state.step_count}"]
    lines.append(f"agent,agent,-,{state.agent_dir},{state.agent_pos[0]},{state.agent_pos[1]}")
    for w in sorted(state.walls):
        lines.append(f"wall,wall,-,-,{w[0]},{w[1]}")
    for obj in state.objects.values():
        x, y = obj.pos if obj.pos is not None else (-1, -1)
        lines.append(f"{obj.id},{obj.type},{obj.color},{obj.state},{x},{y}")
    return lines


def parse_snapshot(lines: list[str]) -> GridState:
    head = lines[0].split()
    if head[0] != "gridworld":
        raise ValueError(f"not a gridworld snapshot: {lines[0]!r}")
    layout, width, height, steps = head[1], int(head[2]), int(head[3]), int(head[4])
    walls = set()
    objects: dict[str, GridObject] = {}
    agent_pos, agent_dir = (0, 0), "N"
    for line in lines[1:]:
        oid, otype, color, st, x, y = line.split(",")
        pos = (int(x), int(y))
        if otype == "agent":
            agent_pos, agent_dir = pos, st
        elif otype == "wall":
            walls.add(pos)
        else:
            objects[oid] = GridObject(oid, otype, color, st, None if pos == (-1, -1) else pos)
    return GridState(layout, width, height, frozenset(walls), agent_pos, agent_dir, objects, steps)
