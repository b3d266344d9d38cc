"""Symbolic kitchen environment for long-horizon cooking tasks.

Six ingredients (three fruits, three vegetables) are prepared into up to
three dishes. An ingredient must be cleaned at the activated sink before
it can cook; cooking happens when a cleaned ingredient sits on the
matching cookware (fruits on the small pan, vegetables on the big pot)
while that cookware is on the activated stove. Macros move one object,
activate one appliance, or perform the combined clean/cook step; each
macro counts as one primitive step.

Locations are discrete zones (table, sink, stove, tray, cookware, plates
and serving areas); object state changes are boolean feature channels
rather than visual changes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from functools import lru_cache

from ..features import EntitySet, FeatureBlock, FeatureLayout
from ..goals import Atom, DomainSchema, Goal, Predicate, UnknownEntityError
from .base import ControllerResult, FailureReason, InvalidParamsError

FRUITS = ("banana", "apple", "orange")
VEGETABLES = ("tomato", "cabbage", "carrot")
INGREDIENTS = FRUITS + VEGETABLES
PLATES = ("plate_0", "plate_1", "plate_2")
AREAS = ("area_0", "area_1", "area_2")
ZONES = ("table", "sink", "stove", "tray", "pan", "pot") + PLATES + AREAS

_KINDS = {
    **{i: "fruit" for i in FRUITS},
    **{i: "vegetable" for i in VEGETABLES},
    "pan": "pan",
    "pot": "pot",
    "stove": "stove",
    "sink": "sink",
    **{p: "plate" for p in PLATES},
    **{a: "area" for a in AREAS},
    "table": "table",
    "tray": "tray",
}
_ROSTER = INGREDIENTS + ("pan", "pot", "stove", "sink") + PLATES + AREAS + ("table", "tray")
KIND_NAMES = ("fruit", "vegetable", "pan", "pot", "stove", "sink", "plate", "area", "table", "tray")

_ING_KINDS = frozenset({"fruit", "vegetable"})
_ON_PAIRS = frozenset(
    [(k, z) for k in _ING_KINDS for z in ("sink", "pan", "pot", "plate", "table")]
    + [(c, z) for c in ("pan", "pot") for z in ("stove", "tray")]
    + [("plate", z) for z in ("area", "table")]
)


@lru_cache(maxsize=None)
def kitchen_schema() -> DomainSchema:
    sid = "kitchen"
    movable = _ING_KINDS | {"pan", "pot", "plate"}
    places = frozenset({"sink", "pan", "pot", "plate", "table", "stove", "tray", "area"})
    preds = (
        Predicate("On", 2, sid, (frozenset(movable), places), kind_pairs=_ON_PAIRS),
        Predicate("Cooked", 1, sid, (_ING_KINDS,)),
        Predicate("Cleaned", 1, sid, (_ING_KINDS,)),
        Predicate("Activated", 1, sid, (frozenset({"stove", "sink"}),)),
    )
    entities = tuple((e, _KINDS[e]) for e in _ROSTER)
    return DomainSchema(sid, preds, entities, feature_dim=43, tuple_feature_dim=87)


KITCHEN_LAYOUT = FeatureLayout(
    blocks=(
        FeatureBlock("identity", "onehot", len(_ROSTER), _ROSTER),
        FeatureBlock("kind", "onehot", len(KIND_NAMES), KIND_NAMES),
        FeatureBlock("flags", "flags", 3, ("cleaned", "cooked", "activated")),
        FeatureBlock("zone", "onehot", len(ZONES), ZONES),
    ),
    zone_entities=ZONES,
)


@dataclass
class KitchenObject:
    id: str
    kind: str
    location: str  # zone name; fixed entities sit in their own zone
    cleaned: bool = False
    cooked: bool = False
    activated: bool = False


@dataclass
class KitchenState:
    objects: dict[str, KitchenObject]
    step_count: int = 0

    def copy(self) -> "KitchenState":
        return KitchenState(
            {k: KitchenObject(v.id, v.kind, v.location, v.cleaned, v.cooked, v.activated)
             for k, v in self.objects.items()},
            self.step_count,
        )


def initial_state() -> KitchenState:
    objects = {}
    for e in _ROSTER:
        kind = _KINDS[e]
        if kind in ("fruit", "vegetable"):
            loc = "table"
        elif kind in ("pan", "pot"):
            loc = "tray"
        elif kind == "plate":
            loc = "table"
        else:
            loc = e  # fixed entities occupy their own zone
        objects[e] = KitchenObject(e, kind, loc)
    return KitchenState(objects)


def sample_meal_task(ingredients: int, dishes: int, seed: int) -> tuple[KitchenState, Goal]:
    """Sample a meal: cook I ingredients into D dishes and serve them.

    The goal conjoins Cooked(x) and On(x, plate) per ingredient plus
    On(plate, area) per dish; the ingredient-to-plate mapping, the plates
    and the serving areas are all drawn at random.
    """
    i_count, d_count = int(ingredients), int(dishes)
    if not (1 <= d_count <= 3):
        raise InvalidParamsError(f"dish count must be in 1..3, got {dishes!r}")
    if not (d_count <= i_count <= 6):
        raise InvalidParamsError(f"ingredient count must be in {d_count}..6, got {ingredients!r}")
    rng = np.random.default_rng(seed)
    schema = kitchen_schema()
    chosen = sorted(int(i) for i in rng.choice(6, size=i_count, replace=False))
    chosen = [INGREDIENTS[i] for i in chosen]
    order = list(chosen)
    rng.shuffle(order)
    plates = [PLATES[int(i)] for i in sorted(rng.choice(3, size=d_count, replace=False))]
    areas = [AREAS[int(i)] for i in sorted(rng.choice(3, size=d_count, replace=False))]
    assignment = {}
    for d, x in enumerate(order[:d_count]):  # every dish gets at least one ingredient
        assignment[x] = plates[d]
    for x in order[d_count:]:
        assignment[x] = plates[int(rng.integers(d_count))]
    atoms = [schema.atom("Cooked", x) for x in chosen]
    atoms += [schema.atom("On", x, assignment[x]) for x in chosen]
    atoms += [schema.atom("On", p, a) for p, a in zip(plates, areas)]
    return initial_state(), Goal(atoms)


def evaluate_atom(state: KitchenState, atom: Atom) -> bool:
    name = atom.predicate.name
    for e in atom.args:
        if e not in state.objects:
            raise UnknownEntityError(e)
    obj = state.objects[atom.args[0]]
    if name == "On":
        value = obj.location == atom.args[1]
    elif name == "Cooked":
        value = obj.cooked
    elif name == "Cleaned":
        value = obj.cleaned
    elif name == "Activated":
        value = obj.activated
    else:
        raise UnknownEntityError(f"{name} is not a kitchen predicate")
    return not value if atom.negated else value


def encode_entities(state: KitchenState) -> EntitySet:
    schema = kitchen_schema()
    feats = np.zeros((len(_ROSTER), KITCHEN_LAYOUT.dim))
    kind_off = len(_ROSTER)
    flag_off = kind_off + len(KIND_NAMES)
    zone_off = flag_off + 3
    for i, eid in enumerate(_ROSTER):
        obj = state.objects[eid]
        feats[i, i] = 1.0
        feats[i, kind_off + KIND_NAMES.index(obj.kind)] = 1.0
        feats[i, flag_off + 0] = float(obj.cleaned)
        feats[i, flag_off + 1] = float(obj.cooked)
        feats[i, flag_off + 2] = float(obj.activated)
        feats[i, zone_off + ZONES.index(obj.location)] = 1.0
    return EntitySet(schema, KITCHEN_LAYOUT, _ROSTER, feats)


def _sweep(state: KitchenState) -> None:
    """Apply cleaning/cooking consequences until quiescent."""
    sink_on = state.objects["sink"].activated
    stove_on = state.objects["stove"].activated
    for x in INGREDIENTS:
        obj = state.objects[x]
        if sink_on and obj.location == "sink":
            obj.cleaned = True
        cookware = "pan" if obj.kind == "fruit" else "pot"
        if (
            obj.cleaned
            and obj.location == cookware
            and state.objects[cookware].location == "stove"
            and stove_on
        ):
            obj.cooked = True


def _cookware_for(state: KitchenState, ingredient: str) -> str:
    return "pan" if state.objects[ingredient].kind == "fruit" else "pot"


def run_macro(state: KitchenState, goal: Goal) -> tuple[ControllerResult, KitchenState]:
    """Execute one subgoal macro; the input state is never mutated.

    Success requires the physical preconditions to hold already: cleaning
    needs the activated sink, cooking needs the matching cookware on the
    activated stove and a cleaned ingredient. Anything else is InvalidGoal.
    """
    work = state.copy()
    try:
        satisfied = all(evaluate_atom(work, a) for a in goal.atoms)
    except UnknownEntityError:
        return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
    if satisfied and goal.atoms:
        return ControllerResult(True, ()), work
    if len(goal.atoms) != 1 or goal.atoms[0].negated:
        return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
    atom = goal.atoms[0]
    name = atom.predicate.name
    actions: list[tuple] = []
    if name == "On":
        mover, place = atom.args
        kinds = (work.objects[mover].kind, work.objects[place].kind)
        if kinds not in _ON_PAIRS:
            return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
        work.objects[mover].location = place
        actions.append(("place", mover, place))
    elif name == "Activated":
        work.objects[atom.args[0]].activated = True
        actions.append(("activate", atom.args[0]))
    elif name == "Cleaned":
        x = atom.args[0]
        if not work.objects["sink"].activated:
            return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
        work.objects[x].location = "sink"
        actions.append(("place", x, "sink"))
    elif name == "Cooked":
        x = atom.args[0]
        if not work.objects[x].cleaned:
            return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
        cookware = _cookware_for(work, x)
        if work.objects[cookware].location != "stove" or not work.objects["stove"].activated:
            return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
        work.objects[x].location = cookware
        actions.append(("place", x, cookware))
    else:
        return ControllerResult(False, (), FailureReason.INVALID_GOAL), work
    _sweep(work)
    work.step_count += 1
    if not all(evaluate_atom(work, a) for a in goal.atoms):
        return ControllerResult(False, (), FailureReason.INVALID_GOAL), state.copy()
    return ControllerResult(True, tuple(actions)), work


def apply_macro_action(state: KitchenState, action: tuple) -> None:
    """Replay one recorded macro action in place (for trace soundness checks)."""
    if action[0] == "place":
        _, mover, place = action
        state.objects[mover].location = place
    elif action[0] == "activate":
        state.objects[action[1]].activated = True
    else:
        raise ValueError(f"unknown kitchen action {action!r}")
    _sweep(state)
    state.step_count += 1


def snapshot_lines(state: KitchenState) -> list[str]:
    lines = [f"kitchen {state.step_count}"]
    for eid in _ROSTER:
        o = state.objects[eid]
        lines.append(
            f"{o.id},{o.kind},{o.location},{int(o.cleaned)},{int(o.cooked)},{int(o.activated)}"
        )
    return lines


def parse_snapshot(lines: list[str]) -> KitchenState:
    head = lines[0].split()
    if head[0] != "kitchen":
        raise ValueError(f"not a kitchen snapshot: {lines[0]!r}")
    objects = {}
    for line in lines[1:]:
        oid, kind, loc, cleaned, cooked, activated = line.split(",")
        objects[oid] = KitchenObject(oid, kind, loc, cleaned == "1", cooked == "1", activated == "1")
    return KitchenState(objects, int(head[1]))
