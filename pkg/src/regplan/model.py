"""Learned planner heads and their input encodings.

Four heads drive planning: ``dependency`` scores ordered subgoal pairs,
``precondition`` classifies every ground-atom slot into True/False/Null
given a query goal, ``satisfied`` scores one subgoal against its entity
tuple and ``reachable`` scores a goal against the whole entity context.
Baselines add ``e2e`` (next goal from observation + final goal) and
``nextgoal`` (next goal from observation + serialized block + final
goal). All encodings are defined here once and reused verbatim by the
trainer, so training rows and inference inputs can never drift apart.

Per-node inputs concatenate the node's entity-tuple feature, its class
channels under the query goal, its predicate one-hot and a fixed-width
context vector (mean tuple feature and mean atom encoding of the query
goal's atoms). The reachable and e2e heads see the full entity feature
matrix flattened, which is well-defined because every domain has a fixed
entity roster.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import EntitySet, FeatureLayout, tuple_feature_from_matrix
from .goals import Atom, DomainSchema, Goal, GoalError, ground_atoms
from .nn import DenseNet, forward, init_dense, net_from_tensors, net_tensors

TRUE, FALSE, NULL = 0, 1, 2


class MissingEntityError(GoalError):
    def __init__(self, what):
        super().__init__(f"no ground-atom slot or entity for {what}")


# kitchen-scale hidden sizes; grid-world nets halve every layer
_HIDDEN = {
    "satisfied": (128, 128, 128),
    "dependency": (128, 128, 128),
    "precondition": (128, 128, 128),
    "reachable": (128, 64, 64),
    "e2e": (256, 256, 256),
    "nextgoal": (128, 128, 128),
}
HEAD_NAMES = tuple(_HIDDEN)


class Encoder:
    """Feature assembly for one domain schema + layout."""

    def __init__(self, schema: DomainSchema, layout: FeatureLayout):
        self.schema = schema
        self.layout = layout
        self.slots = ground_atoms(schema)
        self.slot_of = {a.key: i for i, a in enumerate(self.slots)}
        self.pred_names = tuple(p.name for p in schema.predicates)
        self.entity_index = {e: i for i, e in enumerate(schema.entity_ids)}
        self.n_entities = len(schema.entity_ids)
        self.n_slots = len(self.slots)
        self.tdim = schema.tuple_feature_dim
        self.adim = len(self.pred_names) + 4  # pred one-hot + negation + 3 class channels

    # -- symbolic pieces ----------------------------------------------------

    def slot_index(self, atom: Atom) -> int:
        return self.slot_of.get(atom.key, self.n_slots)

    def atom_encoding(self, atom: Atom) -> np.ndarray:
        enc = np.zeros(self.adim)
        try:
            enc[self.pred_names.index(atom.predicate.name)] = 1.0
        except ValueError:
            raise MissingEntityError(atom) from None
        p = len(self.pred_names)
        enc[p] = float(atom.negated)
        enc[p + 1 + (FALSE if atom.negated else TRUE)] = 1.0
        return enc

    def goal_channels(self, goal: Goal) -> np.ndarray:
        """(slots, 3) class channels: the goal's atoms set True/False, the
        rest Null (the padding operator over the full node space)."""
        ch = np.zeros((self.n_slots, 3))
        ch[:, NULL] = 1.0
        for a in goal.atoms:
            s = self.slot_of.get(a.key)
            if s is None:
                raise MissingEntityError(a)
            ch[s] = 0.0
            ch[s, FALSE if a.negated else TRUE] = 1.0
        return ch

    def channels_to_goal(self, classes: np.ndarray) -> Goal:
        """Inverse of goal_channels for per-slot argmax classes."""
        atoms = []
        for s, c in enumerate(classes):
            if c == TRUE:
                atoms.append(self.slots[s])
            elif c == FALSE:
                atoms.append(self.slots[s].negate())
        return Goal(atoms)

    # -- numeric pieces -----------------------------------------------------

    def tuple_feature(self, matrix: np.ndarray, args: tuple[str, ...]) -> np.ndarray:
        for a in args:
            if a not in self.entity_index:
                raise MissingEntityError(a)
        return tuple_feature_from_matrix(self.layout, matrix, self.entity_index, args, self.tdim)

    def slot_tuple_matrix(self, matrix: np.ndarray) -> np.ndarray:
        """(slots, tuple_dim) features for every ground-atom slot."""
        out = np.zeros((self.n_slots, self.tdim))
        for i, a in enumerate(self.slots):
            out[i] = self.tuple_feature(matrix, a.args)
        return out

    def context(self, matrix: np.ndarray, goal: Goal) -> np.ndarray:
        """Mean tuple feature and mean atom encoding over the goal's atoms."""
        if not goal.atoms:
            return np.zeros(self.tdim + self.adim)
        tf = np.mean([self.tuple_feature(matrix, a.args) for a in goal.atoms], axis=0)
        ae = np.mean([self.atom_encoding(a) for a in goal.atoms], axis=0)
        return np.concatenate([tf, ae])

    # -- head inputs ----------------------------------------------------------

    @property
    def dims(self) -> dict[str, int]:
        t, p, a = self.tdim, len(self.pred_names), self.adim
        flat = self.n_entities * self.layout.dim + 3 * self.n_slots
        return {
            "satisfied": t + a,
            "dependency": 2 * t + 2 * a,
            "precondition": t + 3 + p + t + a,
            "reachable": flat,
            "e2e": flat,
            "nextgoal": t + 6 + p + t + a,
        }

    def satisfied_input(self, matrix: np.ndarray, atom: Atom) -> np.ndarray:
        return np.concatenate([self.tuple_feature(matrix, atom.args), self.atom_encoding(atom)])

    def dependency_inputs(self, matrix: np.ndarray, atoms: tuple[Atom, ...]) -> np.ndarray:
        """Rows for every ordered pair (i, j), i != j, in row-major pair order."""
        k = len(atoms)
        tf = [self.tuple_feature(matrix, a.args) for a in atoms]
        ae = [self.atom_encoding(a) for a in atoms]
        rows = []
        for i in range(k):
            for j in range(k):
                if i != j:
                    rows.append(np.concatenate([tf[i], tf[j], ae[i], ae[j]]))
        return np.asarray(rows) if rows else np.zeros((0, self.dims["dependency"]))

    def node_inputs(self, matrix: np.ndarray, goal: Goal,
                    slot_tuples: np.ndarray | None = None) -> np.ndarray:
        """(slots, d) rows for the precondition head."""
        st = self.slot_tuple_matrix(matrix) if slot_tuples is None else slot_tuples
        ch = self.goal_channels(goal)
        ctx = self.context(matrix, goal)
        pred1h = self._slot_pred_onehot()
        reps = np.broadcast_to(ctx, (self.n_slots, ctx.size))
        return np.concatenate([st, ch, pred1h, reps], axis=1)

    def nextgoal_inputs(self, matrix: np.ndarray, block: Goal, final: Goal,
                        slot_tuples: np.ndarray | None = None) -> np.ndarray:
        st = self.slot_tuple_matrix(matrix) if slot_tuples is None else slot_tuples
        chb = self.goal_channels(block)
        chf = self.goal_channels(final)
        ctx = self.context(matrix, block)
        pred1h = self._slot_pred_onehot()
        reps = np.broadcast_to(ctx, (self.n_slots, ctx.size))
        return np.concatenate([st, chb, chf, pred1h, reps], axis=1)

    def reachable_input(self, matrix: np.ndarray, goal: Goal) -> np.ndarray:
        return np.concatenate([matrix.reshape(-1), self.goal_channels(goal).reshape(-1)])

    e2e_input = reachable_input

    def _slot_pred_onehot(self) -> np.ndarray:
        cached = getattr(self, "_pred1h", None)
        if cached is None:
            cached = np.zeros((self.n_slots, len(self.pred_names)))
            for i, a in enumerate(self.slots):
                cached[i, self.pred_names.index(a.predicate.name)] = 1.0
            self._pred1h = cached
        return cached


def head_sizes(name: str, encoder: Encoder, scale: float) -> tuple[int, ...]:
    hidden = tuple(max(1, int(round(h * scale))) for h in _HIDDEN[name])
    out = 3 * encoder.n_slots if name == "e2e" else (3 if name in ("precondition", "nextgoal") else 1)
    return (encoder.dims[name],) + hidden + (out,)


def head_kind(name: str) -> str:
    return "softmax3" if name in ("precondition", "nextgoal", "e2e") else "sigmoid"


@dataclass
class PlannerModel:
    """Encoder plus any subset of trained heads; implements the planner's
    heads interface over an EntitySet."""

    encoder: Encoder
    nets: dict[str, DenseNet]
    domain_name: str
    net_scale: float

    def slot_index(self, atom: Atom) -> int:
        return self.encoder.slot_index(atom)

    def satisfied(self, ents: EntitySet, atom: Atom) -> float:
        x = self.encoder.satisfied_input(ents.features, atom)
        return float(forward(self.nets["satisfied"], x)[0, 0])

    def dependency(self, ents: EntitySet, atoms: tuple[Atom, ...]) -> np.ndarray:
        k = len(atoms)
        dep = np.zeros((k, k))
        if k < 2:
            return dep
        rows = self.encoder.dependency_inputs(ents.features, atoms)
        scores = forward(self.nets["dependency"], rows)[:, 0]
        r = 0
        for i in range(k):
            for j in range(k):
                if i != j:
                    dep[i, j] = scores[r]
                    r += 1
        return dep

    def precondition(self, ents: EntitySet, goal: Goal) -> Goal:
        rows = self.encoder.node_inputs(ents.features, goal)
        probs = forward(self.nets["precondition"], rows)
        return self.encoder.channels_to_goal(np.argmax(probs, axis=1))

    def reachable(self, ents: EntitySet, goal: Goal) -> float:
        x = self.encoder.reachable_input(ents.features, goal)
        return float(forward(self.nets["reachable"], x)[0, 0])

    def e2e_next(self, ents: EntitySet, final: Goal) -> Goal:
        x = self.encoder.e2e_input(ents.features, final)
        probs = forward(self.nets["e2e"], x).reshape(self.encoder.n_slots, 3)
        return self.encoder.channels_to_goal(np.argmax(probs, axis=1))

    def next_goal(self, ents: EntitySet, block: Goal, final: Goal) -> Goal:
        rows = self.encoder.nextgoal_inputs(ents.features, block, final)
        probs = forward(self.nets["nextgoal"], rows)
        return self.encoder.channels_to_goal(np.argmax(probs, axis=1))


def build_model(domain, heads: tuple[str, ...], seed: int) -> PlannerModel:
    """Fresh model with fan-in-scaled uniform initialization per head."""
    encoder = Encoder(domain.schema, _layout_for(domain))
    rng = np.random.default_rng(seed)
    nets = {}
    for name in heads:
        if name not in _HIDDEN:
            raise ValueError(f"unknown head {name!r}")
        nets[name] = init_dense(head_sizes(name, encoder, domain.net_scale), head_kind(name), rng)
    return PlannerModel(encoder, nets, domain.name, domain.net_scale)


def _layout_for(domain) -> FeatureLayout:
    from .envs.gridworld import GRID_LAYOUT
    from .envs.kitchen import KITCHEN_LAYOUT

    return GRID_LAYOUT if domain.name == "gridworld" else KITCHEN_LAYOUT


def model_tensors(model: PlannerModel) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    tensors: dict[str, np.ndarray] = {}
    meta = {
        "domain": model.domain_name,
        "heads": ",".join(sorted(model.nets)),
        "scale": repr(model.net_scale),
    }
    for name, net in model.nets.items():
        tensors.update(net_tensors(name, net))
        meta[f"sizes_{name}"] = "x".join(str(s) for s in net.sizes)
        meta[f"head_{name}"] = net.head
    return tensors, meta


def model_from_tensors(tensors: dict, meta: dict, domain) -> PlannerModel:
    if meta.get("domain") != domain.name:
        raise ValueError(f"checkpoint is for domain {meta.get('domain')!r}, not {domain.name!r}")
    encoder = Encoder(domain.schema, _layout_for(domain))
    nets = {}
    for name in meta["heads"].split(","):
        sizes = tuple(int(s) for s in meta[f"sizes_{name}"].split("x"))
        nets[name] = net_from_tensors(name, sizes, meta[f"head_{name}"], tensors)
    return PlannerModel(encoder, nets, domain.name, float(meta["scale"]))
