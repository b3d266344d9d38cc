"""Symbolic goal language: predicates, atoms, conjunctive goals, grounding.

Goal text grammar (whitespace-insensitive)::

    goal := term ("&" term)*
    term := "!"? IDENT "(" IDENT ("," IDENT)* ")"

All values are immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator


class GoalError(Exception):
    """Base class for goal-language errors."""


class GoalSyntaxError(GoalError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text[pos:pos + 20]!r}")
        self.pos = pos


class EmptyGoalError(GoalError):
    pass


class UnknownPredicateError(GoalError):
    def __init__(self, name: str, pos: int = -1):
        super().__init__(f"unknown predicate {name!r} at position {pos}")
        self.name = name
        self.pos = pos


class UnknownEntityError(GoalError):
    def __init__(self, name: str, pos: int = -1):
        super().__init__(f"unknown entity {name!r} at position {pos}")
        self.name = name
        self.pos = pos


class ArityMismatchError(GoalError):
    def __init__(self, pred: str, expected: int, got: int, pos: int = -1):
        super().__init__(
            f"predicate {pred!r} takes {expected} argument(s), got {got} at position {pos}"
        )
        self.pos = pos


class ContradictoryGoalError(GoalError):
    def __init__(self, atom: "Atom"):
        super().__init__(f"goal contains both {atom} and its negation")


@dataclass(frozen=True)
class Predicate:
    """A named relation with fixed arity and entity-kind gates.

    ``arg_kinds`` restricts each argument position independently. For
    binary predicates, ``kind_pairs`` (when given) restricts which
    (kind, kind) combinations are valid, refining the positional gates.
    """

    name: str
    arity: int
    schema_id: str
    arg_kinds: tuple[frozenset[str], ...]
    kind_pairs: frozenset[tuple[str, str]] | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("predicate name must be nonempty")
        if self.arity not in (1, 2):
            raise ValueError(f"arity must be 1 or 2, got {self.arity}")
        if len(self.arg_kinds) != self.arity:
            raise ValueError("arg_kinds length must equal arity")
        if self.kind_pairs is not None and self.arity != 2:
            raise ValueError("kind_pairs applies to binary predicates only")


@dataclass(frozen=True)
class Atom:
    """A grounded predicate application, optionally negated."""

    predicate: Predicate
    args: tuple[str, ...]
    negated: bool = False

    def __post_init__(self):
        if len(self.args) != self.predicate.arity:
            raise ArityMismatchError(self.predicate.name, self.predicate.arity, len(self.args))

    @property
    def key(self) -> tuple:
        """Identity ignoring negation; used for contradiction checks and slot lookup."""
        return (self.predicate.name, self.args)

    def negate(self) -> "Atom":
        return Atom(self.predicate, self.args, not self.negated)

    def __str__(self) -> str:
        sign = "!" if self.negated else ""
        return f"{sign}{self.predicate.name}({','.join(self.args)})"

    def __repr__(self) -> str:
        return f"Atom({self})"


class Goal:
    """An ordered conjunction of atoms with order-insensitive equality.

    Construction rejects duplicate atoms and contradictory pairs {a, !a}.
    """

    __slots__ = ("atoms", "_set")

    def __init__(self, atoms: Iterable[Atom] = ()):
        atoms = tuple(atoms)
        seen: set[tuple] = set()
        keys: set[tuple] = set()
        for a in atoms:
            ident = (a.key, a.negated)
            if ident in seen:
                raise GoalError(f"duplicate atom {a} in goal")
            if a.key in keys:
                raise ContradictoryGoalError(a)
            seen.add(ident)
            keys.add(a.key)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_set", frozenset(seen))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Goal):
            return NotImplemented
        return self._set == other._set

    def __hash__(self) -> int:
        return hash(self._set)

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return (atom.key, atom.negated) in self._set

    def __str__(self) -> str:
        return format_goal(self) if self.atoms else "<empty>"

    def __repr__(self) -> str:
        return f"Goal({self})"


@dataclass(frozen=True)
class DomainSchema:
    """The symbolic planning space of one domain.

    ``entities`` is an ordered roster of (identifier, kind) pairs;
    ``feature_dim`` is the per-entity feature width and
    ``tuple_feature_dim`` the width of the model-facing entity-tuple
    features (equal to ``feature_dim`` in unary-only domains).
    """

    name: str
    predicates: tuple[Predicate, ...]
    entities: tuple[tuple[str, str], ...]
    feature_dim: int
    tuple_feature_dim: int = 0
    _pred_index: dict = field(default_factory=dict, repr=False, compare=False)
    _entity_kind: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.feature_dim <= 0:
            raise ValueError("feature_dim must be positive")
        if self.tuple_feature_dim == 0:
            object.__setattr__(self, "tuple_feature_dim", self.feature_dim)
        ids = [e for e, _ in self.entities]
        if len(set(ids)) != len(ids):
            raise ValueError("entity identifiers must be unique")
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise ValueError("predicate names must be unique within a schema")
        self._pred_index.update({p.name: p for p in self.predicates})
        self._entity_kind.update(dict(self.entities))

    @property
    def entity_ids(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.entities)

    def predicate(self, name: str) -> Predicate:
        try:
            return self._pred_index[name]
        except KeyError:
            raise UnknownPredicateError(name) from None

    def entity_kind(self, entity_id: str) -> str:
        try:
            return self._entity_kind[entity_id]
        except KeyError:
            raise UnknownEntityError(entity_id) from None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entity_kind

    def atom(self, pred_name: str, *args: str, negated: bool = False) -> Atom:
        """Convenience constructor that validates entity membership."""
        pred = self.predicate(pred_name)
        for a in args:
            if not self.has_entity(a):
                raise UnknownEntityError(a)
        return Atom(pred, tuple(args), negated)


_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_\-]*)|(?P<sym>[!&(),]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise GoalSyntaxError("unexpected character", text, pos)
        if m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("sym", m.group("sym"), m.start("sym")))
        pos = m.end()
    return tokens


def parse_goal(text: str, schema: DomainSchema) -> Goal:
    """Parse a ``&``-separated conjunction of optionally ``!``-negated terms.

    Raises:
        EmptyGoalError: blank input.
        GoalSyntaxError, UnknownPredicateError, UnknownEntityError,
        ArityMismatchError: with the offending token and position.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise EmptyGoalError("goal expression is empty")
    atoms: list[Atom] = []
    i = 0
    n = len(tokens)

    def expect(kind: str, value: str | None = None):
        nonlocal i
        if i >= n:
            raise GoalSyntaxError("unexpected end of input", text, len(text))
        k, v, p = tokens[i]
        if k != kind or (value is not None and v != value):
            raise GoalSyntaxError(f"expected {value or kind}", text, p)
        i += 1
        return v, p

    while True:
        negated = False
        if i < n and tokens[i][:2] == ("sym", "!"):
            negated = True
            i += 1
        pname, ppos = expect("ident")
        pred = schema._pred_index.get(pname)
        if pred is None:
            raise UnknownPredicateError(pname, ppos)
        expect("sym", "(")
        args: list[str] = []
        while True:
            ename, epos = expect("ident")
            if not schema.has_entity(ename):
                raise UnknownEntityError(ename, epos)
            args.append(ename)
            if i < n and tokens[i][:2] == ("sym", ","):
                i += 1
                continue
            break
        expect("sym", ")")
        if len(args) != pred.arity:
            raise ArityMismatchError(pname, pred.arity, len(args), ppos)
        atoms.append(Atom(pred, tuple(args), negated))
        if i >= n:
            break
        expect("sym", "&")
    return Goal(atoms)


def format_goal(g: Goal) -> str:
    """Canonical text form; ``parse_goal(format_goal(g))`` equals ``g``."""
    return " & ".join(str(a) for a in g.atoms)


@lru_cache(maxsize=None)
def ground_atoms(schema: DomainSchema) -> tuple[Atom, ...]:
    """Stable enumeration of every (predicate, entity-tuple) slot.

    Predicates are visited in schema order; entities in roster order.
    Binary predicates range over ordered pairs of distinct entities.
    Kind gates restrict each argument position. The result is a pure
    function of the schema.
    """
    slots: list[Atom] = []
    ids = schema.entity_ids
    kinds = [schema.entity_kind(e) for e in ids]
    for pred in schema.predicates:
        if pred.arity == 1:
            for e, k in zip(ids, kinds):
                if k in pred.arg_kinds[0]:
                    slots.append(Atom(pred, (e,)))
        else:
            for e1, k1 in zip(ids, kinds):
                if k1 not in pred.arg_kinds[0]:
                    continue
                for e2, k2 in zip(ids, kinds):
                    if e1 == e2 or k2 not in pred.arg_kinds[1]:
                        continue
                    if pred.kind_pairs is not None and (k1, k2) not in pred.kind_pairs:
                        continue
                    slots.append(Atom(pred, (e1, e2)))
    return tuple(slots)
