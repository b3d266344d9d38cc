"""Subgoal serialization and recursive goal-regression planning.

The planner works against a "heads" provider: anything exposing
``satisfied``, ``dependency``, ``precondition``, ``reachable`` and
``slot_index``. Learned models and the hand-coded oracle both implement
this interface, so the same algorithms run in either mode. All calls are
pure functions of (heads, entity features, goal) and safe to run
concurrently over a read-only model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .goals import Atom, Goal


class Termination(enum.Enum):
    REACHABLE = "Reachable"
    ALL_SAT = "AllSat"
    NO_PREC = "NoPrec"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class PlanStep:
    """One regression level: what was considered and what was chosen."""

    goal: Goal
    unsatisfied: tuple[Atom, ...]
    dep_scores: np.ndarray | None
    block: Goal
    reachable_score: float | None
    precondition: Goal | None


@dataclass
class PlanTrace:
    steps: list[PlanStep] = field(default_factory=list)
    termination: Termination | None = None

    def render(self, indent: str = "  ") -> str:
        """Human-readable indented regression trace."""
        lines = []
        for depth, step in enumerate(self.steps):
            pad = indent * depth
            lines.append(f"{pad}goal: {step.goal}")
            sats = " ".join(str(a) for a in step.unsatisfied) or "(none)"
            lines.append(f"{pad}{indent}unsatisfied: {sats}")
            if step.block:
                rec = "" if step.reachable_score is None else f"  [reachable={step.reachable_score:.3f}]"
                lines.append(f"{pad}{indent}block: {step.block}{rec}")
            if step.precondition is not None:
                lines.append(f"{pad}{indent}precondition: {step.precondition or '(empty)'}")
        lines.append(f"termination: {self.termination.value if self.termination else '?'}")
        return "\n".join(lines)

    def export_lines(self) -> list[str]:
        lines = []
        for i, s in enumerate(self.steps):
            rec = "" if s.reachable_score is None else f"{s.reachable_score:.6f}"
            prec = "" if s.precondition is None else str(s.precondition or "")
            lines.append(f"step={i}\tgoal={s.goal}\tblock={s.block or ''}\trec={rec}\tprec={prec}")
        lines.append(f"termination={self.termination.value if self.termination else '?'}")
        return lines


@dataclass(frozen=True)
class PlanResult:
    status: Termination
    goal: Goal  # block to hand to the controller; empty unless REACHABLE
    trace: PlanTrace


# ---------------------------------------------------------------------------
# Block construction from a dependency score matrix


def _bron_kerbosch(adj: list[set[int]], n: int) -> list[frozenset[int]]:
    """Maximal cliques of an undirected graph, pivoting variant."""
    cliques: list[frozenset[int]] = []

    def expand(r: set, p: set, x: set):
        if not p and not x:
            cliques.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(adj[u] & p))
        for v in sorted(p - adj[pivot]):
            expand(r | {v}, p & adj[v], x & adj[v])
            p.remove(v)
            x.add(v)

    expand(set(), set(range(n)), set())
    return cliques


def _tarjan_scc(n: int, edges: set[tuple[int, int]]) -> list[frozenset[int]]:
    """Strongly connected components, iterative Tarjan."""
    out: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        out[a].append(b)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    sccs: list[frozenset[int]] = []
    counter = 0
    for root in range(n):
        if root in index:
            continue
        work = [(root, iter(out[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(out[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                sccs.append(frozenset(comp))
    return sccs


def find_blocks(
    dep: np.ndarray, threshold: float = 0.5
) -> tuple[list[frozenset[int]], set[tuple[int, int]]]:
    """Partition subgoal nodes into blocks and build an acyclic block graph.

    Thresholded mutual edges define an undirected graph whose maximal
    cliques (Bron-Kerbosch) seed the blocks; cliques are consumed in
    deterministic order (largest first, then lexicographic) so each node
    lands in exactly one block, and clique-free nodes become singletons.
    A block edge (a, b) means "a depends on b" and exists when any
    thresholded edge crosses from a to b. Residual directed cycles are
    collapsed by strongly-connected-component merging, so the returned
    edge set is a DAG over the returned blocks.
    """
    k = dep.shape[0]
    if dep.shape != (k, k):
        raise ValueError(f"dependency matrix must be square, got {dep.shape}")
    a = dep >= threshold
    np.fill_diagonal(a, False)
    mutual = a & a.T
    adj = [set(np.nonzero(mutual[i])[0].tolist()) for i in range(k)]
    cliques = [c for c in _bron_kerbosch(adj, k) if len(c) > 1]
    cliques.sort(key=lambda c: (-len(c), sorted(c)))
    assigned: set[int] = set()
    blocks: list[frozenset[int]] = []
    for c in cliques:
        rest = c - assigned
        if rest:
            blocks.append(frozenset(rest))
            assigned |= rest
    for i in range(k):
        if i not in assigned:
            blocks.append(frozenset({i}))
    blocks.sort(key=min)

    def block_of() -> dict[int, int]:
        owner = {}
        for bi, b in enumerate(blocks):
            for node in b:
                owner[node] = bi
        return owner

    owner = block_of()
    raw_edges = set()
    for i in range(k):
        for j in np.nonzero(a[i])[0]:
            bi, bj = owner[i], owner[int(j)]
            if bi != bj:
                raw_edges.add((bi, bj))
    sccs = _tarjan_scc(len(blocks), raw_edges)
    if any(len(s) > 1 for s in sccs):
        merged = [frozenset().union(*(blocks[i] for i in comp)) for comp in sccs]
        merged.sort(key=min)
        blocks = merged
        owner = block_of()
        raw_edges = {
            (owner[i], owner[int(j)])
            for i in range(k)
            for j in np.nonzero(a[i])[0]
            if owner[i] != owner[int(j)]
        }
    return blocks, raw_edges


def choose_sink_block(blocks: list[frozenset[int]], edges: set[tuple[int, int]]) -> frozenset[int]:
    """The block to complete first: no outgoing dependencies; ties broken
    by the lowest smallest member."""
    has_out = {a for a, _ in edges}
    sinks = [b for i, b in enumerate(blocks) if i not in has_out]
    return min(sinks, key=min)


# ---------------------------------------------------------------------------
# Algorithms over a heads provider


def subgoal_serialization(heads, ents, goal: Goal, threshold: float = 0.5):
    """Pick the subgoal block of ``goal`` to complete first.

    Returns (block goal, unsatisfied atoms, dependency matrix). Satisfied
    subgoals are filtered out first; an empty block means everything
    scored as satisfied.
    """
    unsat = [a for a in goal.atoms if heads.satisfied(ents, a) < threshold]
    unsat.sort(key=lambda a: (heads.slot_index(a), a.negated))
    if not unsat:
        return Goal(), tuple(), None
    dep = heads.dependency(ents, tuple(unsat))
    blocks, edges = find_blocks(dep, threshold)
    chosen = choose_sink_block(blocks, edges)
    return Goal([unsat[i] for i in sorted(chosen)]), tuple(unsat), dep


def regression_planning(heads, ents, goal: Goal, max_depth: int = 10) -> PlanResult:
    """Regress from ``goal`` until a block is reachable by the controller.

    Iterates serialize -> reachability test -> precondition prediction, at
    most ``max_depth`` times, mirroring the planner's error classes in the
    termination status: ALL_SAT when serialization filters everything,
    NO_PREC when an unreachable block yields an empty precondition,
    MAX_ITER when the depth budget runs out.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    trace = PlanTrace()
    current = goal
    for _ in range(max_depth):
        block, unsat, dep = subgoal_serialization(heads, ents, current)
        if not block:
            trace.steps.append(PlanStep(current, unsat, dep, block, None, None))
            trace.termination = Termination.ALL_SAT
            return PlanResult(Termination.ALL_SAT, Goal(), trace)
        rec = float(heads.reachable(ents, block))
        if rec > 0.5:
            trace.steps.append(PlanStep(current, unsat, dep, block, rec, None))
            trace.termination = Termination.REACHABLE
            return PlanResult(Termination.REACHABLE, block, trace)
        prec = heads.precondition(ents, block)
        trace.steps.append(PlanStep(current, unsat, dep, block, rec, prec))
        if not prec:
            trace.termination = Termination.NO_PREC
            return PlanResult(Termination.NO_PREC, Goal(), trace)
        current = prec
    trace.termination = Termination.MAX_ITER
    return PlanResult(Termination.MAX_ITER, Goal(), trace)
