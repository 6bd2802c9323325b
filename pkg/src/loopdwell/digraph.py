"""Digraphs that constrain which subsystem may follow which.

Vertices are labelled ``1..k`` throughout, matching the usual notation for
switched systems.  At most one edge per ordered pair; self-loops are allowed.
"""

from __future__ import annotations

import graphlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import CyclicGraph

Edge = tuple[int, int]


@dataclass(frozen=True)
class Digraph:
    k: int
    edges: frozenset[Edge]

    def __init__(self, k: int, edges: Iterable[Sequence[int]] = ()):
        if int(k) != k or k < 1:
            raise ValueError(f"vertex count must be a positive integer, got {k!r}")
        k = int(k)
        es = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if not (1 <= i <= k and 1 <= j <= k):
                raise ValueError(f"edge {(i, j)} references a vertex outside 1..{k}")
            es.add((i, j))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "edges", frozenset(es))

    @property
    def vertices(self) -> range:
        return range(1, self.k + 1)

    def successors(self, v: int) -> list[int]:
        return sorted(j for (i, j) in self.edges if i == v)

    def predecessors(self, v: int) -> list[int]:
        return sorted(i for (i, j) in self.edges if j == v)

    def out_degree(self, v: int) -> int:
        return sum(1 for (i, _) in self.edges if i == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for (_, j) in self.edges if j == v)

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.edges

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def subgraph(self, edges: Iterable[Edge]) -> "Digraph":
        """Same vertex set, restricted edge set."""
        edges = set(edges)
        if not edges <= self.edges:
            raise ValueError("subgraph edges must be edges of the parent graph")
        return Digraph(self.k, edges)

    def to_dict(self) -> dict:
        return {"k": self.k, "edges": [list(e) for e in self.sorted_edges()]}


@dataclass(frozen=True, order=True)
class SimpleLoop:
    """A simple loop, stored rotated so its smallest vertex comes first."""

    vertices: tuple[int, ...]

    def __post_init__(self):
        vs = tuple(int(v) for v in self.vertices)
        if not vs:
            raise ValueError("a loop needs at least one vertex")
        if len(set(vs)) != len(vs):
            raise ValueError(f"loop vertices must be distinct: {vs}")
        m = vs.index(min(vs))
        object.__setattr__(self, "vertices", vs[m:] + vs[:m])

    @property
    def length(self) -> int:
        return len(self.vertices)

    @property
    def edges(self) -> tuple[Edge, ...]:
        vs = self.vertices
        return tuple((vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))

    def sort_key(self):
        return (self.length, self.vertices)

    def __str__(self) -> str:
        return "->".join(str(v) for v in self.vertices + self.vertices[:1])


@dataclass(frozen=True)
class SubgraphPartition:
    """Split of the vertex set into stable and unstable subsystems.

    ``stable_subgraph`` keeps the edges leaving stable vertices and
    ``unstable_subgraph`` the edges leaving unstable ones; together they
    partition the edge set of ``graph``.
    """

    graph: Digraph
    stable: frozenset[int]
    unstable: frozenset[int] = field(init=False)

    def __post_init__(self):
        stable = frozenset(int(v) for v in self.stable)
        bad = [v for v in stable if v not in self.graph.vertices]
        if bad:
            raise ValueError(f"stable vertices {sorted(bad)} are not vertices of the graph")
        object.__setattr__(self, "stable", stable)
        object.__setattr__(
            self, "unstable", frozenset(v for v in self.graph.vertices if v not in stable)
        )

    @classmethod
    def from_bound(cls, graph: Digraph, r: int) -> "SubgraphPartition":
        """Vertices ``1..r`` stable, ``r+1..k`` unstable."""
        if not 0 <= r <= graph.k:
            raise ValueError(f"stable index bound must lie in 0..{graph.k}")
        return cls(graph, frozenset(range(1, r + 1)))

    @property
    def stable_subgraph(self) -> Digraph:
        return self.graph.subgraph(e for e in self.graph.edges if e[0] in self.stable)

    @property
    def unstable_subgraph(self) -> Digraph:
        return self.graph.subgraph(e for e in self.graph.edges if e[0] in self.unstable)

    def is_stable(self, v: int) -> bool:
        return v in self.stable


def adjacency_matrix(g: Digraph) -> np.ndarray:
    a = np.zeros((g.k, g.k), dtype=int)
    for i, j in g.edges:
        a[i - 1, j - 1] = 1
    return a


def enumerate_simple_loops(g: Digraph) -> list[SimpleLoop]:
    """All simple loops of ``g``, each exactly once.

    Backtracking from every start vertex ``s`` through vertices larger than
    ``s`` only, so each loop is found once, from its smallest vertex.  The
    result is sorted by length, then lexicographically.
    """
    succ = {v: g.successors(v) for v in g.vertices}
    found: list[SimpleLoop] = []
    for s in g.vertices:
        path = [s]
        on_path = {s}
        stack = [iter(succ[s])]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                on_path.discard(path.pop())
                continue
            if nxt == s:
                found.append(SimpleLoop(tuple(path)))
            elif nxt > s and nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                stack.append(iter(succ[nxt]))
    return sorted(found, key=SimpleLoop.sort_key)


def loop_count_bound(g: Digraph) -> int:
    """Sum over r = 1..k of trace(A^r); an upper bound on the number of simple loops."""
    a = adjacency_matrix(g).astype(object)
    total, power = 0, np.identity(g.k, dtype=int).astype(object)
    for _ in range(g.k):
        power = power.dot(a)
        total += int(np.trace(power))
    return total


def has_loop(g: Digraph) -> bool:
    try:
        topological_sort(g)
    except CyclicGraph:
        return True
    return False


def topological_sort(g: Digraph) -> list[int]:
    """Order the vertices so every edge's source precedes its target.

    Raises :class:`CyclicGraph` when ``g`` has a loop (self-loops included).
    """
    ts = graphlib.TopologicalSorter()
    for v in g.vertices:
        ts.add(v)
    for i, j in g.sorted_edges():
        ts.add(j, i)
    try:
        return list(ts.static_order())
    except graphlib.CycleError as exc:
        raise CyclicGraph(exc.args[1]) from None


def reachable_from(g: Digraph, i: int) -> set[int]:
    """Vertices reachable from ``i`` by a path of length >= 1."""
    seen: set[int] = set()
    queue = deque(g.successors(i))
    while queue:
        v = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        queue.extend(g.successors(v))
    return seen


def has_path(g: Digraph, i: int, j: int) -> bool:
    for v in (i, j):
        if v not in g.vertices:
            raise ValueError(f"vertex {v} outside 1..{g.k}")
    return j in reachable_from(g, i)


def is_strongly_connected(g: Digraph) -> bool:
    everything = set(g.vertices)
    return all(reachable_from(g, v) | {v} == everything for v in g.vertices)


def is_unidirectional_ring(g: Digraph) -> bool:
    """True when ``g`` is a single directed cycle through all of its k >= 2 vertices."""
    if g.k < 2 or len(g.edges) != g.k:
        return False
    if any(g.out_degree(v) != 1 or g.in_degree(v) != 1 for v in g.vertices):
        return False
    loops = enumerate_simple_loops(g)
    return len(loops) == 1 and loops[0].length == g.k


def is_bipartite_between(g: Digraph, part: SubgraphPartition) -> bool:
    """Every edge joins a stable vertex to an unstable one (in either direction)."""
    return all(part.is_stable(i) != part.is_stable(j) for i, j in g.edges)


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    detail: str = ""
    witnesses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "witnesses": list(self.witnesses),
        }


@dataclass
class HypothesisReport:
    checks: list[HypothesisCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> HypothesisCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def validate_hypotheses(g: Digraph, part: SubgraphPartition | None = None) -> HypothesisReport:
    """Check the graph-level standing assumptions.

    Always checked: the graph has a loop, and no vertex is a sink.  With a
    partition that has both classes: every unstable vertex reaches a stable
    one, and every stable vertex reaches an unstable one.
    """
    loops = enumerate_simple_loops(g)
    checks = [
        HypothesisCheck(
            "has_loop",
            bool(loops),
            f"{len(loops)} simple loop(s)" if loops else "graph is acyclic",
        )
    ]
    sinks = [v for v in g.vertices if g.out_degree(v) == 0]
    checks.append(
        HypothesisCheck(
            "nonzero_outdegree",
            not sinks,
            "every vertex has an outgoing edge" if not sinks else "sink vertices present",
            sinks,
        )
    )
    if part is not None and part.stable and part.unstable:
        stuck_u = [v for v in sorted(part.unstable) if not reachable_from(g, v) & part.stable]
        checks.append(
            HypothesisCheck(
                "unstable_reaches_stable",
                not stuck_u,
                "" if not stuck_u else "unstable vertices with no path to a stable vertex",
                stuck_u,
            )
        )
        stuck_s = [v for v in sorted(part.stable) if not reachable_from(g, v) & part.unstable]
        checks.append(
            HypothesisCheck(
                "stable_reaches_unstable",
                not stuck_s,
                "" if not stuck_s else "stable vertices with no path to an unstable vertex",
                stuck_s,
            )
        )
    return HypothesisReport(checks)
