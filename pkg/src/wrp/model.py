"""Core data model: capacitated graphs, problem instances, routes.

Vertices are dense integers 0..n-1 and edge ids are dense integers 0..m-1.
Transforms that add edges allocate new ids after the existing range, so ids
stay stable across every transform that keeps an edge alive.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass

from wrp.errors import InvalidRouteError, ValidationError


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    cap: int
    weight: int

    def other(self, vertex: int) -> int:
        if vertex == self.u:
            return self.v
        if vertex == self.v:
            return self.u
        raise ValueError(f"vertex {vertex} not an endpoint of edge {self.id}")


class CapacitatedGraph:
    """Connected undirected multigraph with integer capacities and weights.

    Parallel edges are allowed, self-loops are not.  Construction validates
    all invariants and raises ValidationError on the first failure.
    """

    __slots__ = ("n", "edges", "_incident")

    def __init__(self, n: int, edges):
        edges = tuple(
            e if isinstance(e, Edge) else Edge(*e) for e in edges
        )
        if n < 1:
            raise ValidationError("graph needs at least one vertex")
        ids = [e.id for e in edges]
        if ids != list(range(len(edges))):
            raise ValidationError("edge ids must be dense and in order 0..m-1")
        incident: list[list[int]] = [[] for _ in range(n)]
        for e in edges:
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise ValidationError(f"edge {e.id} endpoint out of range")
            if e.u == e.v:
                raise ValidationError(f"edge {e.id} is a self-loop")
            if e.cap < 1:
                raise ValidationError(f"edge {e.id} has capacity {e.cap} < 1")
            if e.weight < 0:
                raise ValidationError(f"edge {e.id} has negative weight")
            if not (isinstance(e.cap, int) and isinstance(e.weight, int)):
                raise ValidationError(f"edge {e.id} has non-integer cap/weight")
            incident[e.u].append(e.id)
            incident[e.v].append(e.id)
        self.n = n
        self.edges = edges
        self._incident = tuple(tuple(ids) for ids in incident)
        if not self._connected():
            raise ValidationError("graph is not connected")

    @property
    def m(self) -> int:
        return len(self.edges)

    def incident(self, v: int):
        """Edge ids incident to v, ascending."""
        return self._incident[v]

    def degree(self, v: int) -> int:
        return len(self._incident[v])

    def endpoints(self, eid: int):
        e = self.edges[eid]
        return e.u, e.v

    def adjacency_sets(self) -> list[set[int]]:
        """Simple adjacency (parallel edges collapsed)."""
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for e in self.edges:
            adj[e.u].add(e.v)
            adj[e.v].add(e.u)
        return adj

    def _connected(self) -> bool:
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for eid in self._incident[v]:
                w = self.edges[eid].other(v)
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(w)
        return count == self.n

    def __repr__(self):
        return f"CapacitatedGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class Instance:
    """A routing problem: graph, terminals s/t, waypoint set.

    Waypoints never contain s or t; both are dropped silently on
    construction since any s-t walk visits them anyway.
    """

    graph: CapacitatedGraph
    s: int
    t: int
    waypoints: frozenset[int] = frozenset()
    coords: dict | None = None

    def __post_init__(self):
        g = self.graph
        if not (0 <= self.s < g.n and 0 <= self.t < g.n):
            raise ValidationError("terminal out of range")
        wp = frozenset(self.waypoints) - {self.s, self.t}
        for v in wp:
            if not (0 <= v < g.n):
                raise ValidationError(f"waypoint {v} out of range")
        object.__setattr__(self, "waypoints", wp)
        if self.coords is not None:
            for v in self.coords:
                if not (0 <= v < g.n):
                    raise ValidationError(f"coordinate for unknown vertex {v}")


@dataclass(frozen=True)
class Route:
    """A walk: start vertex plus directed edge steps.

    Each step is (edge_id, forward) where forward means traversal from the
    edge's stored u endpoint to its v endpoint.
    """

    start: int
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "steps", tuple((int(e), bool(f)) for e, f in self.steps)
        )

    def vertex_path(self, graph: CapacitatedGraph) -> list[int]:
        """Vertex sequence of the walk; raises on a discontinuous route."""
        path = [self.start]
        cur = self.start
        for eid, fwd in self.steps:
            e = graph.edges[eid]
            src, dst = (e.u, e.v) if fwd else (e.v, e.u)
            if src != cur:
                raise InvalidRouteError(
                    [Violation("discontinuous", f"step edge {eid} does not start at {cur}")]
                )
            cur = dst
            path.append(cur)
        return path

    def edge_multiset(self) -> Counter:
        return Counter(eid for eid, _ in self.steps)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def describe(self) -> str:
        return f"{self.code}: {self.detail}"


def validate_route(instance: Instance, route: Route) -> list[Violation]:
    """Check a route against an instance; returns violations (empty = valid).

    Checks: endpoints match s/t, consecutive steps share vertices, per-edge
    traversal counts stay within capacity, every waypoint is visited.
    """
    g = instance.graph
    out: list[Violation] = []
    if not (0 <= route.start < g.n):
        return [Violation("start-unknown", f"vertex {route.start} not in graph")]
    if route.start != instance.s:
        out.append(Violation("start-mismatch", f"route starts at {route.start}, expected {instance.s}"))
    cur = route.start
    visited = {route.start}
    uses: Counter = Counter()
    for idx, (eid, fwd) in enumerate(route.steps):
        if not (0 <= eid < g.m):
            out.append(Violation("unknown-edge", f"step {idx} uses edge id {eid}"))
            continue
        e = g.edges[eid]
        src, dst = (e.u, e.v) if fwd else (e.v, e.u)
        if src != cur:
            out.append(Violation("discontinuous", f"step {idx} leaves {src} but walk is at {cur}"))
        cur = dst
        visited.add(src)
        visited.add(dst)
        uses[eid] += 1
    if cur != instance.t:
        out.append(Violation("end-mismatch", f"route ends at {cur}, expected {instance.t}"))
    for eid in sorted(uses):
        if uses[eid] > g.edges[eid].cap:
            out.append(
                Violation(
                    "capacity-exceeded",
                    f"edge {eid} used {uses[eid]}x, capacity {g.edges[eid].cap}",
                )
            )
    for w in sorted(instance.waypoints - visited):
        out.append(Violation("waypoint-missed", f"waypoint {w} never visited"))
    return out


def route_cost(instance: Instance, route: Route) -> int:
    """Total weight of a valid route; raises InvalidRouteError otherwise."""
    violations = validate_route(instance, route)
    if violations:
        raise InvalidRouteError(violations)
    g = instance.graph
    return sum(g.edges[eid].weight for eid, _ in route.steps)


@dataclass
class SolveResult:
    """Outcome of any solver backend.

    status is "feasible" or "infeasible"; cost/route are None when
    infeasible.  counters carries backend-specific effort numbers.
    """

    status: str
    cost: int | None = None
    route: Route | None = None
    counters: dict = None

    def __post_init__(self):
        if self.counters is None:
            self.counters = {}

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"
