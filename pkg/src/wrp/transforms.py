"""Instance-preserving transformations and their route back-maps.

Each operation returns (transformed thing, TraceStep or None).  Steps are
collected in a TransformTrace; mapping a route back applies the steps in
reverse order.  Weight bookkeeping: clamp and the cycle reduction keep the
scale, unification multiplies all weights by 2 (recorded in the step), so
original cost = transformed cost / scale - 2 * (1 if cycle step applied).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from wrp.errors import InternalError, ValidationError
from wrp.model import CapacitatedGraph, Edge, Instance, Route


class TraceStep:
    kind = "abstract"
    scale = 1

    def map_route_back(self, route: Route) -> Route:
        raise NotImplementedError


@dataclass
class TransformTrace:
    steps: list = field(default_factory=list)

    def add(self, step: TraceStep | None):
        if step is not None:
            self.steps.append(step)

    @property
    def scale(self) -> int:
        out = 1
        for s in self.steps:
            out *= s.scale
        return out

    def map_route_back(self, route: Route) -> Route:
        for step in reversed(self.steps):
            route = step.map_route_back(route)
        return route

    def summary(self) -> str:
        names = ",".join(s.kind for s in self.steps) or "none"
        return f"{names} scale={self.scale}"


class ClampStep(TraceStep):
    kind = "clamp"

    def map_route_back(self, route: Route) -> Route:
        return route


def clamp_capacities(g: CapacitatedGraph):
    """Replace every capacity by min(cap, 2); optimum is unchanged since a
    shortest walk never uses an edge more than twice."""
    recs = [Edge(e.id, e.u, e.v, min(e.cap, 2), e.weight) for e in g.edges]
    return CapacitatedGraph(g.n, recs), ClampStep()


def clamp_instance(inst: Instance):
    g2, step = clamp_capacities(inst.graph)
    return Instance(g2, inst.s, inst.t, inst.waypoints, inst.coords), step


@dataclass
class CycleStep(TraceStep):
    kind = "cycle"
    old_s: int = 0
    old_t: int = 0
    new_vertex: int = 0
    edge_s: int = 0
    edge_t: int = 0

    def map_route_back(self, route: Route) -> Route:
        if route.start != self.new_vertex:
            raise InternalError("cycle back-map expects a route at the new vertex")
        if len(route.steps) < 2:
            raise InternalError("cycle route too short to strip anchor edges")
        first, last = route.steps[0], route.steps[-1]
        ids = {first[0], last[0]}
        if ids != {self.edge_s, self.edge_t}:
            raise InternalError("cycle route does not start/end on the anchor edges")
        middle = route.steps[1:-1]
        if first[0] == self.edge_s:
            return Route(self.old_s, middle)
        # walked t-side first; reverse the middle
        rev = tuple((eid, not fwd) for eid, fwd in reversed(middle))
        return Route(self.old_s, rev)


def reduce_to_cycle(inst: Instance):
    """Make s = t by adding a fresh vertex joined to both terminals with
    unit edges; old terminals become waypoints, optimum grows by exactly 2.
    Identity (no trace step) when s = t already."""
    if inst.s == inst.t:
        return inst, None
    g = inst.graph
    nv = g.n
    recs = list(g.edges)
    e_s = Edge(g.m, inst.s, nv, 1, 1)
    e_t = Edge(g.m + 1, inst.t, nv, 1, 1)
    recs += [e_s, e_t]
    g2 = CapacitatedGraph(g.n + 1, recs)
    inst2 = Instance(g2, nv, nv, inst.waypoints | {inst.s, inst.t})
    step = CycleStep(
        old_s=inst.s, old_t=inst.t, new_vertex=nv, edge_s=e_s.id, edge_t=e_t.id
    )
    return inst2, step


@dataclass
class UnifyStep(TraceStep):
    kind = "unify"
    scale = 2
    # half edge id -> (original edge id, forward_half) where forward_half
    # True means the half leaving the original u endpoint
    half_origin: dict = field(default_factory=dict)
    original_edges: tuple = ()

    def map_route_back(self, route: Route) -> Route:
        steps = route.steps
        if len(steps) % 2 != 0:
            raise InternalError("unified route has odd step count")
        out = []
        for i in range(0, len(steps), 2):
            (e1, f1), (e2, f2) = steps[i], steps[i + 1]
            o1 = self.half_origin.get(e1)
            o2 = self.half_origin.get(e2)
            if o1 is None or o2 is None:
                raise InternalError("unified route uses unknown edge")
            (orig1, u_half1), (orig2, u_half2) = o1, o2
            if orig1 != orig2 or e1 == e2 or e1 // 2 != e2 // 2:
                raise InternalError("unified route halves do not pair up")
            # entering from the u side: first half is the u-half forwards
            if u_half1 and f1 and not u_half2 and f2:
                out.append((orig1, True))
            elif not u_half1 and not f1 and u_half2 and not f2:
                out.append((orig1, False))
            else:
                raise InternalError("unified route crosses a subdivision inconsistently")
        return Route(route.start, tuple(out))


def unify(g: CapacitatedGraph):
    """Replace each edge by cap(e) parallel 2-edge paths through fresh
    vertices; all capacities become 1.  Weights are globally doubled and
    each half carries the original weight (scale factor 2 in the trace)."""
    if any(e.cap > 2 for e in g.edges):
        raise ValidationError("unify requires capacities <= 2; clamp first")
    recs: list[Edge] = []
    half_origin: dict[int, tuple[int, bool]] = {}
    nv = g.n
    for e in g.edges:
        for _ in range(e.cap):
            x = nv
            nv += 1
            h1 = Edge(len(recs), e.u, x, 1, e.weight)
            recs.append(h1)
            half_origin[h1.id] = (e.id, True)
            h2 = Edge(len(recs), x, e.v, 1, e.weight)
            recs.append(h2)
            half_origin[h2.id] = (e.id, False)
    g2 = CapacitatedGraph(nv, recs)
    step = UnifyStep(half_origin=half_origin, original_edges=g.edges)
    return g2, step


def unify_instance(inst: Instance):
    g2, step = unify(inst.graph)
    return Instance(g2, inst.s, inst.t, inst.waypoints), step
