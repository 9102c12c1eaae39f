"""Reduction of waypoint routing to vertex-disjoint cycle search.

Pipeline: make s = t (fresh anchor vertex), normalize the graph to a simple
one with unit weights and capacities, expand it so that edge-disjoint walks
become vertex-disjoint paths, and search a shortest cycle through the
mandatory vertices with a pluggable backend.

The expansion replaces every vertex by a clique on degree+1 vertices (one
port per incident edge plus a hub carrying the s/t/waypoint markers), keeps
hub-port connections direct, subdivides every port-port connection once,
and replaces every original edge by a path of three edges.  Any crossing of
a clique then costs exactly 2, terminal visits cost 1, and each edge costs
3, so a route of length L corresponds to a qualifying path of length 5*L
and vice versa.

The bundled backend enumerates simple cycles by iterative-deepening
backtracking with distance lower bounds; it is exact and deterministic and
meant for small waypoint counts on desk-scale graphs.  Faster published
cycle-search routines can be slotted in behind the same interface.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from wrp.errors import (
    BackendUnavailableError,
    InternalError,
    ResourceLimitError,
    ValidationError,
)
from wrp.model import CapacitatedGraph, Edge, Instance, Route, SolveResult, route_cost
from wrp.transforms import TraceStep, TransformTrace, reduce_to_cycle

DEFAULT_MAX_K = 6
DEFAULT_NODE_BUDGET = 5_000_000


# ---------------------------------------------------------------------------
# Normalization: simple graph, unit weights, unit capacities.


@dataclass
class NormalizeStep(TraceStep):
    """Maps routes on the normalized graph back to the original one.

    Every original edge becomes cap(e) parallel chains (capacity clamped to
    2 first), each chain consisting of 2*weight(e) unit edges: the weight
    expansion inserts weight-1 vertices and placing one more vertex on every
    remaining edge removes all parallels.  Distances scale by exactly 2.
    """

    kind = "normalize"
    scale = 2
    # normalized edge id -> (original edge id, chain index, position)
    seg_origin: dict = field(default_factory=dict)
    # (original edge id, chain index) -> normalized edge ids from u to v
    chains: dict = field(default_factory=dict)
    caps: dict = field(default_factory=dict)

    def map_route_back(self, route: Route) -> Route:
        out = []
        i = 0
        steps = route.steps
        while i < len(steps):
            eid, fwd = steps[i]
            org = self.seg_origin.get(eid)
            if org is None:
                raise InternalError("normalized route uses an unknown edge")
            orig, chain, pos = org
            seq = self.chains[(orig, chain)]
            length = len(seq)
            if fwd:
                if pos != 0:
                    raise InternalError("normalized route enters a chain mid-way")
                expect = [(seq[k], True) for k in range(length)]
            else:
                if pos != length - 1:
                    raise InternalError("normalized route enters a chain mid-way")
                expect = [(seq[length - 1 - k], False) for k in range(length)]
            if list(steps[i : i + length]) != expect:
                raise InternalError("normalized route does not follow a chain")
            out.append((orig, fwd))
            i += length
        return Route(route.start, tuple(out))

    def map_route_forward(self, route: Route) -> Route:
        """Lift a route on the original graph onto the normalized one."""
        used: dict = {}
        out = []
        for eid, fwd in route.steps:
            chain = used.get(eid, 0)
            used[eid] = chain + 1
            if chain >= self.caps[eid]:
                raise ValidationError(f"route uses edge {eid} beyond its capacity")
            seq = self.chains[(eid, chain)]
            if fwd:
                out.extend((ne, True) for ne in seq)
            else:
                out.extend((ne, False) for ne in reversed(seq))
        return Route(route.start, tuple(out))


def normalize_simple_unit(g: CapacitatedGraph):
    """Rebuild g as a simple graph with unit weights and unit capacities.

    Capacities are clamped to 2 and capacity-2 edges duplicated; an edge of
    weight w expands to a chain of 2*w unit edges (w-1 vertices from the
    weight expansion plus one vertex on every edge to remove parallels).
    Returns (graph, NormalizeStep); the step doubles distances (scale 2).
    Rejects zero-weight edges, whose expansion would be empty.
    """
    for e in g.edges:
        if e.weight < 1:
            raise ValidationError(
                f"edge {e.id} has weight 0; unit expansion needs weights >= 1"
            )
    step = NormalizeStep()
    recs: list = []
    nv = g.n
    for e in g.edges:
        cap = min(e.cap, 2)
        step.caps[e.id] = cap
        for chain in range(cap):
            inner = 2 * e.weight - 1
            verts = [e.u] + list(range(nv, nv + inner)) + [e.v]
            nv += inner
            ids = []
            for pos in range(2 * e.weight):
                ne = Edge(len(recs), verts[pos], verts[pos + 1], 1, 1)
                recs.append(ne)
                step.seg_origin[ne.id] = (e.id, chain, pos)
                ids.append(ne.id)
            step.chains[(e.id, chain)] = tuple(ids)
    return CapacitatedGraph(nv, recs), step


def normalize_instance(inst: Instance):
    """normalize_simple_unit on the graph; terminals and waypoints keep
    their ids since original vertices come first."""
    g2, step = normalize_simple_unit(inst.graph)
    return Instance(g2, inst.s, inst.t, inst.waypoints), step


# ---------------------------------------------------------------------------
# The expanded search graph.


@dataclass(frozen=True)
class Prov:
    """Provenance of one expansion vertex.

    kind is "hub" (carries markers of original vertex), "port" (attachment
    of one incident edge), "rim" (subdivision vertex between two ports of
    the same clique) or "epath" (one of the two vertices on an original
    edge's 3-edge path).
    """

    kind: str
    vertex: int | None = None
    edge: int | None = None
    edge2: int | None = None

    def describe(self) -> str:
        if self.kind == "hub":
            return f"hub v={self.vertex}"
        if self.kind == "port":
            return f"port v={self.vertex} e={self.edge}"
        if self.kind == "rim":
            return f"rim v={self.vertex} e1={self.edge} e2={self.edge2}"
        return f"epath e={self.edge} side={'u' if self.edge2 == 0 else 'v'}"

    def token(self) -> str:
        """Single-token form for sidecar files."""
        if self.kind == "hub":
            return f"hub:{self.vertex}"
        if self.kind == "port":
            return f"port:{self.vertex}:{self.edge}"
        if self.kind == "rim":
            return f"rim:{self.vertex}:{self.edge}:{self.edge2}"
        return f"epath:{self.edge}:{'u' if self.edge2 == 0 else 'v'}"


@dataclass
class WaypointLineGraph:
    """Expansion of a simple unit graph for vertex-disjoint cycle search.

    graph is the expanded simple unit graph, source the graph it was built
    from.  hub/port/rim/epath map source objects to expansion vertex ids;
    prov is the inverse, one record per expansion vertex.
    """

    graph: CapacitatedGraph
    source: CapacitatedGraph
    prov: tuple
    hub: dict
    port: dict
    rim: dict
    epath: dict
    s_hub: int
    t_hub: int
    waypoint_hubs: dict
    waypoints: frozenset

    def required_hubs(self) -> frozenset:
        return frozenset({self.s_hub, self.t_hub} | set(self.waypoint_hubs.values()))

    def rim_mid(self, v: int, e1: int, e2: int) -> int:
        return self.rim[(v, min(e1, e2), max(e1, e2))]

    def prov_lines(self) -> list:
        return [f"prov {vid} {p.token()}" for vid, p in enumerate(self.prov)]


def build_waypoint_line_graph(
    g: CapacitatedGraph, s: int, t: int, waypoints=()
) -> WaypointLineGraph:
    """Expand a simple unit-weight unit-capacity graph for disjoint search.

    Per vertex v of degree d: a hub v' plus ports v_1..v_d (one per incident
    edge in ascending edge-id order) forming a clique in which hub-port
    connections are single edges and every port-port connection is
    subdivided once.  Every original edge becomes a 3-edge path between its
    two ports.  s, t and waypoint markers sit on the hubs.
    """
    adj = g.adjacency_sets()
    for e in g.edges:
        if e.cap != 1 or e.weight != 1:
            raise ValidationError("expansion needs unit weights and capacities")
    pair_count = sum(len(a) for a in adj) // 2
    if pair_count != g.m:
        raise ValidationError("expansion needs a simple graph; normalize first")
    waypoints = frozenset(waypoints)

    prov: list = []
    edges: list = []

    def add_vertex(p: Prov) -> int:
        prov.append(p)
        return len(prov) - 1

    def add_edge(a: int, b: int) -> None:
        edges.append(Edge(len(edges), a, b, 1, 1))

    hub: dict = {}
    port: dict = {}
    rim: dict = {}
    for v in range(g.n):
        hub[v] = add_vertex(Prov("hub", vertex=v))
        inc = sorted(g.incident(v))
        for eid in inc:
            port[(v, eid)] = add_vertex(Prov("port", vertex=v, edge=eid))
            add_edge(hub[v], port[(v, eid)])
        for i, e1 in enumerate(inc):
            for e2 in inc[i + 1 :]:
                mid = add_vertex(Prov("rim", vertex=v, edge=e1, edge2=e2))
                rim[(v, e1, e2)] = mid
                add_edge(port[(v, e1)], mid)
                add_edge(mid, port[(v, e2)])
    epath: dict = {}
    for e in g.edges:
        pa = add_vertex(Prov("epath", edge=e.id, edge2=0))
        pb = add_vertex(Prov("epath", edge=e.id, edge2=1))
        epath[e.id] = (pa, pb)
        add_edge(port[(e.u, e.id)], pa)
        add_edge(pa, pb)
        add_edge(pb, port[(e.v, e.id)])

    lg = WaypointLineGraph(
        graph=CapacitatedGraph(len(prov), edges),
        source=g,
        prov=tuple(prov),
        hub=hub,
        port=port,
        rim=rim,
        epath=epath,
        s_hub=hub[s],
        t_hub=hub[t],
        waypoint_hubs={w: hub[w] for w in sorted(waypoints)},
        waypoints=waypoints,
    )
    return lg


# ---------------------------------------------------------------------------
# Route <-> path translation (the 5x correspondence).


def map_route_to_path(lg: WaypointLineGraph, route: Route) -> tuple:
    """Translate a route on the source graph into a vertex-disjoint path.

    The route must be valid on the source instance the expansion was built
    for (start s, end t, every edge at most once, waypoints covered).  The
    result starts at the s hub, ends at the t hub, passes all waypoint hubs
    and has exactly 5 * len(route.steps) edges.
    """
    g = lg.source
    vs = route.vertex_path(g)
    x = len(route.steps)
    if lg.hub.get(vs[0]) != lg.s_hub:
        raise ValidationError("route does not start at the marked start vertex")
    if x == 0:
        if lg.s_hub != lg.t_hub:
            raise ValidationError("empty route on an instance with distinct terminals")
        if lg.waypoints:
            raise ValidationError("empty route misses the waypoints")
        return (lg.s_hub,)
    if lg.hub.get(vs[-1]) != lg.t_hub:
        raise ValidationError("route does not end at the marked end vertex")
    eids = [eid for eid, _fwd in route.steps]
    if len(set(eids)) != len(eids):
        raise ValidationError("route reuses an edge; capacities here are 1")
    missing = lg.waypoints - set(vs)
    if missing:
        raise ValidationError(f"route misses waypoint {min(missing)}")

    path = [lg.s_hub, lg.port[(vs[0], eids[0])]]
    crossed: set = set()
    for i, (eid, fwd) in enumerate(route.steps):
        pa, pb = lg.epath[eid]
        path.extend((pa, pb) if fwd else (pb, pa))
        dst = vs[i + 1]
        path.append(lg.port[(dst, eid)])
        if i + 1 < x:
            nxt = eids[i + 1]
            if dst in lg.waypoints and dst not in crossed:
                crossed.add(dst)
                mid = lg.hub[dst]
            else:
                mid = lg.rim_mid(dst, eid, nxt)
            path.append(mid)
            path.append(lg.port[(dst, nxt)])
    path.append(lg.t_hub)

    closed = path[0] == path[-1]
    core = path[:-1] if closed else path
    if len(set(core)) != len(core):
        raise InternalError("translated path repeats a vertex")
    if len(path) - 1 != 5 * x:
        raise InternalError("translated path does not have 5x edges")
    return tuple(path)


def map_path_to_route(lg: WaypointLineGraph, path, trace: TransformTrace | None = None) -> Route:
    """Translate a qualifying vertex-disjoint path back into a route.

    The path must run from the s hub to the t hub inside the expansion,
    repeat no vertex (the closing hub of a cycle aside), and touch every
    waypoint hub.  Consecutive vertices must be connected; anything that
    hops between cliques without crossing an edge path is rejected.  The
    result is a route on the source graph, or on whatever instance the
    optional trace maps back to; its cost is at most len(path)/5.
    """
    path = tuple(path)
    if not path:
        raise ValidationError("empty vertex sequence")
    if path[0] != lg.s_hub:
        raise ValidationError("path must start at the start hub")
    if path[-1] != lg.t_hub:
        raise ValidationError("path must end at the end hub")
    for vid in path:
        if not 0 <= vid < lg.graph.n:
            raise ValidationError(f"path vertex {vid} is not in the expansion")
    closed = len(path) > 1 and path[0] == path[-1]
    core = path[:-1] if closed else path
    if len(set(core)) != len(core):
        raise ValidationError("path repeats a vertex")
    missing = lg.required_hubs() - set(path)
    if missing:
        raise ValidationError(f"path misses mandatory hub {min(missing)}")
    adj = lg.graph.adjacency_sets()
    for a, b in zip(path, path[1:]):
        if b not in adj[a]:
            raise ValidationError(f"path jumps between non-adjacent vertices {a},{b}")

    s_orig = lg.prov[lg.s_hub].vertex
    steps: list = []
    at_vertex = s_orig
    i = 0
    while i < len(path):
        p = lg.prov[path[i]]
        if p.kind == "epath":
            if i + 1 >= len(path) or lg.prov[path[i + 1]].kind != "epath":
                raise ValidationError("path enters an edge chain without crossing it")
            q = lg.prov[path[i + 1]]
            if q.edge != p.edge:
                raise ValidationError("path mixes two edge chains")
            e = lg.source.edges[p.edge]
            fwd = p.edge2 == 0
            src, dst = (e.u, e.v) if fwd else (e.v, e.u)
            if src != at_vertex:
                raise ValidationError("path leaves a clique through the wrong edge")
            steps.append((e.id, fwd))
            at_vertex = dst
            i += 2
        else:
            if p.vertex != at_vertex:
                raise ValidationError("path enters a clique it did not reach")
            i += 1
    if at_vertex != lg.prov[lg.t_hub].vertex:
        raise InternalError("translated route ends at the wrong vertex")
    route = Route(s_orig, tuple(steps))
    if trace is not None:
        route = trace.map_route_back(route)
    return route


# ---------------------------------------------------------------------------
# Reference backend: exhaustive shortest disjoint cycle / path search.


class ExhaustiveKCycleBackend:
    """Shortest vertex-disjoint cycle or path through mandatory vertices.

    Compresses chains of degree-2 vertices into weighted corridors, then
    runs iterative-deepening depth-first search over simple corridor
    sequences, expanding the lowest-id neighbor first and pruning with
    shortest-distance lower bounds through the unvisited mandatory
    vertices.  Exact and deterministic; intended for small mandatory sets
    (limit configurable, default 6 beyond the start) on desk-scale graphs.
    """

    name = "exhaustive"

    def __init__(self, max_k: int = DEFAULT_MAX_K, node_budget: int = DEFAULT_NODE_BUDGET):
        self.max_k = max_k
        self.node_budget = node_budget
        self.counters: dict = {}
        # Callers that can prove every qualifying traversal length is a
        # multiple of some quantum may set it; deepening then only stops at
        # feasible totals.  1 assumes nothing.
        self.quantum = 1

    # -- corridor compression ------------------------------------------------

    @staticmethod
    def _chains(g: CapacitatedGraph, keep):
        """Contract maximal chains of degree-2 vertices not in keep.

        Returns corridors as tuples (junction_a, junction_b, length,
        interior vertex list from a to b).  Chains that loop back to their
        junction are split in the middle so every corridor has two distinct
        endpoints.
        """
        keep = set(keep)
        while True:
            junctions = {v for v in range(g.n) if g.degree(v) != 2} | keep
            corridors = []
            seen_dir: set = set()
            split = None
            for j in sorted(junctions):
                for eid in g.incident(j):
                    if (j, eid) in seen_dir:
                        continue
                    seen_dir.add((j, eid))
                    interior = []
                    cur, ce = g.edges[eid].other(j), eid
                    length = 1
                    while cur not in junctions:
                        interior.append(cur)
                        nxt_e = [x for x in g.incident(cur) if x != ce]
                        if len(nxt_e) != 1:
                            raise InternalError("degree-2 chain walk left the chain")
                        ce = nxt_e[0]
                        cur = g.edges[ce].other(cur)
                        length += 1
                    seen_dir.add((cur, ce))
                    if cur == j and not interior:
                        raise InternalError("parallel connection between junctions")
                    if cur == j:
                        split = interior[len(interior) // 2]
                        break
                    corridors.append((j, cur, length, interior))
                if split is not None:
                    break
            if split is None:
                return corridors
            keep.add(split)

    @classmethod
    def _compress(cls, g: CapacitatedGraph, keep):
        """Reduce g to a corridor multigraph between mandatory vertices.

        Every rewrite preserves the set of qualifying traversals up to
        equal-length exchanges: loop corridors cannot appear in any
        traversal that must reach a vertex outside them, a traversal uses
        two corridors of the same endpoint pair only when it consists of
        exactly those two (so only the pair covering all of keep needs
        parallels, everything else keeps the shortest), chains hanging off
        a non-mandatory degree-1 junction are unusable, and a
        non-mandatory degree-2 junction joins its two corridors.  Iterated
        to a fixpoint this collapses the expansion back to source-graph
        scale.  Returns (junctions, corridors).
        """
        keep = set(keep)
        corridors = [list(c) for c in cls._chains(g, keep)]
        alive = [True] * len(corridors)

        def oriented(cid: int, frm: int):
            u, v, length, interior = corridors[cid]
            if frm == u:
                return v, list(interior)
            return u, list(interior)[::-1]

        changed = True
        while changed:
            changed = False
            by_pair: dict = {}
            deg: dict = {}
            inc: dict = {}
            for cid, c in enumerate(corridors):
                if not alive[cid]:
                    continue
                u, v = c[0], c[1]
                if u == v:
                    if not keep <= {u}:
                        alive[cid] = False
                        changed = True
                    continue
                by_pair.setdefault(frozenset((u, v)), []).append(cid)
                for x in (u, v):
                    deg[x] = deg.get(x, 0) + 1
                    inc.setdefault(x, []).append(cid)
            if changed:
                continue
            for pair, cids in sorted(by_pair.items(), key=lambda kv: sorted(kv[0])):
                allowed = 2 if keep <= pair else 1
                if len(cids) > allowed:
                    cids.sort(key=lambda cid: (corridors[cid][2], cid))
                    for cid in cids[allowed:]:
                        alive[cid] = False
                    changed = True
            if changed:
                continue
            for j in sorted(deg):
                if j in keep:
                    continue
                if deg[j] == 1:
                    alive[inc[j][0]] = False
                    changed = True
                    break
                if deg[j] == 2:
                    c1, c2 = inc[j]
                    x, i1 = oriented(c1, j)
                    y, i2 = oriented(c2, j)
                    length = corridors[c1][2] + corridors[c2][2]
                    interior = i1[::-1] + [j] + i2
                    alive[c1] = False
                    alive[c2] = False
                    corridors.append([x, y, length, interior])
                    alive.append(True)
                    changed = True
                    break

        final = [tuple(c) for cid, c in enumerate(corridors) if alive[cid]]
        junctions = set(keep)
        for u, v, _length, _interior in final:
            junctions.add(u)
            junctions.add(v)
        return junctions, final

    def search(self, g: CapacitatedGraph, required, a: int, b: int):
        """Shortest vertex-disjoint traversal from a to b covering required.

        a == b asks for a cycle (or the empty traversal when nothing else
        is required); a != b asks for a path.  Returns (length, vertex
        tuple) or None when no qualifying traversal exists.  Raises
        ResourceLimitError when the mandatory set exceeds max_k or the
        node budget runs out.
        """
        required = frozenset(required) | {a, b}
        for v in required:
            if not 0 <= v < g.n:
                raise ValidationError(f"mandatory vertex {v} is not in the graph")
        if len(required) - 1 > self.max_k:
            raise ResourceLimitError(
                f"{len(required) - 1} mandatory vertices beyond the start exceed "
                f"the backend limit {self.max_k}"
            )
        if a == b and required == {a}:
            self.counters = {"nodes": 0, "limits": 0}
            return 0, (a,)

        junctions, corridors = self._compress(g, required)
        jlist = sorted(junctions)
        jidx = {v: i for i, v in enumerate(jlist)}
        nj = len(jlist)
        # Neighbor lists in index space, sorted so the lowest-id junction is
        # expanded first (jlist is sorted, so index order is vertex order).
        nbr: list = [[] for _ in range(nj)]
        for cid, (u, v, length, _interior) in enumerate(corridors):
            nbr[jidx[u]].append((jidx[v], cid, length))
            nbr[jidx[v]].append((jidx[u], cid, length))
        nbr = [tuple(sorted(lst)) for lst in nbr]

        # Corridor-degree obstruction: a traversal enters and leaves every
        # mandatory vertex except open endpoints, which need one corridor.
        for r in sorted(required):
            need = 2 if (r not in (a, b) or a == b) else 1
            if len(nbr[jidx[r]]) < need:
                self.counters = {"nodes": 0, "limits": 0}
                return None

        ai, bi = jidx[a], jidx[b]
        req_list = [jidx[v] for v in sorted(required - {a, b})]
        kbits = len(req_list)
        full_mask = (1 << kbits) - 1
        req_bit = [0] * nj
        for i, r in enumerate(req_list):
            req_bit[r] = 1 << i

        # Shortest distances from every mandatory vertex over corridor
        # lengths, ignoring disjointness (the basis of the lower bounds).
        dmaps: dict = {}
        for src in req_list + [bi]:
            d: list = [None] * nj
            d[src] = 0
            heap = [(0, src)]
            while heap:
                dv, v = heapq.heappop(heap)
                if dv > d[v]:
                    continue
                for w, _cid, length in nbr[v]:
                    nd = dv + length
                    if d[w] is None or nd < d[w]:
                        d[w] = nd
                        heapq.heappush(heap, (nd, w))
            dmaps[src] = d

        def pair_dist(x: int, y: int) -> int | None:
            d = dmaps.get(y)
            return d[x] if d is not None else dmaps[x][y]

        bit_vertex = {1 << i: r for i, r in enumerate(req_list)}
        bcache: dict = {}

        def bound(cur: int, mask: int) -> int | None:
            """Remaining length is at least the metric-closure MST over the
            unvisited mandatory vertices plus cur and b: splitting the rest
            of the traversal at its visits of those vertices gives a
            spanning path whose legs are shortest distances at best.  The
            single through-w leg bound can still win on three points, so
            take the larger of the two."""
            pts = [cur]
            if bi != cur:
                pts.append(bi)
            m = mask
            while m:
                low = m & -m
                pts.append(bit_vertex[low])
                m ^= low
            reach = {p: pair_dist(pts[0], p) for p in pts[1:]}
            mst = 0
            while reach:
                pick, dmin = None, None
                for p, dp in reach.items():
                    if dp is not None and (dmin is None or dp < dmin):
                        pick, dmin = p, dp
                if pick is None:
                    bcache[(cur << kbits) | mask] = None
                    return None
                mst += dmin
                del reach[pick]
                for p in reach:
                    dp = pair_dist(pick, p)
                    if reach[p] is None or (dp is not None and dp < reach[p]):
                        reach[p] = dp
            best = mst
            m = mask
            while m:
                low = m & -m
                w = bit_vertex[low]
                m ^= low
                cand = pair_dist(w, cur) + pair_dist(w, bi)
                if cand > best:
                    best = cand
            bcache[(cur << kbits) | mask] = best
            return best

        start_bound = bound(ai, full_mask)
        if start_bound is None:
            self.counters = {"nodes": 0, "limits": 0}
            return None
        max_total = sum(c[2] for c in corridors)

        # Corridors per junction pair, shortest first, for the shortcut
        # dominance prune below.
        pairc: dict = {}
        for cid, (u, v, length, _interior) in enumerate(corridors):
            key = (jidx[u], jidx[v]) if jidx[u] < jidx[v] else (jidx[v], jidx[u])
            pairc.setdefault(key, []).append((length, cid))
        for lst in pairc.values():
            lst.sort()

        budget = self.node_budget
        used_j = bytearray(nj)
        used_j[ai] = 1
        used_c = bytearray(len(corridors))
        seq: list = []
        state = {"nodes": 0, "limit": 0, "over": 0, "best": None, "seq": None}
        infinity = max_total + 1

        cyclic = ai == bi

        def dfs(cur: int, dlen: int, mask: int, prev: int, plen: int, bget=bcache.get) -> None:
            state["nodes"] += 1
            if state["nodes"] > budget:
                raise ResourceLimitError("cycle search node budget exhausted")
            best = state["best"]
            # Shortcut dominance applies when cur is not mandatory and the
            # previous junction is fixed: a direct unused corridor from prev
            # no longer than the two-step detour makes the detour pointless.
            # Off the root of a cycle the reversed triangle would prune its
            # own mirror, so skip that one spot.
            dominate = prev >= 0 and not req_bit[cur] and not (cyclic and prev == ai)
            for w, cid, length in nbr[cur]:
                if used_c[cid]:
                    continue
                if dominate and w != prev:
                    key = (prev, w) if prev < w else (w, prev)
                    cap = plen + length
                    for dlength, did in pairc.get(key, ()):
                        if dlength > cap:
                            break
                        if not used_c[did]:
                            cap = -1
                            break
                    if cap < 0:
                        continue
                nd = dlen + length
                if w == bi:
                    if mask:
                        continue
                    if best is None:
                        if nd > state["limit"]:
                            if nd < state["over"]:
                                state["over"] = nd
                        else:
                            best = nd
                            state["best"] = nd
                            state["seq"] = seq + [cid]
                    elif nd < best:
                        best = nd
                        state["best"] = nd
                        state["seq"] = seq + [cid]
                    continue
                if used_j[w]:
                    continue
                nmask = mask & ~req_bit[w]
                lb = bget((w << kbits) | nmask, -1)
                if lb == -1:
                    lb = bound(w, nmask)
                if lb is None:
                    continue
                f = nd + lb
                if best is None:
                    if f > state["limit"]:
                        if f < state["over"]:
                            state["over"] = f
                        continue
                else:
                    if f >= best:
                        continue
                used_j[w] = 1
                used_c[cid] = 1
                seq.append(cid)
                dfs(w, nd, nmask, cur, length)
                seq.pop()
                used_c[cid] = 0
                used_j[w] = 0
                best = state["best"]

        quantum = max(self.quantum, 1)

        def snap(x: int) -> int:
            return -(-x // quantum) * quantum

        limit = snap(max(start_bound, 1))
        rounds = 0
        while True:
            rounds += 1
            state["limit"] = limit
            state["over"] = infinity
            dfs(ai, 0, full_mask, -1, 0)
            if state["best"] is not None:
                break
            if state["over"] > max_total:
                self.counters = {"nodes": state["nodes"], "limits": rounds}
                return None
            limit = snap(state["over"])
        self.counters = {"nodes": state["nodes"], "limits": rounds}

        verts = [a]
        cur = a
        for cid in state["seq"]:
            u, v, _length, interior = corridors[cid]
            if cur == u:
                verts.extend(interior)
                verts.append(v)
                cur = v
            else:
                verts.extend(reversed(interior))
                verts.append(u)
                cur = u
        if len(verts) - 1 != state["best"]:
            raise InternalError("expanded traversal length mismatch")
        return state["best"], tuple(verts)


def solve_via_kcycle(
    inst: Instance,
    backend=None,
    feasible_only: bool = False,
    keep_expansion: bool = False,
) -> SolveResult:
    """Solve an instance through the vertex-disjoint cycle reduction.

    Make s = t, normalize, expand, search a shortest cycle through the
    start hub and all waypoint hubs, and map the cycle back to a route on
    the input instance.  With feasible_only a feasibility-oriented backend
    would suffice, but none is bundled.
    """
    if feasible_only:
        raise BackendUnavailableError(
            "no feasibility-only cycle backend is bundled; use the default"
        )
    if backend is None:
        backend = ExhaustiveKCycleBackend()
    reduced, cycle_step = reduce_to_cycle(inst)
    g = reduced.graph
    plain = all(e.cap == 1 and e.weight == 1 for e in g.edges)
    simple = len({frozenset((e.u, e.v)) for e in g.edges}) == g.m
    if plain and simple:
        # Already in expansion-ready shape; normalizing would only double
        # every distance.  A route edge still maps to path length 5.
        norm, norm_step, per_cost = reduced, None, 5
    else:
        norm, norm_step = normalize_instance(reduced)
        per_cost = 10
    lg = build_waypoint_line_graph(norm.graph, norm.s, norm.t, norm.waypoints)
    required = frozenset({lg.s_hub} | set(lg.waypoint_hubs.values()))
    if hasattr(backend, "quantum"):
        backend.quantum = 5
    found = backend.search(lg.graph, required, lg.s_hub, lg.s_hub)
    trace = TransformTrace()
    trace.add(cycle_step)
    trace.add(norm_step)
    counters = {
        "expansion_vertices": lg.graph.n,
        "expansion_edges": lg.graph.m,
        "trace": trace.summary(),
        **getattr(backend, "counters", {}),
    }
    if keep_expansion:
        counters["expansion"] = lg
    if found is None:
        return SolveResult("infeasible", counters=counters)
    length, verts = found
    route = map_path_to_route(lg, verts, trace)
    cost = route_cost(inst, route)
    shift = 2 if cycle_step is not None else 0
    if length != per_cost * (cost + shift):
        raise InternalError("cycle length disagrees with the mapped route cost")
    counters["cycle_length"] = length
    return SolveResult("feasible", cost, route, counters)
