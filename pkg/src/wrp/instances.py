"""Canonical instances, random generators, and hardness-style constructions.

All generators take an explicit seed and are bit-deterministic: the same
arguments always produce the same instance file.
"""

from __future__ import annotations

import random
from collections import deque

from wrp.errors import ValidationError
from wrp.model import CapacitatedGraph, Edge, Instance


def canonical(name: str) -> Instance:
    """The two hand-checked golden instances.

    fig1-left: two parallel 4-vertex rows between s and t with two rungs,
    one waypoint per row, all unit weights, a single capacity-2 edge in the
    top row; optimum 7.  fig1-right: three 2-paths s-w-t, each middle vertex
    a waypoint, all unit; optimum 6.
    """
    if name == "fig1-left":
        # 0=s, 1..3 top row, 4=t, 5..7 bottom row; waypoints 2 and 6.
        edges = [
            (0, 1),  # s  - v11
            (1, 2),  # v11- v12 (waypoint)
            (2, 3),  # v12- v13   capacity 2
            (3, 4),  # v13- t
            (0, 5),  # s  - v21
            (5, 6),  # v21- v22 (waypoint)
            (6, 7),  # v22- v23
            (7, 4),  # v23- t
            (1, 5),  # rung v11-v21
            (3, 7),  # rung v13-v23
        ]
        recs = []
        for i, (u, v) in enumerate(edges):
            cap = 2 if (u, v) == (2, 3) else 1
            recs.append(Edge(i, u, v, cap, 1))
        return Instance(CapacitatedGraph(8, recs), 0, 4, frozenset({2, 6}))
    if name == "fig1-right":
        # 0=s, 4=t, middles 1,2,3 all waypoints.
        edges = [(0, 1), (1, 4), (0, 2), (2, 4), (0, 3), (3, 4)]
        recs = [Edge(i, u, v, 1, 1) for i, (u, v) in enumerate(edges)]
        return Instance(CapacitatedGraph(5, recs), 0, 4, frozenset({1, 2, 3}))
    raise ValidationError(f"unknown canonical instance {name!r}")


def cycle_graph(n: int) -> CapacitatedGraph:
    """Unit-capacity unit-weight cycle C_n."""
    if n < 3:
        raise ValidationError("cycle needs n >= 3")
    recs = [Edge(i, i, (i + 1) % n, 1, 1) for i in range(n)]
    return CapacitatedGraph(n, recs)


def ham_encode(g: CapacitatedGraph, anchor: int | None = None) -> Instance:
    """Encode Hamiltonian-cycle search as a routing instance.

    All capacities forced to 1, s = t = anchor (lowest id by default),
    waypoints = every other vertex.  On graphs of maximum degree 3 a
    feasible route exists iff the graph has a Hamiltonian cycle: a closed
    walk that revisits a vertex needs four edge slots there.
    """
    if any(g.degree(v) > 3 for v in range(g.n)):
        raise ValidationError("ham-encode requires maximum degree 3")
    if anchor is None:
        anchor = 0
    if not (0 <= anchor < g.n):
        raise ValidationError("anchor out of range")
    recs = [Edge(e.id, e.u, e.v, 1, e.weight) for e in g.edges]
    g1 = CapacitatedGraph(g.n, recs)
    waypoints = frozenset(range(g.n)) - {anchor}
    return Instance(g1, anchor, anchor, waypoints)


def _connected(n: int, pairs) -> bool:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    cnt = 1
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if not seen[y]:
                seen[y] = True
                cnt += 1
                queue.append(y)
    return cnt == n


def gen_partial_ktree(n: int, k: int, edge_keep_prob: float, seed: int) -> Instance:
    """Random connected subgraph of a random k-tree (treewidth <= k).

    Capacities in {1,2}, weights in [1,4], random terminals, up to 4
    waypoints.  Edges are dropped with probability 1 - edge_keep_prob but
    only while the graph stays connected.
    """
    if k > 4:
        raise ValidationError("k must be <= 4")
    if n < k + 1:
        raise ValidationError("need n >= k+1")
    rng = random.Random(seed)
    pairs: list[tuple[int, int]] = []
    base = list(range(k + 1))
    for i in base:
        for j in base[i + 1 :]:
            pairs.append((i, j))
    cliques = [tuple(c for c in base if c != drop) for drop in base]
    for v in range(k + 1, n):
        att = list(rng.choice(cliques))
        for u in att:
            pairs.append((u, v))
        for u in att:
            cliques.append(tuple(sorted([x for x in att if x != u] + [v])))
    order = list(range(len(pairs)))
    rng.shuffle(order)
    alive = set(order)
    for idx in order:
        if rng.random() >= edge_keep_prob:
            trial = [pairs[i] for i in sorted(alive - {idx})]
            if _connected(n, trial):
                alive.remove(idx)
    recs = []
    for i in sorted(alive):
        u, v = pairs[i]
        recs.append(Edge(len(recs), u, v, rng.choice((1, 2)), rng.randint(1, 4)))
    g = CapacitatedGraph(n, recs)
    s = rng.randrange(n)
    t = rng.randrange(n)
    wp_count = rng.randint(0, 4)
    waypoints = frozenset(rng.sample(range(n), min(wp_count, n)))
    return Instance(g, s, t, waypoints)


def grid_base(cols: int, seed: int) -> Instance:
    """2 x cols grid with unit caps/weights, coordinates, max degree 3."""
    if cols < 2:
        raise ValidationError("grid needs cols >= 2")
    rng = random.Random(seed)
    n = 2 * cols

    def vid(x, y):
        return 2 * x + y

    recs = []
    for x in range(cols):
        recs.append(Edge(len(recs), vid(x, 0), vid(x, 1), 1, 1))
        if x + 1 < cols:
            recs.append(Edge(len(recs), vid(x, 0), vid(x + 1, 0), 1, 1))
            recs.append(Edge(len(recs), vid(x, 1), vid(x + 1, 1), 1, 1))
    g = CapacitatedGraph(n, recs)
    coords = {vid(x, y): (x, y) for x in range(cols) for y in (0, 1)}
    s = rng.randrange(n)
    t = rng.randrange(n)
    waypoints = frozenset(rng.sample(range(n), rng.randint(0, 3)))
    return Instance(g, s, t, waypoints, coords)


def gen_grid_tail(base: Instance, r: int) -> Instance:
    """Append a waypoint-free unit path of length n^r at the leftmost-bottom
    vertex of a grid instance.  The tail is a dead end, so the set of
    optimal routes is unchanged; it only dilutes waypoint density.
    """
    g = base.graph
    if base.coords is None or len(base.coords) != g.n:
        raise ValidationError("grid tail needs full coordinates")
    if any(g.degree(v) > 3 for v in range(g.n)):
        raise ValidationError("base must have maximum degree 3")
    if r < 1:
        raise ValidationError("r must be >= 1")
    ext = min(range(g.n), key=lambda v: base.coords[v])
    if g.degree(ext) > 2:
        raise ValidationError("extremal vertex already has degree 3")
    length = g.n**r
    recs = list(g.edges)
    coords = dict(base.coords)
    x0, y0 = coords[ext]
    prev = ext
    for i in range(length):
        nv = g.n + i
        recs.append(Edge(len(recs), prev, nv, 1, 1))
        coords[nv] = (x0 - 1 - i, y0)
        prev = nv
    g2 = CapacitatedGraph(g.n + length, recs)
    return Instance(g2, base.s, base.t, base.waypoints, coords)


def _two_color(g: CapacitatedGraph) -> list[int] | None:
    color = [-1] * g.n
    color[0] = 0
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for eid in g.incident(v):
            w = g.edges[eid].other(v)
            if color[w] == -1:
                color[w] = 1 - color[v]
                queue.append(w)
            elif color[w] == color[v]:
                return None
    return color


def gen_bipartite_trees_gadget(base: Instance, edge_id: int, r: int) -> Instance:
    """Replace one unit edge (u,w) by the u-v-v'-w path and hang the full
    binary-tree/cycle/matching gadget off v and v'.

    Trees have 2^(r-1) leaves each; consecutive leaves are linked through
    fresh middle vertices, the two leaf rows are closed into one cycle, and
    middle vertices are matched outermost-in across the rows.  Output stays
    bipartite; every gadget vertex has degree 3 for r >= 2 (r = 1 degenerates
    to a parallel pair between the two tree roots).  Terminals and waypoints
    are untouched, so feasibility is a pure detour question.
    """
    g = base.graph
    if r < 1:
        raise ValidationError("r must be >= 1")
    if not (0 <= edge_id < g.m):
        raise ValidationError("edge id out of range")
    if any(g.degree(v) > 3 for v in range(g.n)):
        raise ValidationError("base must have maximum degree 3")
    if _two_color(g) is None:
        raise ValidationError("base must be bipartite")
    e = g.edges[edge_id]
    if e.cap != 1 or e.weight != 1:
        raise ValidationError("replaced edge must be unit capacity and weight")
    u, w = e.u, e.v

    counter = [g.n]

    def fresh():
        counter[0] += 1
        return counter[0] - 1

    pairs: list[tuple[int, int]] = [(x.u, x.v) for x in g.edges if x.id != edge_id]
    v = fresh()
    vp = fresh()
    pairs += [(u, v), (v, vp), (vp, w)]

    def build_tree(root_parent: int) -> list[int]:
        # full binary tree of depth r-1; returns leaves left to right
        root = fresh()
        pairs.append((root_parent, root))
        level = [root]
        for _ in range(r - 1):
            nxt = []
            for node in level:
                a, b = fresh(), fresh()
                pairs.append((node, a))
                pairs.append((node, b))
                nxt += [a, b]
            level = nxt
        return level

    leaves = build_tree(v)
    leaves2 = build_tree(vp)
    mids = []
    for i in range(len(leaves) - 1):
        m = fresh()
        pairs.append((leaves[i], m))
        pairs.append((m, leaves[i + 1]))
        mids.append(m)
    mids2 = []
    for i in range(len(leaves2) - 1):
        m = fresh()
        pairs.append((leaves2[i], m))
        pairs.append((m, leaves2[i + 1]))
        mids2.append(m)
    # close the two leaf rows into a single cycle
    pairs.append((leaves[-1], leaves2[0]))
    pairs.append((leaves2[-1], leaves[0]))
    # crossing matchings, outermost pair first
    for i in range(len(mids)):
        pairs.append((mids[i], mids2[len(mids2) - 1 - i]))

    keep = [x for x in g.edges if x.id != edge_id]
    recs = []
    for x in keep:
        recs.append(Edge(len(recs), x.u, x.v, x.cap, x.weight))
    for a, b in pairs[len(keep) :]:
        recs.append(Edge(len(recs), a, b, 1, 1))
    g2 = CapacitatedGraph(counter[0], recs)
    if _two_color(g2) is None:
        raise ValidationError("gadget output unexpectedly not bipartite")
    return Instance(g2, base.s, base.t, base.waypoints, None)
