"""Shared test infrastructure: random instance generators and checkers
written independently of the library code they validate."""

from __future__ import annotations

import random
from itertools import combinations, product

from wrp.model import CapacitatedGraph, Edge, Instance, Route


# ---------------------------------------------------------------------------
# random instance generation (the acceptance recipe: small connected graphs,
# caps in {1,2}, weights in [1,4], up to a few waypoints)


def rand_instance(
    rng: random.Random,
    n_max: int = 8,
    m_max: int = 12,
    k_max: int = 3,
    caps=(1, 2),
    w_max: int = 4,
) -> Instance:
    n = rng.randint(2, n_max)
    pairs = []
    for v in range(1, n):
        pairs.append((rng.randrange(v), v))
    extra = rng.randint(0, max(0, m_max - len(pairs)))
    candidates = [
        (u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in pairs
    ]
    rng.shuffle(candidates)
    pairs.extend(candidates[:extra])
    rng.shuffle(pairs)
    edges = [
        Edge(i, u, v, rng.choice(caps), rng.randint(1, w_max))
        for i, (u, v) in enumerate(pairs)
    ]
    g = CapacitatedGraph(n, edges)
    s = rng.randrange(n)
    t = rng.randrange(n)
    k = rng.randint(0, k_max)
    waypoints = frozenset(rng.sample(range(n), min(k, n)))
    return Instance(g, s, t, waypoints)


def random_even_graph(rng: random.Random, n_max: int = 9, length_max: int = 16):
    """Connected graph with all degrees even, built as a random closed walk."""
    n = rng.randint(1, n_max)
    length = rng.randint(0, length_max)
    verts = [rng.randrange(n)]
    for _ in range(length):
        prev = verts[-1]
        if n == 1:
            break
        nxt = rng.randrange(n)
        while nxt == prev:
            nxt = rng.randrange(n)
        verts.append(nxt)
    if len(verts) > 1 and verts[-1] == verts[0]:
        verts.pop()
    if len(verts) == 1:
        return CapacitatedGraph(1, [])
    touched = sorted(set(verts))
    relabel = {v: i for i, v in enumerate(touched)}
    walk = [relabel[v] for v in verts]
    edges = []
    for i, u in enumerate(walk):
        v = walk[(i + 1) % len(walk)]
        edges.append(Edge(len(edges), u, v, 1, 1))
    return CapacitatedGraph(len(touched), edges)


# ---------------------------------------------------------------------------
# independent route checker (deliberately not using wrp.model.validate_route)


def route_is_valid(inst: Instance, route: Route) -> bool:
    g = inst.graph
    if route.start != inst.s:
        return False
    used: dict[int, int] = {}
    cur = route.start
    visited = {cur}
    for eid, fwd in route.steps:
        if not 0 <= eid < g.m:
            return False
        e = g.edges[eid]
        src, dst = (e.u, e.v) if fwd else (e.v, e.u)
        if src != cur:
            return False
        used[eid] = used.get(eid, 0) + 1
        if used[eid] > e.cap:
            return False
        cur = dst
        visited.add(cur)
    if cur != inst.t:
        return False
    return all(w in visited for w in inst.waypoints)


def route_weight(inst: Instance, route: Route) -> int:
    return sum(inst.graph.edges[eid].weight for eid, _ in route.steps)


# ---------------------------------------------------------------------------
# exhaustive walk search: an independent (slow) solver for tiny instances


def naive_min_walk(inst: Instance) -> int | None:
    """Minimum route weight by plain DFS over capacity-bounded walks.

    Any optimal walk traverses each edge at most cap times, so the search
    depth is bounded by the total slot count.  Exponential; keep n tiny.
    """
    g = inst.graph
    caps = [min(e.cap, 2) for e in g.edges]
    best: list[int | None] = [None]
    wp = inst.waypoints

    def dfs(v: int, seen: frozenset, cost: int):
        if best[0] is not None and cost >= best[0]:
            return
        if v == inst.t and wp <= seen:
            best[0] = cost
        for eid in g.incident(v):
            if caps[eid] == 0:
                continue
            e = g.edges[eid]
            caps[eid] -= 1
            w = e.other(v)
            dfs(w, seen | {w}, cost + e.weight)
            caps[eid] += 1

    dfs(inst.s, frozenset({inst.s}), 0)
    return best[0]


# ---------------------------------------------------------------------------
# independent checker for the walk separation guarantees


def check_separation(g: CapacitatedGraph, separator, sep) -> list[str]:
    """Verify a Separation against the four contract conditions.

    1. every walk starts and ends in the separator,
    2. every walk stays on its own side (interior never crosses over),
    3. each side uses at most one walk per (endpoint pair slot): at most
       2|separator| walks in total, at most beta_X per side where beta_X
       counts the distinct separator vertices used as endpoints on side X,
    4. the recorded order concatenates the walks into one closed walk that
       uses every edge exactly once.
    Returns a list of human-readable failures (empty = all good).
    """
    bad: list[str] = []
    separator = frozenset(separator)
    if sep.separator != separator:
        bad.append("separator mismatch")

    def walk_ok(route: Route, side: frozenset, tag: str):
        verts = [route.start]
        cur = route.start
        for eid, fwd in route.steps:
            e = g.edges[eid]
            src, dst = (e.u, e.v) if fwd else (e.v, e.u)
            if src != cur:
                bad.append(f"{tag}: discontinuous")
                return
            cur = dst
            verts.append(cur)
        if verts[0] not in separator or verts[-1] not in separator:
            bad.append(f"{tag}: endpoint outside the separator")
        for v in verts:
            if v not in separator and v not in side:
                bad.append(f"{tag}: vertex {v} off-side")
        for eid, _ in route.steps:
            e = g.edges[eid]
            for x in (e.u, e.v):
                if x not in separator and x not in side:
                    bad.append(f"{tag}: edge {eid} off-side")

    for i, w in enumerate(sep.walks_a):
        walk_ok(w, sep.side_a, f"walk A{i}")
    for i, w in enumerate(sep.walks_b):
        walk_ok(w, sep.side_b, f"walk B{i}")

    for name, walks in (("A", sep.walks_a), ("B", sep.walks_b)):
        ends = set()
        for w in walks:
            verts = [w.start]
            cur = w.start
            for eid, fwd in w.steps:
                e = g.edges[eid]
                cur = e.v if fwd else e.u
                verts.append(cur)
            ends.add(verts[0])
            ends.add(verts[-1])
        beta = len(ends & separator)
        if len(walks) > max(beta, 0):
            bad.append(f"side {name}: {len(walks)} walks exceed beta {beta}")
    if sep.walk_count() > 2 * len(separator) and g.m > 0:
        bad.append("more than 2|separator| walks")

    # condition 4: concatenation covers every edge once as one closed walk
    seen_edges: list[int] = []
    cur = None
    start = None
    for ref in sep.order:
        w = sep.walk(ref)
        if cur is None:
            start = w.start
            cur = w.start
        if w.start != cur:
            bad.append("concatenation: walk does not start where the last ended")
            break
        for eid, fwd in w.steps:
            e = g.edges[eid]
            src, dst = (e.u, e.v) if fwd else (e.v, e.u)
            if src != cur:
                bad.append("concatenation: discontinuous inside a walk")
                return bad
            seen_edges.append(eid)
            cur = dst
    if g.m:
        if sorted(seen_edges) != list(range(g.m)):
            bad.append("concatenation: edge multiset is not exactly E")
        if cur != start:
            bad.append("concatenation: walk is not closed")
    return bad


# ---------------------------------------------------------------------------
# DP signature revalidation (the "valid sub-solution" conditions)


class SubtreeView:
    """Vertex/edge scope of every nice-decomposition subtree."""

    def __init__(self, g: CapacitatedGraph, ntd):
        self.g = g
        self.vsets: dict[int, frozenset] = {}
        self.emasks: dict[int, int] = {}
        bag_pairs = {}
        for nid in ntd.topo_order():
            node = ntd.nodes[nid]
            vs = set(node.bag)
            for c in node.children:
                vs |= self.vsets[c]
            self.vsets[nid] = frozenset(vs)
            em = 0
            for e in g.edges:
                if e.u in vs and e.v in vs:
                    em |= 1 << e.id
            self.emasks[nid] = em
            bag_pairs[nid] = node.bag
        self.bags = bag_pairs

    def bag_edge_mask(self, nid: int) -> int:
        bag = self.bags[nid]
        m = 0
        for e in self.g.edges:
            if e.u in bag and e.v in bag:
                m |= 1 << e.id
        return m


def _components(g: CapacitatedGraph, mask: int):
    """Connected components of the sub-multigraph 'mask'; list of
    (vertex set, edge id list)."""
    eids = []
    m = mask
    while m:
        low = m & -m
        eids.append(low.bit_length() - 1)
        m ^= low
    adj: dict[int, list[int]] = {}
    for eid in eids:
        e = g.edges[eid]
        adj.setdefault(e.u, []).append(eid)
        adj.setdefault(e.v, []).append(eid)
    seen_v: set[int] = set()
    seen_e: set[int] = set()
    comps = []
    for v0 in sorted(adj):
        if v0 in seen_v:
            continue
        stack = [v0]
        cv = set()
        ce = []
        seen_v.add(v0)
        while stack:
            v = stack.pop()
            cv.add(v)
            for eid in adj.get(v, ()):
                if eid in seen_e:
                    continue
                seen_e.add(eid)
                ce.append(eid)
                w = g.edges[eid].other(v)
                if w not in seen_v:
                    seen_v.add(w)
                    stack.append(w)
        comps.append((frozenset(cv), ce))
    return comps


def walks_realizable(g: CapacitatedGraph, mask: int, pairs) -> bool:
    """Can 'mask' be partitioned into edge-disjoint walks whose endpoint
    pairs are exactly 'pairs' (zero-length walks allowed for (v,v))?"""
    comps = _components(g, mask)
    open_pairs = [p for p in pairs if p[0] != p[1]]
    closed = [p for p in pairs if p[0] == p[1]]

    def feasible(assign):
        # assign: index into comps for each open pair
        odd_add: list[dict[int, int]] = [dict() for _ in comps]
        for (a, b), ci in zip(open_pairs, assign):
            cv = comps[ci][0]
            if a not in cv or b not in cv:
                return False
            odd_add[ci][a] = odd_add[ci].get(a, 0) ^ 1
            odd_add[ci][b] = odd_add[ci].get(b, 0) ^ 1
        for ci, (cv, ce) in enumerate(comps):
            deg: dict[int, int] = {}
            for eid in ce:
                e = g.edges[eid]
                deg[e.u] = deg.get(e.u, 0) ^ 1
                deg[e.v] = deg.get(e.v, 0) ^ 1
            for v in cv:
                if deg.get(v, 0) ^ odd_add[ci].get(v, 0):
                    return False
            if not any(ci == x for x in assign):
                # needs at least one anchor: a closed pair inside the part
                if not any(v in cv for v, _ in closed):
                    return False
        return True

    if not comps:
        return all(a == b for a, b in pairs)
    if len(open_pairs) == 0:
        return feasible(())
    return any(
        feasible(assign)
        for assign in product(range(len(comps)), repeat=len(open_pairs))
    )


def entry_violations(
    g: CapacitatedGraph,
    waypoints: frozenset,
    bag: frozenset,
    subtree_verts: frozenset,
    subtree_emask: int,
    bag_emask: int,
    key,
    entry,
) -> list[str]:
    """Check one stored table entry against the sub-solution conditions:
    edge-disjoint walks realizing the endpoint pairs, bag edges used exactly
    as declared, scope restricted to the subtree, subtree waypoints covered,
    and (for the collapsed empty signature) a single even closed component
    that avoids the bag."""
    pairs, emask = key
    bad = []
    canon = tuple(sorted((a, b) if a <= b else (b, a) for a, b in pairs))
    if pairs != canon:
        bad.append("pairs not canonical")
    endpoints = {x for p in pairs for x in p}
    if not endpoints <= set(bag):
        bad.append("endpoint outside the bag")
    distinct = len(endpoints)
    if pairs and (len(pairs) > len(bag) or distinct < len(pairs)):
        bad.append("pair shape bound violated")
    if emask & ~bag_emask:
        bad.append("declared bag edges outside the bag")
    if entry.mask & bag_emask != emask:
        bad.append("bag edges used differ from the declared subset")
    if entry.mask & ~subtree_emask:
        bad.append("edge outside the subtree scope")
    want = sum(g.edges[eid].weight for eid in _mask_ids(entry.mask))
    if entry.weight != want:
        bad.append(f"weight {entry.weight} != edge total {want}")

    touched = set()
    for eid in _mask_ids(entry.mask):
        e = g.edges[eid]
        touched.add(e.u)
        touched.add(e.v)
    for w in waypoints & subtree_verts:
        if w not in touched and w not in endpoints:
            bad.append(f"waypoint {w} uncovered")

    if entry.kind == "confined":
        if pairs or emask:
            bad.append("confined entry with a non-empty signature")
        comps = _components(g, entry.mask)
        if len(comps) != 1:
            bad.append("confined entry is not a single component")
        else:
            cv, ce = comps[0]
            deg: dict[int, int] = {}
            for eid in ce:
                e = g.edges[eid]
                deg[e.u] = deg.get(e.u, 0) + 1
                deg[e.v] = deg.get(e.v, 0) + 1
            if any(d % 2 for d in deg.values()):
                bad.append("confined component has odd degrees")
            if cv & set(bag):
                bad.append("confined component touches the bag")
    else:
        if not walks_realizable(g, entry.mask, pairs):
            bad.append("edge set does not split into walks matching the pairs")
    return bad


def _mask_ids(mask: int):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def min_weight_by_exhaustion(
    g: CapacitatedGraph,
    waypoints: frozenset,
    bag: frozenset,
    subtree_verts: frozenset,
    subtree_emask: int,
    bag_emask: int,
    key,
) -> int | None:
    """Minimum sub-solution weight for one signature, by trying every edge
    subset of the subtree.  Only sane for small subtrees."""
    pairs, emask = key
    eids = _mask_ids(subtree_emask)
    free = [eid for eid in eids if not (1 << eid) & bag_emask]
    best = None
    endpoints = {x for p in pairs for x in p}
    for r in range(len(free) + 1):
        for combo in combinations(free, r):
            mask = emask
            for eid in combo:
                mask |= 1 << eid
            touched = set()
            for eid in _mask_ids(mask):
                e = g.edges[eid]
                touched.add(e.u)
                touched.add(e.v)
            if any(
                w not in touched and w not in endpoints
                for w in waypoints & subtree_verts
            ):
                continue
            if key == ((), 0) and mask:
                # collapsed empty signature: single even component off the bag
                comps = _components(g, mask)
                if len(comps) != 1:
                    continue
                cv, ce = comps[0]
                deg: dict[int, int] = {}
                for eid in ce:
                    e = g.edges[eid]
                    deg[e.u] = deg.get(e.u, 0) + 1
                    deg[e.v] = deg.get(e.v, 0) + 1
                if any(d % 2 for d in deg.values()) or cv & set(bag):
                    continue
            elif not walks_realizable(g, mask, pairs):
                continue
            w = sum(g.edges[eid].weight for eid in _mask_ids(mask))
            if best is None or w < best:
                best = w
    return best


def two_coloring(g: CapacitatedGraph) -> list[int] | None:
    color = [-1] * g.n
    color[0] = 0
    stack = [0]
    while stack:
        v = stack.pop()
        for eid in g.incident(v):
            w = g.edges[eid].other(v)
            if color[w] == -1:
                color[w] = color[v] ^ 1
                stack.append(w)
            elif color[w] == color[v]:
                return None
    return color


def remap_mask_into_subtree(g: CapacitatedGraph, mask: int, subtree_emask: int) -> int:
    """Rewrite a table mask to use parallel unified copies inside the subtree.

    Unified graphs carry cap identical 2-edge copies per original edge; the
    solver treats whole copies as interchangeable and may store a canonical
    representative whose copies live under a sibling subtree.  Swap such
    whole copies for in-subtree ones (same endpoints, same weight) so the
    entry can be re-validated against the subtree scope.  Masks with partial
    copies or without enough in-subtree copies are returned unchanged."""
    if mask & ~subtree_emask == 0 or g.m % 2:
        return mask
    grouped: dict = {}
    for i in range(0, g.m, 2):
        h1, h2 = g.edges[i], g.edges[i + 1]
        shared = {h1.u, h1.v} & {h2.u, h2.v}
        if len(shared) != 1:
            return mask
        x = shared.pop()
        u = h1.u + h1.v - x
        v = h2.u + h2.v - x
        key = ((u, v) if u <= v else (v, u), h1.weight)
        grouped.setdefault(key, []).append(3 << i)
    out = mask
    for copies in grouped.values():
        ga = 0
        for cm in copies:
            ga |= cm
        used = out & ga
        if not used or used & ~subtree_emask == 0:
            continue
        whole = [cm for cm in copies if used & cm == cm]
        if any(used & cm and used & cm != cm for cm in copies):
            return mask
        inside = [cm for cm in copies if cm & ~subtree_emask == 0]
        if len(inside) < len(whole):
            return mask
        repl = 0
        for cm in inside[: len(whole)]:
            repl |= cm
        out = (out & ~ga) | repl
    return out
