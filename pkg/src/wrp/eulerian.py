"""Splitting an even-degree graph into few walks across a vertex separator.

Given a connected graph whose vertices all have even degree and a separator
vertex set, the edge set is partitioned into edge-disjoint walks such that

* every walk starts and ends inside the separator,
* every walk stays entirely on one side of the separator,
* each side contributes at most as many walks as the number of separator
  vertices its walks use as endpoints (so at most 2 * |separator| walks
  overall), and
* a recorded concatenation order stitches all walks back into one closed
  walk that uses every edge exactly once.

The construction covers each side with open and closed walks, merges walks
that share an endpoint, absorbs closed walks into walks they touch, and
finally reconnects the remaining chains into a single traversal.
"""

from __future__ import annotations

from dataclasses import dataclass

from wrp.errors import InternalError, ValidationError
from wrp.model import CapacitatedGraph, Route

SIDE_A = "A"
SIDE_B = "B"


@dataclass(frozen=True)
class Separation:
    """Walk cover of a graph split across a separator.

    ``walks_a`` and ``walks_b`` together use every edge id exactly once;
    walks in ``walks_a`` stay inside ``side_a`` and likewise for B.  Each
    walk is stored already oriented as traversed, so following ``order``
    (a sequence of ``("A", i)`` / ``("B", i)`` references) and concatenating
    the referenced walks yields a single closed walk covering the graph.
    """

    separator: frozenset
    side_a: frozenset
    side_b: frozenset
    walks_a: tuple
    walks_b: tuple
    order: tuple

    def walk(self, ref) -> Route:
        side, idx = ref
        return self.walks_a[idx] if side == SIDE_A else self.walks_b[idx]

    def walk_count(self) -> int:
        return len(self.walks_a) + len(self.walks_b)

    def eulerian_route(self) -> Route:
        """The single closed walk obtained by concatenating in order."""
        if not self.order:
            anchor = min(self.separator) if self.separator else 0
            return Route(anchor, ())
        first = self.walk(self.order[0])
        steps = []
        for ref in self.order:
            steps.extend(self.walk(ref).steps)
        return Route(first.start, tuple(steps))


class _Walk:
    """Mutable walk under construction: vertex list plus edge id list."""

    __slots__ = ("uid", "side", "verts", "eids", "alive")

    def __init__(self, uid: int, side: str, verts: list, eids: list):
        if len(verts) != len(eids) + 1 or not eids:
            raise InternalError("walk cover produced a malformed walk")
        self.uid = uid
        self.side = side
        self.verts = verts
        self.eids = eids
        self.alive = True

    @property
    def start(self) -> int:
        return self.verts[0]

    @property
    def end(self) -> int:
        return self.verts[-1]

    @property
    def closed(self) -> bool:
        return self.verts[0] == self.verts[-1]

    def reverse(self) -> None:
        self.verts.reverse()
        self.eids.reverse()

    def rotate_to(self, u: int) -> None:
        """Re-anchor a closed walk so it starts and ends at u."""
        if not self.closed:
            raise InternalError("rotating an open walk")
        i = self.verts.index(u)
        self.verts = self.verts[i:] + self.verts[1 : i + 1]
        self.eids = self.eids[i:] + self.eids[:i]


def _circuit(entries, start):
    """Closed traversal using each entry exactly once (Hierholzer).

    entries: list of (u, v, tag) undirected connections, loops allowed.
    Returns (verts, tags) with len(verts) == len(tags) + 1 and
    verts[0] == verts[-1] == start.
    """
    adj: dict = {}
    for i, (u, v, _tag) in enumerate(entries):
        adj.setdefault(u, []).append(i)
        if v != u:
            adj.setdefault(v, []).append(i)
    ptr = {v: 0 for v in adj}
    used = [False] * len(entries)
    stack_v = [start]
    stack_e: list = []
    out_v: list = []
    out_e: list = []
    while stack_v:
        v = stack_v[-1]
        lst = adj.get(v, ())
        i = ptr.get(v, 0)
        while i < len(lst) and used[lst[i]]:
            i += 1
        ptr[v] = i
        if i < len(lst):
            ei = lst[i]
            used[ei] = True
            a, b, _tag = entries[ei]
            stack_v.append(b if a == v else a)
            stack_e.append(ei)
        else:
            out_v.append(stack_v.pop())
            if stack_e:
                out_e.append(stack_e.pop())
    if not all(used):
        raise InternalError("edge traversal did not cover its component")
    out_v.reverse()
    out_e.reverse()
    return out_v, [entries[i][2] for i in out_e]


def _side_components(g: CapacitatedGraph, eids):
    """Group a side's edge ids into connected components, sorted."""
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for eid in eids:
        e = g.edges[eid]
        for v in (e.u, e.v):
            parent.setdefault(v, v)
        ru, rv = find(e.u), find(e.v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict = {}
    for eid in eids:
        groups.setdefault(find(g.edges[eid].u), []).append(eid)
    return [groups[r] for r in sorted(groups)]


def _cover_side(g: CapacitatedGraph, eids, sep, side, walks, counter):
    """Cover one side's edges with open walks (ends in sep) and closed walks."""
    for comp in _side_components(g, eids):
        degree: dict = {}
        for eid in comp:
            e = g.edges[eid]
            degree[e.u] = degree.get(e.u, 0) + 1
            degree[e.v] = degree.get(e.v, 0) + 1
        odd = sorted(v for v, d in degree.items() if d % 2)
        if any(v not in sep for v in odd):
            raise InternalError("odd vertex outside the separator on one side")
        entries = [(g.edges[eid].u, g.edges[eid].v, eid) for eid in sorted(comp)]
        if not odd:
            anchors = sorted(v for v in degree if v in sep)
            if not anchors:
                raise InternalError("side component without a separator vertex")
            verts, tags = _circuit(entries, anchors[0])
            walks.append(_Walk(counter[0], side, verts, tags))
            counter[0] += 1
            continue
        # Pair up odd vertices with placeholder connections, traverse the
        # augmented component, then cut the traversal at the placeholders.
        for i in range(0, len(odd), 2):
            entries.append((odd[i], odd[i + 1], None))
        verts, tags = _circuit(entries, odd[0])
        gaps = [i for i, t in enumerate(tags) if t is None]
        total = len(tags)
        scan = list(range(gaps[0] + 1, total)) + list(range(gaps[0] + 1))
        arc_v = [verts[gaps[0] + 1]]
        arc_e: list = []
        for i in scan:
            nxt = verts[i + 1]
            if tags[i] is None:
                walks.append(_Walk(counter[0], side, arc_v, arc_e))
                counter[0] += 1
                arc_v = [nxt]
                arc_e = []
            else:
                arc_e.append(tags[i])
                arc_v.append(nxt)
        if arc_e:
            raise InternalError("leftover arc after cutting a traversal")


def _merge_endpoints(walks) -> None:
    """Concatenate walks of one side that share an endpoint vertex."""
    while True:
        by_end: dict = {}
        for w in walks:
            if w.alive:
                for v in {w.start, w.end}:
                    by_end.setdefault(v, []).append(w)
        pick = None
        for v in sorted(by_end):
            if len(by_end[v]) >= 2:
                pick = (v, by_end[v][0], by_end[v][1])
                break
        if pick is None:
            return
        v, w1, w2 = pick
        if w1.end != v:
            w1.reverse()
        if w2.start != v:
            w2.reverse()
        w1.verts.extend(w2.verts[1:])
        w1.eids.extend(w2.eids)
        w2.alive = False


def _absorb_closed(walks) -> None:
    """Splice closed walks of one side into other walks they touch."""
    while True:
        alive = [w for w in walks if w.alive]
        done = True
        for c in alive:
            if not c.closed:
                continue
            best = None
            for w in alive:
                if w.uid == c.uid:
                    continue
                shared = set(c.verts) & set(w.verts)
                if shared:
                    best = (w, min(shared))
                    break
            if best is None:
                continue
            w, u = best
            c.rotate_to(u)
            j = w.verts.index(u)
            w.verts = w.verts[: j + 1] + c.verts[1:] + w.verts[j + 1 :]
            w.eids = w.eids[:j] + c.eids + w.eids[j:]
            c.alive = False
            done = False
            break
        if done:
            return


def _o_start(w: _Walk, fwd: bool) -> int:
    return w.verts[0] if fwd else w.verts[-1]


def _o_end(w: _Walk, fwd: bool) -> int:
    return w.verts[-1] if fwd else w.verts[0]


def _junctions(meta) -> list:
    """Concatenation vertices of a closed chain, one after each element."""
    return [_o_end(w, f) for w, f in meta]


def _initial_chains(walks) -> list:
    """Chain the walks endpoint-to-endpoint into closed sequences.

    Treats each walk as a connection between its endpoint vertices (closed
    walks connect a vertex to itself); every endpoint vertex touches an even
    number of walk ends, so each connected bundle closes into a cycle.
    """
    alive = [w for w in walks if w.alive]
    slots: dict = {}
    for w in alive:
        slots[w.start] = slots.get(w.start, 0) + 1
        slots[w.end] = slots.get(w.end, 0) + 1
    if any(d % 2 for d in slots.values()):
        raise InternalError("walk endpoints do not pair up evenly")
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for w in alive:
        for v in (w.start, w.end):
            parent.setdefault(v, v)
        ra, rb = find(w.start), find(w.end)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for w in alive:
        groups.setdefault(find(w.start), []).append(w)
    chains = []
    for root in sorted(groups):
        bundle = groups[root]
        entries = [(w.start, w.end, w) for w in bundle]
        verts, tags = _circuit(entries, min(v for w in bundle for v in (w.start, w.end)))
        chain = []
        for i, w in enumerate(tags):
            if w.closed:
                fwd = True
            elif w.start == verts[i]:
                fwd = True
            elif w.end == verts[i]:
                fwd = False
            else:
                raise InternalError("chained walk does not touch its junction")
            if _o_end(w, fwd) != verts[i + 1]:
                raise InternalError("chained walk does not reach the next junction")
            chain.append((w, fwd))
        chains.append(chain)
    return chains


def _rotate_end_at(chain, u):
    """Rotate a closed chain so its last element ends at u."""
    juncs = _junctions(chain)
    k = juncs.index(u)
    return chain[k + 1 :] + chain[: k + 1]


def _reverse_chain(chain) -> list:
    return [(w, not f) for w, f in reversed(chain)]


def _oriented(w: _Walk, fwd: bool):
    if fwd:
        return list(w.verts), list(w.eids)
    return list(reversed(w.verts)), list(reversed(w.eids))


def _reconnect_same_side(chains, i, j, wx, fx, wy, fy, u, walks, counter):
    """Exchange the tails of two same-side walks that share vertex u.

    Cuts both walks at u and regroups the four pieces head-to-head and
    tail-to-tail, which splices chain j into chain i without changing any
    walk endpoints.
    """
    xs, xe = _oriented(wx, fx)
    ys, ye = _oriented(wy, fy)
    a = xs.index(u)
    b = ys.index(u)
    p_v = xs[: a + 1] + ys[:b][::-1]
    p_e = xe[:a] + ye[:b][::-1]
    q_v = xs[a:][::-1] + ys[b + 1 :]
    q_e = xe[a:][::-1] + ye[b:]
    if not p_e or not q_e:
        raise InternalError("tail exchange produced an empty walk")
    wp = _Walk(counter[0], wx.side, p_v, p_e)
    counter[0] += 1
    wq = _Walk(counter[0], wx.side, q_v, q_e)
    counter[0] += 1
    walks.extend((wp, wq))
    wx.alive = False
    wy.alive = False
    ci = chains[i]
    cj = chains[j]
    ki = next(k for k, (w, _f) in enumerate(ci) if w.uid == wx.uid)
    kj = next(k for k, (w, _f) in enumerate(cj) if w.uid == wy.uid)
    rest_i = ci[ki + 1 :] + ci[:ki]
    rest_j = cj[kj + 1 :] + cj[:kj]
    merged = [(wp, True)] + _reverse_chain(rest_j) + [(wq, False)] + rest_i
    chains[i] = merged
    del chains[j]


def _cut_in_chain(chains, idx, w, u, walks, counter) -> None:
    """Split walk w of chain idx at interior vertex u, creating a junction."""
    side_ends = {x for o in walks if o.alive and o.side == w.side for x in (o.start, o.end)}
    if u in side_ends:
        raise InternalError("cutting a walk at an already used endpoint vertex")
    i0 = w.verts.index(u)
    if i0 == 0 or i0 == len(w.verts) - 1:
        raise InternalError("cutting a walk at one of its endpoints")
    w1 = _Walk(counter[0], w.side, w.verts[: i0 + 1], w.eids[:i0])
    counter[0] += 1
    w2 = _Walk(counter[0], w.side, w.verts[i0:], w.eids[i0:])
    counter[0] += 1
    walks.extend((w1, w2))
    w.alive = False
    chain = chains[idx]
    k = next(kk for kk, (x, _f) in enumerate(chain) if x.uid == w.uid)
    fwd = chain[k][1]
    repl = [(w1, True), (w2, True)] if fwd else [(w2, False), (w1, False)]
    chains[idx] = chain[:k] + repl + chain[k + 1 :]


def _stitch(chains, walks, sep, counter) -> list:
    """Merge closed chains until a single traversal of the graph remains."""
    while len(chains) > 1:
        merged = False
        # First choice: two chains meeting at a shared junction vertex.
        juncs = [set(_junctions(c)) for c in chains]
        for i in range(len(chains)):
            for j in range(i + 1, len(chains)):
                shared = juncs[i] & juncs[j]
                if shared:
                    u = min(shared)
                    chains[i] = _rotate_end_at(chains[i], u) + _rotate_end_at(chains[j], u)
                    del chains[j]
                    merged = True
                    break
            if merged:
                break
        if merged:
            continue
        # Second choice: same-side walks in different chains sharing a
        # vertex; exchange their tails, keeping all endpoints unchanged.
        vsets = {w.uid: set(w.verts) for c in chains for w, _f in c}
        for i in range(len(chains)):
            if merged:
                break
            for j in range(i + 1, len(chains)):
                if merged:
                    break
                for wx, fx in chains[i]:
                    if merged:
                        break
                    for wy, fy in chains[j]:
                        if wx.side != wy.side:
                            continue
                        shared = vsets[wx.uid] & vsets[wy.uid]
                        if shared:
                            u = min(shared)
                            _reconnect_same_side(
                                chains, i, j, wx, fx, wy, fy, u, walks, counter
                            )
                            merged = True
                            break
        if merged:
            continue
        # Last resort: chains touching only through vertices interior to
        # walks on opposite sides.  Cut both walks there; the vertex then
        # becomes a junction of both chains and the first rule applies.
        for i in range(len(chains)):
            if merged:
                break
            for j in range(i + 1, len(chains)):
                pair = None
                for wx, _fx in chains[i]:
                    for wy, _fy in chains[j]:
                        shared = vsets[wx.uid] & vsets[wy.uid]
                        if shared:
                            pair = (wx, wy, min(shared))
                            break
                    if pair:
                        break
                if pair is None:
                    continue
                wx, wy, u = pair
                if wx.side == wy.side or u not in sep:
                    raise InternalError("unexpected chain contact during stitching")
                if u not in set(_junctions(chains[i])):
                    _cut_in_chain(chains, i, wx, u, walks, counter)
                if u not in set(_junctions(chains[j])):
                    _cut_in_chain(chains, j, wy, u, walks, counter)
                merged = True
                break
        if not merged:
            raise InternalError("disjoint chains cannot cover a connected graph")
    return chains


def eulerian_separate(g: CapacitatedGraph, separator) -> Separation:
    """Partition all edges into few walks split across a separator.

    The graph must be connected with every vertex of even degree, and the
    separator must be a non-empty subset of the vertices whenever the graph
    has edges.  Sides are derived here: connected parts of the graph minus
    the separator are assigned alternately to side A and side B (ordered by
    smallest vertex), and edges running inside the separator count as side A.

    Returns a Separation; see its docstring for the guarantees.  Raises
    ValidationError when a precondition fails.
    """
    sep = frozenset(separator)
    for v in sorted(sep):
        if not isinstance(v, int) or not 0 <= v < g.n:
            raise ValidationError(f"separator vertex {v!r} is not in the graph")
    odd = sorted(v for v in range(g.n) if g.degree(v) % 2)
    if odd:
        raise ValidationError(f"vertex {odd[0]} has odd degree {g.degree(odd[0])}")
    seen = [False] * g.n
    seen[0] = True
    stack = [0]
    reached = 1
    while stack:
        v = stack.pop()
        for eid in g.incident(v):
            w = g.edges[eid].other(v)
            if not seen[w]:
                seen[w] = True
                reached += 1
                stack.append(w)
    if reached != g.n:
        raise ValidationError("graph is not connected")
    if g.m > 0 and not sep:
        raise ValidationError("separator must contain at least one vertex")

    # Assign the components outside the separator to the two sides.
    comp_side: dict = {}
    side_verts = {SIDE_A: set(sep), SIDE_B: set(sep)}
    toggle = 0
    marked = [v in sep for v in range(g.n)]
    for seed in range(g.n):
        if marked[seed]:
            continue
        side = SIDE_A if toggle % 2 == 0 else SIDE_B
        toggle += 1
        comp = [seed]
        marked[seed] = True
        while comp:
            v = comp.pop()
            comp_side[v] = side
            side_verts[side].add(v)
            for eid in g.incident(v):
                w = g.edges[eid].other(v)
                if not marked[w]:
                    marked[w] = True
                    comp.append(w)
    side_eids = {SIDE_A: [], SIDE_B: []}
    for e in g.edges:
        if e.u in sep and e.v in sep:
            side_eids[SIDE_A].append(e.id)
        else:
            outside = e.u if e.u not in sep else e.v
            side_eids[comp_side[outside]].append(e.id)

    walks: list = []
    counter = [0]
    for side in (SIDE_A, SIDE_B):
        first = len(walks)
        _cover_side(g, side_eids[side], sep, side, walks, counter)
        side_walks = walks[first:]
        _merge_endpoints(side_walks)
        _absorb_closed(side_walks)

    chains = _initial_chains(walks)
    chains = _stitch(chains, walks, sep, counter)

    if not chains:
        anchor = frozenset(sep)
        return Separation(anchor, frozenset(side_verts[SIDE_A]),
                          frozenset(side_verts[SIDE_B]), (), (), ())
    final = chains[0]
    # Deterministic starting point for the traversal.
    best = min(
        range(len(final)),
        key=lambda k: (_o_start(final[k][0], final[k][1]), final[k][0].uid),
    )
    final = final[best:] + final[:best]

    for w, fwd in final:
        if not fwd:
            w.reverse()
    by_side = {SIDE_A: [], SIDE_B: []}
    for w, _fwd in final:
        by_side[w.side].append(w)
    for side in (SIDE_A, SIDE_B):
        by_side[side].sort(key=lambda w: w.uid)
    index = {w.uid: (w.side, i) for side in (SIDE_A, SIDE_B) for i, w in enumerate(by_side[side])}
    order = tuple(index[w.uid] for w, _fwd in final)

    def to_route(w: _Walk) -> Route:
        steps = []
        for pos, eid in enumerate(w.eids):
            steps.append((eid, g.edges[eid].u == w.verts[pos]))
        return Route(w.verts[0], tuple(steps))

    result = Separation(
        frozenset(sep),
        frozenset(side_verts[SIDE_A]),
        frozenset(side_verts[SIDE_B]),
        tuple(to_route(w) for w in by_side[SIDE_A]),
        tuple(to_route(w) for w in by_side[SIDE_B]),
        order,
    )
    _check_result(g, sep, result)
    return result


def _check_result(g: CapacitatedGraph, sep, res: Separation) -> None:
    """Internal postcondition checks; failures indicate bugs."""
    if res.walk_count() > 2 * len(sep):
        raise InternalError("more walks than twice the separator size")
    used: list = []
    for side, group in ((SIDE_A, res.walks_a), (SIDE_B, res.walks_b)):
        ends = set()
        for w in group:
            path = w.vertex_path(g)
            if path[0] not in sep or path[-1] not in sep:
                raise InternalError("walk endpoint outside the separator")
            allowed = res.side_a if side == SIDE_A else res.side_b
            if any(v not in allowed for v in path):
                raise InternalError("walk leaves its side")
            ends.update((path[0], path[-1]))
            used.extend(eid for eid, _fwd in w.steps)
        if len(group) > len(ends):
            raise InternalError("side uses more walks than endpoint vertices")
    if sorted(used) != list(range(g.m)):
        raise InternalError("walks do not partition the edge set")
    cur = None
    for ref in res.order:
        path = res.walk(ref).vertex_path(g)
        if cur is not None and path[0] != cur:
            raise InternalError("concatenation order is discontinuous")
        cur = path[-1]
    if res.order:
        first = res.walk(res.order[0]).vertex_path(g)[0]
        if cur != first:
            raise InternalError("concatenated traversal does not close")
    if len(res.order) != res.walk_count():
        raise InternalError("order does not reference every walk exactly once")
