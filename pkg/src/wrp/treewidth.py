"""Tree decompositions: construction, validation, nice normal form.

decompose() works over elimination orders: exact mode is a memoized
branch-and-bound search seeded by the min-fill upper bound, with safe
degree <= 2 preprocessing (a degree-2 vertex is eliminated only when the
graph has a cycle, so the max(2, .) lower bound keeps it exact).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from wrp.errors import ResourceLimitError, ValidationError
from wrp.model import CapacitatedGraph, Violation

DEFAULT_NODE_BUDGET = 2_000_000


@dataclass
class TreeDecomposition:
    bags: dict
    links: list

    @property
    def width(self) -> int:
        return max(len(b) for b in self.bags.values()) - 1

    def neighbors(self, nid: int):
        out = []
        for a, b in self.links:
            if a == nid:
                out.append(b)
            elif b == nid:
                out.append(a)
        return out


@dataclass(frozen=True)
class NiceNode:
    id: int
    kind: str  # leaf | introduce | forget | join
    bag: frozenset
    children: tuple
    vertex: int | None = None  # introduced/forgotten vertex


@dataclass
class NiceTreeDecomposition:
    nodes: dict
    root: int

    @property
    def width(self) -> int:
        return max(len(n.bag) for n in self.nodes.values()) - 1

    def topo_order(self) -> list[int]:
        """Node ids, children strictly before parents."""
        order: list[int] = []
        stack = [(self.root, False)]
        while stack:
            nid, done = stack.pop()
            if done:
                order.append(nid)
                continue
            stack.append((nid, True))
            for c in self.nodes[nid].children:
                stack.append((c, False))
        return order

    def as_plain(self) -> TreeDecomposition:
        bags = {nid: n.bag for nid, n in self.nodes.items()}
        links = []
        for nid, n in self.nodes.items():
            for c in n.children:
                links.append((nid, c))
        return TreeDecomposition(bags, links)

    def kind_labels(self) -> dict:
        out = {}
        for nid, n in self.nodes.items():
            if n.kind in ("forget", "introduce"):
                out[nid] = f"{n.kind}:{n.vertex}"
            else:
                out[nid] = n.kind
        return out


def validate_decomposition(g: CapacitatedGraph, td: TreeDecomposition) -> list[Violation]:
    """Check the three decomposition axioms plus tree-ness of the links."""
    out: list[Violation] = []
    ids = set(td.bags)
    adj: dict[int, set[int]] = {nid: set() for nid in ids}
    for a, b in td.links:
        if a not in ids or b not in ids:
            out.append(Violation("bad-link", f"link {a}-{b} references unknown node"))
            continue
        adj[a].add(b)
        adj[b].add(a)
    if len(td.links) != len(ids) - 1:
        out.append(Violation("not-a-tree", f"{len(td.links)} links for {len(ids)} nodes"))
    else:
        seen = set()
        first = next(iter(ids))
        queue = deque([first])
        seen.add(first)
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        if seen != ids:
            out.append(Violation("not-a-tree", "links do not connect all nodes"))
    occurrence: dict[int, set[int]] = {}
    for nid, bag in td.bags.items():
        for v in bag:
            occurrence.setdefault(v, set()).add(nid)
    for v in range(g.n):
        if v not in occurrence:
            out.append(Violation("vertex-uncovered", f"vertex {v} in no bag"))
    for e in g.edges:
        if not any(e.u in td.bags[nid] and e.v in td.bags[nid] for nid in ids):
            out.append(Violation("edge-uncovered", f"edge {e.id} ({e.u},{e.v}) in no bag"))
    if not any(v.code == "not-a-tree" for v in out):
        for v, occ in occurrence.items():
            first = next(iter(occ))
            seen = {first}
            queue = deque([first])
            while queue:
                x = queue.popleft()
                for y in adj[x]:
                    if y in occ and y not in seen:
                        seen.add(y)
                        queue.append(y)
            if seen != occ:
                out.append(Violation("connectivity", f"bags containing {v} are disconnected"))
    return out


def _bags_from_order(adjacency: list[set[int]], order: list[int]) -> TreeDecomposition:
    """Standard elimination-order construction on a copy of the adjacency."""
    adj = [set(s) for s in adjacency]
    position = {v: i for i, v in enumerate(order)}
    bag_of: dict[int, frozenset] = {}
    parent_pick: dict[int, int] = {}
    for v in order:
        nb = set(adj[v])
        bag_of[v] = frozenset(nb | {v})
        if nb:
            parent_pick[v] = min(nb, key=lambda w: position[w])
        for a in nb:
            adj[a].discard(v)
            for b in nb:
                if a != b:
                    adj[a].add(b)
        adj[v] = set()
    ids = {v: i for i, v in enumerate(order)}
    bags = {ids[v]: bag_of[v] for v in order}
    links = [(ids[v], ids[w]) for v, w in parent_pick.items()]
    return TreeDecomposition(bags, links)


def _min_fill_order(adjacency: list[set[int]]) -> list[int]:
    adj = [set(s) for s in adjacency]
    alive = set(range(len(adj)))
    order = []
    while alive:
        best_v, best_fill = None, None
        for v in sorted(alive):
            nb = adj[v]
            fill = 0
            nb_list = sorted(nb)
            for i, a in enumerate(nb_list):
                for b in nb_list[i + 1 :]:
                    if b not in adj[a]:
                        fill += 1
            if best_fill is None or fill < best_fill:
                best_v, best_fill = v, fill
        v = best_v
        nb = sorted(adj[v])
        for i, a in enumerate(nb):
            for b in nb[i + 1 :]:
                adj[a].add(b)
                adj[b].add(a)
        for a in nb:
            adj[a].discard(v)
        adj[v] = set()
        alive.remove(v)
        order.append(v)
    return order


def _exact_order(adjacency: list[set[int]], node_budget: int) -> list[int]:
    """Minimum-width elimination order via memoized branch and bound."""
    adj = [set(s) for s in adjacency]
    alive = set(range(len(adj)))
    prefix: list[int] = []
    # safe reductions: degree <= 1 always; degree 2 only when no degree <= 1
    # vertex exists (graph then has a cycle, so width >= 2 anyway)
    while True:
        low = [v for v in sorted(alive) if len(adj[v]) <= 1]
        if low:
            v = low[0]
        else:
            two = [v for v in sorted(alive) if len(adj[v]) == 2]
            if not two:
                break
            v = two[0]
        nb = sorted(adj[v])
        for i, a in enumerate(nb):
            for b in nb[i + 1 :]:
                adj[a].add(b)
                adj[b].add(a)
        for a in nb:
            adj[a].discard(v)
        adj[v] = set()
        alive.remove(v)
        prefix.append(v)
    if not alive:
        return prefix

    kernel = sorted(alive)
    heur_suffix = _restricted_min_fill(adj, kernel)
    upper = _order_width({v: set(adj[v]) for v in kernel}, heur_suffix)

    memo: dict[frozenset, tuple[int, int | None]] = {}
    visits = [0]

    def solve(live: frozenset, cur: dict) -> tuple[int, int | None]:
        if not live:
            return -1, None
        hit = memo.get(live)
        if hit is not None:
            return hit
        visits[0] += 1
        if visits[0] > node_budget:
            raise ResourceLimitError(f"exact treewidth budget {node_budget} exhausted")
        best = len(live)  # eliminating into a clique never exceeds |live|-1
        best_v = min(live)
        for v in sorted(live, key=lambda x: (len(cur[x]), x)):
            d = len(cur[v])
            if d >= best:
                continue
            nxt = {w: set(s) for w, s in cur.items() if w != v}
            nb = cur[v]
            for a in nb:
                nxt[a].discard(v)
                nxt[a] |= nb - {a, v}
            sub, _ = solve(live - {v}, nxt)
            val = max(d, sub)
            if val < best:
                best, best_v = val, v
        memo[live] = (best, best_v)
        return best, best_v

    live0 = frozenset(kernel)
    cur0 = {v: set(adj[v]) for v in kernel}
    val, _ = solve(live0, cur0)
    if val >= upper:
        return prefix + heur_suffix
    # reconstruct the optimal suffix by walking the memo greedily
    suffix = []
    live, cur = live0, cur0
    while live:
        _, v = memo[live]
        # memo can miss when pruning cut the branch; recompute if needed
        if v is None or v not in live:
            _, v = solve(live, cur)
        suffix.append(v)
        nb = cur[v]
        nxt = {w: set(s) for w, s in cur.items() if w != v}
        for a in nb:
            nxt[a].discard(v)
            nxt[a] |= nb - {a, v}
        live, cur = live - {v}, nxt
    return prefix + suffix


def _restricted_min_fill(adj: list[set[int]], kernel: list[int]) -> list[int]:
    sub = {v: set(adj[v]) for v in kernel}
    order = []
    alive = set(kernel)
    while alive:
        best_v, best_fill = None, None
        for v in sorted(alive):
            nb = sorted(sub[v])
            fill = sum(
                1
                for i, a in enumerate(nb)
                for b in nb[i + 1 :]
                if b not in sub[a]
            )
            if best_fill is None or fill < best_fill:
                best_v, best_fill = v, fill
        v = best_v
        nb = sorted(sub[v])
        for i, a in enumerate(nb):
            for b in nb[i + 1 :]:
                sub[a].add(b)
                sub[b].add(a)
        for a in nb:
            sub[a].discard(v)
        del sub[v]
        alive.remove(v)
        order.append(v)
    return order


def _order_width(sub: dict, order: list[int]) -> int:
    cur = {v: set(s) for v, s in sub.items()}
    width = 0
    for v in order:
        nb = cur[v]
        width = max(width, len(nb))
        for a in nb:
            cur[a].discard(v)
            cur[a] |= nb - {a, v}
        del cur[v]
    return width


def width_of_order(g: CapacitatedGraph, order: list[int]) -> int:
    """Width of the decomposition induced by an elimination order."""
    adj = g.adjacency_sets()
    return _order_width({v: adj[v] for v in range(g.n)}, order)


def decompose(
    g: CapacitatedGraph, mode: str = "exact", node_budget: int = DEFAULT_NODE_BUDGET
) -> TreeDecomposition:
    """Build a tree decomposition; exact mode minimizes the width."""
    adjacency = g.adjacency_sets()
    if mode == "exact":
        order = _exact_order(adjacency, node_budget)
    elif mode == "heuristic":
        order = _min_fill_order(adjacency)
    else:
        raise ValidationError(f"unknown decompose mode {mode!r}")
    return _bags_from_order(adjacency, order)


def lift_unified(td: TreeDecomposition, unified: CapacitatedGraph) -> TreeDecomposition:
    """Decomposition for the unified graph: hang one bag {u, v, x} per
    subdivision vertex x off an existing bag containing both endpoints.
    Width grows by at most 1 (in fact to at most max(width, 2)).
    Relies on unify's layout: halves 2j and 2j+1 share subdivision vertex."""
    bags = dict(td.bags)
    links = list(td.links)
    next_id = max(bags) + 1
    host_cache: dict[tuple[int, int], int] = {}
    for eid in range(0, unified.m, 2):
        h1 = unified.edges[eid]
        u, x = h1.u, h1.v
        v = unified.edges[eid + 1].v
        key = (u, v)
        host = host_cache.get(key)
        if host is None:
            for nid in sorted(td.bags):
                if u in td.bags[nid] and v in td.bags[nid]:
                    host = nid
                    break
            if host is None:
                raise ValidationError(f"no bag covers endpoints {u},{v}")
            host_cache[key] = host
        bags[next_id] = frozenset({u, v, x})
        links.append((host, next_id))
        next_id += 1
    return TreeDecomposition(bags, links)


class _NiceBuilder:
    def __init__(self):
        self.nodes: dict[int, NiceNode] = {}

    def add(self, kind, bag, children=(), vertex=None) -> int:
        nid = len(self.nodes)
        self.nodes[nid] = NiceNode(nid, kind, frozenset(bag), tuple(children), vertex)
        return nid

    def leaf_chain(self, bag: frozenset) -> int:
        verts = sorted(bag)
        cur_bag = {verts[0]}
        nid = self.add("leaf", cur_bag)
        for v in verts[1:]:
            cur_bag.add(v)
            nid = self.add("introduce", cur_bag, (nid,), v)
        return nid

    def lift(self, nid: int, target: frozenset) -> int:
        """Forget/introduce chain from the bag at nid up to target."""
        cur = set(self.nodes[nid].bag)
        for v in sorted(cur - target):
            cur.remove(v)
            nid = self.add("forget", cur, (nid,), v)
        for v in sorted(target - cur):
            cur.add(v)
            nid = self.add("introduce", cur, (nid,), v)
        return nid


def make_nice(td: TreeDecomposition, root: int | None = None) -> NiceTreeDecomposition:
    """Rooted nice form: leaf/introduce/forget/join typing, binary joins,
    empty root bag via a trailing forget chain."""
    for nid, bag in td.bags.items():
        if not bag:
            raise ValidationError(f"cannot make nice: empty bag at node {nid}")
    if root is None:
        root = min(td.bags)
    adj: dict[int, list[int]] = {nid: [] for nid in td.bags}
    for a, b in td.links:
        adj[a].append(b)
        adj[b].append(a)
    b = _NiceBuilder()

    def build(nid: int, parent: int | None) -> int:
        children = sorted(c for c in adj[nid] if c != parent)
        bag = td.bags[nid]
        if not children:
            return b.leaf_chain(bag)
        tops = [b.lift(build(c, nid), bag) for c in children]
        cur = tops[0]
        for other in tops[1:]:
            cur = b.add("join", bag, (cur, other))
        return cur

    top = build(root, None)
    cur = set(td.bags[root])
    for v in sorted(cur):
        cur.remove(v)
        top = b.add("forget", set(cur), (top,), v)
    return NiceTreeDecomposition(b.nodes, top)


def validate_nice(g: CapacitatedGraph, ntd: NiceTreeDecomposition) -> list[Violation]:
    """Nice-typing rules, Property 1 for introduce nodes, and the plain
    decomposition axioms on the underlying tree."""
    out: list[Violation] = []
    nodes = ntd.nodes
    if ntd.root not in nodes:
        return [Violation("bad-root", f"root {ntd.root} unknown")]
    if nodes[ntd.root].bag:
        out.append(Violation("root-not-empty", "root bag must be empty"))
    subtree_verts: dict[int, set[int]] = {}
    for nid in ntd.topo_order():
        n = nodes[nid]
        below = set(n.bag)
        for c in n.children:
            below |= subtree_verts[c]
        subtree_verts[nid] = below
        kids = [nodes[c] for c in n.children]
        if n.kind == "leaf":
            if kids or len(n.bag) != 1:
                out.append(Violation("bad-leaf", f"node {nid}"))
        elif n.kind == "forget":
            if len(kids) != 1 or n.vertex is None or n.bag != kids[0].bag - {n.vertex} or n.vertex not in kids[0].bag:
                out.append(Violation("bad-forget", f"node {nid}"))
        elif n.kind == "introduce":
            if len(kids) != 1 or n.vertex is None or n.bag != kids[0].bag | {n.vertex} or n.vertex in kids[0].bag:
                out.append(Violation("bad-introduce", f"node {nid}"))
            else:
                outside = subtree_verts[n.children[0]] - kids[0].bag
                for eid in g.incident(n.vertex):
                    if g.edges[eid].other(n.vertex) in outside:
                        out.append(
                            Violation("property1", f"introduced {n.vertex} adjacent below node {nid}")
                        )
                        break
        elif n.kind == "join":
            if len(kids) != 2 or any(k.bag != n.bag for k in kids):
                out.append(Violation("bad-join", f"node {nid}"))
        else:
            out.append(Violation("bad-kind", f"node {nid} kind {n.kind!r}"))
    out.extend(validate_decomposition(g, ntd.as_plain()))
    return out
