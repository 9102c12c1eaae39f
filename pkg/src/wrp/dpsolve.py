"""Signature DP over a nice tree decomposition of the unified cycle instance.

Table entries map canonical signature keys (pairs, bag-edge bitmask) to the
best known sub-solution summary (weight, edge bitmask of the whole multiset,
entry kind).  Keys with pairs == () are the EMPTY signature; its entry kind
distinguishes the no-walk reading ("nowalk": the subtree holds no waypoint)
from the closed-walk reading ("confined": one closed walk below the bag that
already covers every subtree waypoint and avoids all bag vertices).

The join transition follows the brute-force contract: child tables are
combined pairwise, the union edge multiset is split into connected shares
with at most two odd-degree vertices each (all odd vertices in the bag), and
every realizable endpoint pairing is emitted.  On unified inputs the unions
live in per-group copy-count space, and share enumeration is memoized once
per join bag; a generic per-component fallback covers other graphs.
"""

from __future__ import annotations

import time
from bisect import insort
from dataclasses import dataclass

from wrp.errors import InternalError, ResourceLimitError, ValidationError, WidthLimitError
from wrp.model import CapacitatedGraph, Instance, Route, SolveResult, route_cost, validate_route
from wrp.signatures import canon_pairs, pairs_ok
from wrp.transforms import TransformTrace, clamp_instance, reduce_to_cycle, unify_instance
from wrp.treewidth import (
    NiceTreeDecomposition,
    decompose,
    lift_unified,
    make_nice,
    validate_decomposition,
    validate_nice,
)

EMPTY_KEY: tuple = ((), 0)

WALKS = "walks"
NOWALK = "nowalk"
CONFINED = "confined"

DEFAULT_WIDTH_CAP = 8
DEFAULT_SHARE_BUDGET = 20_000_000


@dataclass(frozen=True)
class Entry:
    weight: int
    mask: int
    kind: str

    def edge_ids(self) -> tuple:
        cached = getattr(self, "_ids", None)
        if cached is None:
            out = []
            m = self.mask
            while m:
                low = m & -m
                out.append(low.bit_length() - 1)
                m ^= low
            cached = tuple(out)
            object.__setattr__(self, "_ids", cached)
        return cached


_KIND_RANK = {NOWALK: 0, WALKS: 1, CONFINED: 2}


def _better(a: Entry, b: Entry) -> Entry:
    """Min weight, then lexicographically smallest edge-id multiset.

    On full ties prefer nowalk over confined: both can own the empty
    signature of a waypoint-free subtree, and nowalk composes with more."""
    if a.weight != b.weight:
        return a if a.weight < b.weight else b
    ka, kb = a.edge_ids(), b.edge_ids()
    if ka != kb:
        return a if ka < kb else b
    return a if _KIND_RANK[a.kind] <= _KIND_RANK[b.kind] else b


def _merge(table: dict, key: tuple, entry: Entry):
    old = table.get(key)
    table[key] = entry if old is None else _better(old, entry)


def _set_partitions(items: list):
    """All partitions of items into unordered nonempty groups."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield part + [[first]]


class _UF:
    def __init__(self):
        self.p = {}

    def find(self, x):
        p = self.p
        if x not in p:
            p[x] = x
            return x
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[ra] = rb


def process_leaf(v: int, waypoints: frozenset) -> dict:
    table = {(((v, v),), 0): Entry(0, 0, WALKS)}
    if v not in waypoints:
        table[EMPTY_KEY] = Entry(0, 0, NOWALK)
    return table


def process_forget(
    g: CapacitatedGraph, v: int, child: dict, parent_bag: frozenset, child_bag_edges: tuple
) -> dict:
    v_mask = 0
    for eid in child_bag_edges:
        e = g.edges[eid]
        if v == e.u or v == e.v:
            v_mask |= 1 << eid
    out: dict = {}
    for (pairs, emask), ent in child.items():
        if not pairs:
            _merge(out, (pairs, emask), ent)
            continue
        if not any(v == a or v == b for a, b in pairs):
            _merge(out, (pairs, emask & ~v_mask), ent)
            continue
        if pairs == ((v, v),) and emask & ~v_mask == 0:
            # the single closed walk sinks below the bag if it avoids it
            ok = True
            m = ent.mask
            while m:
                low = m & -m
                e = g.edges[low.bit_length() - 1]
                if e.u in parent_bag or e.v in parent_bag:
                    ok = False
                    break
                m ^= low
            if ok:
                _merge(out, EMPTY_KEY, Entry(ent.weight, ent.mask, CONFINED))
        # other entries mentioning v die: endpoints must stay in the bag
    return out


def _group_options(g: CapacitatedGraph, s_edges: list, member_pairs: list):
    """Endpoint options for one walk built from bag edges plus child walks.

    Returns None when the atoms cannot form a single walk, the forced open
    pair, or the list of closed-anchor options.
    """
    uf = _UF()
    parity: dict[int, int] = {}
    verts: set[int] = set()
    for eid in s_edges:
        e = g.edges[eid]
        verts.add(e.u)
        verts.add(e.v)
        uf.union(e.u, e.v)
        parity[e.u] = parity.get(e.u, 0) ^ 1
        parity[e.v] = parity.get(e.v, 0) ^ 1
    for a, b in member_pairs:
        verts.add(a)
        verts.add(b)
        if a != b:
            uf.union(a, b)
            parity[a] = parity.get(a, 0) ^ 1
            parity[b] = parity.get(b, 0) ^ 1
        else:
            uf.find(a)
    roots = {uf.find(x) for x in verts}
    if len(roots) != 1:
        return None
    odd = sorted(x for x in verts if parity.get(x, 0))
    if len(odd) == 0:
        return [(x, x) for x in sorted(verts)]
    if len(odd) == 2:
        return [(odd[0], odd[1])]
    return None


def process_introduce(
    g: CapacitatedGraph,
    v: int,
    child: dict,
    bag: frozenset,
    bag_edges: tuple,
    waypoints: frozenset,
) -> dict:
    bag_size = len(bag)
    v_edges = [eid for eid in bag_edges if v in (g.edges[eid].u, g.edges[eid].v)]
    v_is_wp = v in waypoints
    out: dict = {}
    for (pairs, emask), ent in child.items():
        if ent.kind == CONFINED:
            if not v_is_wp:
                _merge(out, (pairs, emask), ent)
            continue
        # keep unchanged (v stays off every walk)
        if not v_is_wp:
            _merge(out, (pairs, emask), ent)
        # add the isolated trivial walk at v
        p_triv = canon_pairs(pairs + ((v, v),))
        if pairs_ok(p_triv, bag_size):
            _merge(out, (p_triv, emask), Entry(ent.weight, ent.mask, WALKS))
        if not v_edges:
            continue
        # route some of v's bag edges: group them with child walks
        for s_pick in range(1, 1 << len(v_edges)):
            s_edges = [v_edges[i] for i in range(len(v_edges)) if s_pick >> i & 1]
            s_mask = 0
            s_weight = 0
            for eid in s_edges:
                s_mask |= 1 << eid
                s_weight += g.edges[eid].weight
            if ent.mask & s_mask:
                raise InternalError("introduced edges already used below")
            for grouping in _set_partitions(s_edges):
                r = len(grouping)
                # each child pair joins one group or stays untouched
                assign_space = (r + 1) ** len(pairs)
                for code in range(assign_space):
                    members: list[list] = [[] for _ in range(r)]
                    untouched = []
                    c = code
                    for pr in pairs:
                        slot = c % (r + 1)
                        c //= r + 1
                        if slot == r:
                            untouched.append(pr)
                        else:
                            members[slot].append(pr)
                    options = []
                    feasible = True
                    for gi in range(r):
                        opt = _group_options(g, grouping[gi], members[gi])
                        if opt is None:
                            feasible = False
                            break
                        options.append(opt)
                    if not feasible:
                        continue
                    idx = [0] * r
                    while True:
                        chosen = tuple(options[i][idx[i]] for i in range(r))
                        base = canon_pairs(tuple(untouched) + chosen)
                        w2 = ent.weight + s_weight
                        m2 = ent.mask | s_mask
                        for cand in (base, canon_pairs(base + ((v, v),))):
                            if cand and pairs_ok(cand, bag_size):
                                _merge(out, (cand, emask | s_mask), Entry(w2, m2, WALKS))
                        j = r - 1
                        while j >= 0:
                            idx[j] += 1
                            if idx[j] < len(options[j]):
                                break
                            idx[j] = 0
                            j -= 1
                        if j < 0:
                            break
    return out


def _structure_pairings(atom_pairs: tuple, bag_ids: tuple, max_pairs: int, budget: list):
    """Pairings of one contracted component, in relabeled vertex ids.

    atom_pairs: sorted (a, b) endpoint pairs (a <= b, a == b for closed
    chains) over ids 0..k-1; bag_ids: which of those ids are bag vertices.
    A share is a connected atom sub-multiset whose odd vertices (<= 2) all
    lie in the bag; pairings peel shares off the lowest remaining atom type.
    Parallel atoms are interchangeable, so everything runs over per-type
    multiplicity vectors packed into ints; pairs travel packed as a*64+b."""
    from bisect import insort

    bagmask = 0
    for v in bag_ids:
        bagmask |= 1 << v

    types: list = []
    counts: list = []
    for p in atom_pairs:  # sorted; duplicates adjacent
        if types and p == types[-1]:
            counts[-1] += 1
        else:
            types.append(p)
            counts.append(1)
    nt = len(types)
    shifts = []
    s = 0
    for c in counts:
        shifts.append(s)
        s += (c + 1).bit_length()
    touch: dict[int, int] = {}  # vertex -> type index mask
    t_vmask = []
    t_toggle = []
    for i, (a, b) in enumerate(types):
        touch[a] = touch.get(a, 0) | 1 << i
        touch[b] = touch.get(b, 0) | 1 << i
        t_vmask.append(1 << a | 1 << b)
        t_toggle.append(0 if a == b else 1 << a | 1 << b)
    touch_list = [touch.get(v, 0) for v in range(max(touch) + 1)]

    shares_memo: dict[int, list] = {}

    def shares_from(avail_key: int, avail: list) -> list:
        got = shares_memo.get(avail_key)
        if got is not None:
            return got
        results: list = []

        def grow(skey: int, svec: list, vmask: int, parity: int, banned: int):
            budget[0] -= 1
            if budget[0] < 0:
                raise ResourceLimitError("join share enumeration budget exhausted")
            if parity & ~bagmask == 0:
                pc = parity.bit_count()
                if pc == 2:
                    a = (parity & -parity).bit_length() - 1
                    results.append((skey, list(svec), [a * 64 + (parity.bit_length() - 1)]))
                elif pc == 0:
                    anchors = vmask & bagmask
                    if anchors:
                        opts = []
                        while anchors:
                            low = anchors & -anchors
                            x = low.bit_length() - 1
                            opts.append(x * 64 + x)
                            anchors ^= low
                        results.append((skey, list(svec), opts))
            usable = 0  # types with spare copies, not banned
            for t in range(nt):
                if not (banned >> t & 1) and svec[t] < avail[t]:
                    usable |= 1 << t
            stranded = parity & ~bagmask
            while stranded:
                low = stranded & -stranded
                if not (touch_list[low.bit_length() - 1] & usable):
                    return  # stranded odd vertex: no continuation can fix it
                stranded ^= low
            frontier = 0
            vm = vmask
            while vm:
                low = vm & -vm
                frontier |= touch_list[low.bit_length() - 1]
                vm ^= low
            frontier &= usable
            local_ban = banned
            f = frontier
            while f:
                low = f & -f
                t = low.bit_length() - 1
                spare = avail[t] - svec[t]
                base = svec[t]
                for k in range(1, spare + 1):
                    svec[t] = base + k
                    grow(
                        skey + (k << shifts[t]),
                        svec,
                        vmask | t_vmask[t],
                        parity ^ (t_toggle[t] if k & 1 else 0),
                        local_ban | low,
                    )
                svec[t] = base
                local_ban |= low
                f ^= low

        t0 = 0
        while avail[t0] == 0:
            t0 += 1
        svec = [0] * nt
        for k in range(1, avail[t0] + 1):
            svec[t0] = k
            grow(
                k << shifts[t0],
                svec,
                t_vmask[t0],
                t_toggle[t0] if k & 1 else 0,
                1 << t0,
            )
        shares_memo[avail_key] = results
        return results

    peel_memo: dict[int, frozenset] = {}

    def peel(avail_key: int, avail: list) -> frozenset:
        if avail_key == 0:
            return frozenset({()})
        got = peel_memo.get(avail_key)
        if got is not None:
            return got
        out = set()
        for skey, svec, opts in shares_from(avail_key, avail):
            rest = peel(avail_key - skey, [a - b for a, b in zip(avail, svec)])
            for tail in rest:
                if len(tail) + 1 > max_pairs:
                    continue
                for sp in opts:
                    merged = list(tail)
                    insort(merged, sp)
                    out.add(tuple(merged))
        res = frozenset(out)
        peel_memo[avail_key] = res
        return res

    full_key = 0
    for t, c in enumerate(counts):
        full_key |= c << shifts[t]
    full = peel(full_key, list(counts))
    return frozenset(
        tuple((p >> 6, p & 63) for p in pairing) for pairing in full
    )


class _UnifiedSymmetry:
    """Collapses interchangeable parallel copies in unified graphs.

    Unification turns an edge into cap identical 2-edge paths, so copies
    with the same endpoints and weight are interchangeable.  At bags without
    subdivision vertices every copy is used whole or not at all (the inner
    vertex was forgotten with even degree), which lets a mask be rewritten
    to take the lowest copies of each group first.  States that differ only
    in the copy choice then coincide, and join unions can be formed in
    per-group count space instead of raw bit space."""

    def __init__(self, g: CapacitatedGraph):
        if g.m % 2:
            raise InternalError("unified graph must pair half-edges")
        grouped: dict = {}
        subdiv = set()
        for i in range(0, g.m, 2):
            h1, h2 = g.edges[i], g.edges[i + 1]
            if h1.weight != h2.weight:
                raise InternalError("half-edge weights differ within a copy")
            shared = {h1.u, h1.v} & {h2.u, h2.v}
            if len(shared) != 1:
                raise InternalError("half-edge pair lacks a shared subdivision vertex")
            x = shared.pop()
            subdiv.add(x)
            u = h1.u + h1.v - x
            v = h2.u + h2.v - x
            key = ((u, v) if u <= v else (v, u), h1.weight)
            grouped.setdefault(key, []).append(3 << i)
        self.subdiv = frozenset(subdiv)
        items = sorted(grouped.items())
        self.groups = [sorted(ms) for _, ms in items]
        self.group_ends = [key[0] for key, _ in items]
        self.group_all = []
        self.prefix = []
        pad = 0
        hi = 0
        for gi, copies in enumerate(self.groups):
            ga = 0
            pre = [0]
            for cm in copies:
                ga |= cm
                pre.append(ga)
            self.group_all.append(ga)
            self.prefix.append(pre)
            pad |= (0x7F - len(copies)) << (8 * gi)
            hi |= 0x80 << (8 * gi)
        self.pad = pad
        self.himask = hi
        self.canon_memo = {0: 0}
        self.count_memo = {0: 0}
        self.union_memo = {0: 0}

    def canon(self, m: int) -> int:
        got = self.canon_memo.get(m)
        if got is not None:
            return got
        out = m
        for gi, copies in enumerate(self.groups):
            ga = self.group_all[gi]
            used = m & ga
            if not used:
                continue
            k = 0
            for cm in copies:
                hit = used & cm
                if hit == cm:
                    k += 1
                elif hit:
                    raise InternalError("partial parallel copy outside subdivision bags")
            want = self.prefix[gi][k]
            if used != want:
                out = (out & ~ga) | want
        self.canon_memo[m] = out
        return out

    def counts(self, m: int) -> int:
        """Copies in use per group, packed 8 bits per group."""
        got = self.count_memo.get(m)
        if got is not None:
            return got
        tot = 0
        for gi, copies in enumerate(self.groups):
            used = m & self.group_all[gi]
            if used:
                k = 0
                for cm in copies:
                    if used & cm == cm:
                        k += 1
                tot += k << (8 * gi)
        self.count_memo[m] = tot
        return tot

    def union_mask(self, tot: int) -> int:
        """Canonical mask realizing the packed per-group counts."""
        got = self.union_memo.get(tot)
        if got is not None:
            return got
        m = 0
        t = tot
        gi = 0
        while t:
            k = t & 0xFF
            if k:
                m |= self.prefix[gi][k]
            t >>= 8
            gi += 1
        self.union_memo[tot] = m
        return m


def _canonize_table(table: dict, sym: _UnifiedSymmetry) -> dict:
    out = {}
    for key, ent in table.items():
        cm = sym.canon(ent.mask)
        out[key] = ent if cm == ent.mask else Entry(ent.weight, cm, ent.kind)
    return out


class _BagPairings:
    """Pairings of canonical unions at one join bag, keyed by copy counts.

    A share is a connected multiset of copies whose odd-degree vertices
    (at most two) are bag members; a pairing partitions every used copy
    into shares and records one endpoint pair per share.  Copies of a group
    are interchangeable, so the state is the packed per-group count vector
    (the same ints _UnifiedSymmetry.counts produces), and shares peel off
    the lowest nonempty group.  One memo per bag serves every union seen
    there, so overlapping unions share all their sub-multiset states."""

    def __init__(
        self,
        bag: frozenset,
        sym: _UnifiedSymmetry,
        max_pairs: int,
        budget: list,
        bag_wp: frozenset,
    ):
        self.max_pairs = max_pairs
        self.budget = budget
        self.bag_wp = bag_wp
        bagmask = 0
        for v in bag:
            bagmask |= 1 << v
        self.bagmask = bagmask
        self.nt = len(sym.groups)
        self.sizes = [len(c) for c in sym.groups]
        touch: dict[int, int] = {}
        t_vmask = []
        t_toggle = []
        for i, (a, b) in enumerate(sym.group_ends):
            touch[a] = touch.get(a, 0) | 1 << i
            touch[b] = touch.get(b, 0) | 1 << i
            t_vmask.append(1 << a | 1 << b)
            t_toggle.append(0 if a == b else 1 << a | 1 << b)
        self.touch_list = [touch.get(v, 0) for v in range(max(touch) + 1)] if touch else []
        self.t_vmask = t_vmask
        self.t_toggle = t_toggle
        self.ends = sym.group_ends
        self.shares_memo: dict[int, list] = {}
        self.peel_memo: dict[int, frozenset] = {0: frozenset({()})}
        self.emit_memo: dict[int, tuple] = {}

    def _shares_from(self, avail_key: int, avail: list) -> list:
        got = self.shares_memo.get(avail_key)
        if got is not None:
            return got
        results: list = []
        nt = self.nt
        bagmask = self.bagmask
        touch_list = self.touch_list
        budget = self.budget

        def grow(skey: int, svec: list, vmask: int, parity: int, banned: int):
            budget[0] -= 1
            if budget[0] < 0:
                raise ResourceLimitError("join share enumeration budget exhausted")
            if parity & ~bagmask == 0:
                pc = parity.bit_count()
                if pc == 2:
                    a = (parity & -parity).bit_length() - 1
                    results.append((skey, list(svec), [(a, parity.bit_length() - 1)]))
                elif pc == 0:
                    anchors = vmask & bagmask
                    if anchors:
                        opts = []
                        while anchors:
                            low = anchors & -anchors
                            x = low.bit_length() - 1
                            opts.append((x, x))
                            anchors ^= low
                        results.append((skey, list(svec), opts))
            usable = 0
            for t in range(nt):
                if not (banned >> t & 1) and svec[t] < avail[t]:
                    usable |= 1 << t
            stranded = parity & ~bagmask
            while stranded:
                low = stranded & -stranded
                if not (touch_list[low.bit_length() - 1] & usable):
                    return
                stranded ^= low
            frontier = 0
            vm = vmask
            while vm:
                low = vm & -vm
                frontier |= touch_list[low.bit_length() - 1]
                vm ^= low
            frontier &= usable
            local_ban = banned
            f = frontier
            while f:
                low = f & -f
                t = low.bit_length() - 1
                spare = avail[t] - svec[t]
                base = svec[t]
                for k in range(1, spare + 1):
                    svec[t] = base + k
                    grow(
                        skey + (k << (8 * t)),
                        svec,
                        vmask | self.t_vmask[t],
                        parity ^ (self.t_toggle[t] if k & 1 else 0),
                        local_ban | low,
                    )
                svec[t] = base
                local_ban |= low
                f ^= low

        t0 = 0
        while avail[t0] == 0:
            t0 += 1
        svec = [0] * nt
        for k in range(1, avail[t0] + 1):
            svec[t0] = k
            grow(
                k << (8 * t0),
                svec,
                self.t_vmask[t0],
                self.t_toggle[t0] if k & 1 else 0,
                1 << t0,
            )
        self.shares_memo[avail_key] = results
        return results

    def pairings(self, key: int) -> frozenset:
        """Canonical pair multisets of the union with these copy counts."""
        got = self.peel_memo.get(key)
        if got is not None:
            return got
        avail = []
        t = key
        for _ in range(self.nt):
            avail.append(t & 0xFF)
            t >>= 8
        out = set()
        max_pairs = self.max_pairs
        for skey, svec, opts in self._shares_from(key, avail):
            rest = self.pairings(key - skey)
            for tail in rest:
                if len(tail) + 1 > max_pairs:
                    continue
                for sp in opts:
                    merged = list(tail)
                    insort(merged, sp)
                    out.add(tuple(merged))
        res = frozenset(out)
        self.peel_memo[key] = res
        return res

    def emissions(self, key: int) -> tuple:
        """Join-ready signature pair lists for these copy counts: pairings
        extended by trivial pairs for uncovered bag waypoints, filtered by
        the pair budget and the endpoint-shape condition."""
        got = self.emit_memo.get(key)
        if got is not None:
            return got
        prs = self.pairings(key)
        if not prs:
            self.emit_memo[key] = ()
            return ()
        touched = set()
        t = key
        gi = 0
        while t:
            if t & 0xFF:
                a, b = self.ends[gi]
                touched.add(a)
                touched.add(b)
            t >>= 8
            gi += 1
        extra = tuple((w, w) for w in sorted(self.bag_wp - touched))
        ne = len(extra)
        mp = self.max_pairs
        kept = []
        for pr in prs:
            if len(pr) + ne > mp:
                continue
            cand = tuple(sorted(pr + extra)) if extra else pr
            if pairs_ok(cand, mp):
                kept.append(cand)
        res = tuple(sorted(kept))
        self.emit_memo[key] = res
        return res


class _ShareFinder:
    """Enumerates realizable endpoint pairings of edge-mask components.

    Maximal chains through non-bag degree-2 vertices are contracted into
    atoms first: any share must take such a chain whole, as a partial chain
    leaves an odd vertex outside the bag.  Results are cached run-wide, both
    per (bag, component mask) and by the contracted structure (atom
    endpoints + bag membership), which repeats heavily across unions and
    join nodes.  Pairings come back as sorted tuples of packed pairs
    (a * n + b) ready for cheap merging."""

    def __init__(
        self,
        g: CapacitatedGraph,
        bag: frozenset,
        max_pairs: int,
        budget: list,
        struct_cache: dict,
        pair_cache: dict,
    ):
        self.g = g
        self.bag = bag
        self.bag_key = tuple(sorted(bag))
        self.max_pairs = max_pairs
        self.budget = budget
        self.struct_cache = struct_cache
        self.pair_cache = pair_cache

    def _contract(self, mask: int):
        """Atoms (emask, a, b) between branch vertices; a == b for loops."""
        g = self.g
        deg: dict[int, int] = {}
        inc: dict[int, list] = {}
        m = mask
        while m:
            low = m & -m
            eid = low.bit_length() - 1
            e = g.edges[eid]
            deg[e.u] = deg.get(e.u, 0) + 1
            deg[e.v] = deg.get(e.v, 0) + 1
            inc.setdefault(e.u, []).append(eid)
            inc.setdefault(e.v, []).append(eid)
            m ^= low
        branch = {v for v, d in deg.items() if d != 2 or v in self.bag}
        if not branch:
            return None  # closed chain with no bag contact: unusable
        atoms: dict[int, tuple] = {}
        for v in sorted(branch):
            for eid in inc[v]:
                amask = 1 << eid
                cur = g.edges[eid].other(v)
                while cur not in branch:
                    e1, e2 = inc[cur]
                    nxt = e2 if (1 << e1) & amask else e1
                    amask |= 1 << nxt
                    cur = g.edges[nxt].other(cur)
                if amask not in atoms:
                    atoms[amask] = (amask, min(v, cur), max(v, cur))
        return sorted(atoms.values())

    def pairings(self, mask: int) -> tuple:
        """Pair multisets realizable as walk partitions of mask, packed and
        sorted by length (shortest first)."""
        if mask == 0:
            return ((),)
        ck = (self.bag_key, mask)
        cached = self.pair_cache.get(ck)
        if cached is not None:
            return cached
        atoms = self._contract(mask)
        if atoms is None:
            self.pair_cache[ck] = ()
            return ()
        # order-preserving relabel: keeps pair canonical order intact
        verts = sorted({a for _, a, _ in atoms} | {b for _, _, b in atoms})
        rel = {v: i for i, v in enumerate(verts)}
        atom_pairs = tuple(sorted((rel[a], rel[b]) for _, a, b in atoms))
        bag_ids = tuple(rel[v] for v in verts if v in self.bag)
        key = (atom_pairs, bag_ids, self.max_pairs)
        rel_pairings = self.struct_cache.get(key)
        if rel_pairings is None:
            rel_pairings = _structure_pairings(atom_pairs, bag_ids, self.max_pairs, self.budget)
            self.struct_cache[key] = rel_pairings
        n = self.g.n
        got = tuple(
            sorted(
                (
                    tuple(sorted(verts[a] * n + verts[b] for a, b in pairing))
                    for pairing in rel_pairings
                ),
                key=lambda t: (len(t), t),
            )
        )
        self.pair_cache[ck] = got
        return got


def _components(g: CapacitatedGraph, mask: int):
    """Connected components of the edge-induced subgraph: (verts, mask)."""
    uf = _UF()
    m = mask
    while m:
        low = m & -m
        e = g.edges[low.bit_length() - 1]
        uf.union(e.u, e.v)
        m ^= low
    comps: dict[int, list] = {}
    m = mask
    while m:
        low = m & -m
        eid = low.bit_length() - 1
        e = g.edges[eid]
        comps.setdefault(uf.find(e.u), [set(), 0])
        comps[uf.find(e.u)][0].update((e.u, e.v))
        comps[uf.find(e.u)][1] |= low
        m ^= low
    return [(frozenset(vs), cm) for vs, cm in comps.values()]


def _join_side(table: dict):
    """Collapse a child table for joining: distinct nonzero general masks,
    plus whether any mask-0 entry (nowalk or trivial walks) offers a neutral
    counterpart.  Join re-thread output depends only on the union edge set
    (weight and bag-edge subset both derive from it), so pair multisets are
    irrelevant here; confined never enters re-threading."""
    neutral = False
    masks = set()
    for (_, _), ent in table.items():
        if ent.kind == CONFINED:
            continue
        if ent.mask == 0:
            neutral = True
        else:
            masks.add(ent.mask)
    return neutral, sorted(masks)


def process_join(
    g: CapacitatedGraph,
    bag: frozenset,
    bag_edge_mask: int,
    left: dict,
    right: dict,
    waypoints: frozenset,
    share_budget: list,
    counters: dict,
    struct_cache: dict | None = None,
    pair_cache: dict | None = None,
    sym: _UnifiedSymmetry | None = None,
    bag_peels: dict | None = None,
) -> dict:
    n = g.n
    bag_size = len(bag)
    bag_wp = frozenset(waypoints) & bag
    out: dict = {}
    l_neutral, lmasks = _join_side(left)
    r_neutral, rmasks = _join_side(right)
    # A mask-0 entry on one side certifies its subtree adds no edges and no
    # uncovered waypoints, so the other side's entries carry over unchanged.
    # This also covers every union with one side empty: any signature
    # realizable over a single child mask is already stored by that child at
    # equal weight (beta >= ell keeps it within every ancestor bag's budget).
    if r_neutral:
        for key, ent in left.items():
            _merge(out, key, ent)
    if l_neutral:
        for key, ent in right.items():
            _merge(out, key, ent)
    if sym is not None and sym.groups:
        bp = bag_peels.get(bag) if bag_peels is not None else None
        if bp is None:
            bp = _BagPairings(bag, sym, bag_size, share_budget, bag_wp)
            if bag_peels is not None:
                bag_peels[bag] = bp
        # child subtrees introduce disjoint copy sets, so adding per-group
        # counts never oversubscribes a group; the guard is a sanity check
        lcnts = [sym.counts(m) for m in lmasks]
        rcnts = [sym.counts(m) for m in rmasks]
        tots = set()
        for c1 in lcnts:
            for c2 in rcnts:
                counters["join_pairs"] += 1
                tots.add(c1 + c2)
        ulist = []
        for tot in tots:
            if (tot + sym.pad) & sym.himask:
                raise InternalError("parallel copy demand exceeds available copies")
            ulist.append((sym.union_mask(tot), tot))
        ulist.sort()
        for union, tot in ulist:
            cands = bp.emissions(tot)
            if not cands:
                continue
            weight = 0
            m = union
            while m:
                low = m & -m
                weight += g.edges[low.bit_length() - 1].weight
                m ^= low
            e_b = union & bag_edge_mask
            entry = Entry(weight, union, WALKS)
            for cand in cands:
                _merge(out, (cand, e_b), entry)
        return out
    finder = _ShareFinder(
        g,
        bag,
        bag_size,
        share_budget,
        {} if struct_cache is None else struct_cache,
        {} if pair_cache is None else pair_cache,
    )
    unions = set()
    for m1 in lmasks:
        for m2 in rmasks:
            counters["join_pairs"] += 1
            inter = m1 & m2
            if inter:
                if inter & ~bag_edge_mask:
                    raise InternalError("join children share edges below the bag")
                continue
            unions.add(m1 | m2)
    packed_out: dict = {}
    for union in sorted(unions):
        weight = 0
        m = union
        while m:
            low = m & -m
            weight += g.edges[low.bit_length() - 1].weight
            m ^= low
        comps = _components(g, union)
        covered = set()
        for vs, _ in comps:
            covered |= vs
        extra = tuple(sorted(w * n + w for w in bag_wp - covered))
        per_comp = []
        dead = False
        for _, cmask in comps:
            opts = finder.pairings(cmask)
            if not opts:
                dead = True
                break
            per_comp.append(opts)
        if dead:
            continue
        # options are length-sorted, so the shortest choices downstream bound
        # how many pairs any completion must still absorb
        k = len(per_comp)
        min_suffix = [0] * (k + 1)
        for i in range(k - 1, -1, -1):
            min_suffix[i] = min_suffix[i + 1] + len(per_comp[i][0])
        e_b = union & bag_edge_mask
        entry = Entry(weight, union, WALKS)

        def assemble(i: int, merged: tuple):
            if i == k:
                if not merged:
                    _merge(out, EMPTY_KEY, Entry(weight, union, NOWALK))
                else:
                    key = (tuple(sorted(merged)), e_b)
                    cur = packed_out.get(key)
                    packed_out[key] = entry if cur is None else _better(cur, entry)
                return
            room = bag_size - len(merged) - min_suffix[i + 1]
            for opt in per_comp[i]:
                if len(opt) > room:
                    break
                assemble(i + 1, merged + opt)

        if len(extra) + min_suffix[0] <= bag_size:
            assemble(0, extra)
    for (packed, e_b), ent in packed_out.items():
        pairs = tuple((p // n, p % n) for p in packed)
        if pairs_ok(pairs, bag_size):
            _merge(out, (pairs, e_b), ent)
    return out


@dataclass
class DpRun:
    ntd: NiceTreeDecomposition
    graph: CapacitatedGraph
    waypoints: frozenset
    anchor: int
    tables: dict
    counters: dict


def run_dp(
    g: CapacitatedGraph,
    ntd: NiceTreeDecomposition,
    waypoints: frozenset,
    anchor: int,
    share_budget: int = DEFAULT_SHARE_BUDGET,
) -> DpRun:
    """Bottom-up table computation over the nice decomposition."""
    edge_lookup: dict[tuple[int, int], list] = {}
    for e in g.edges:
        edge_lookup.setdefault((min(e.u, e.v), max(e.u, e.v)), []).append(e.id)

    def bag_edge_ids(bag: frozenset) -> tuple:
        vs = sorted(bag)
        out = []
        for i, a in enumerate(vs):
            for b in vs[i + 1 :]:
                out.extend(edge_lookup.get((a, b), ()))
        return tuple(sorted(out))

    counters = {"join_pairs": 0, "entries": 0, "max_table": 0}
    budget = [share_budget]
    struct_cache: dict = {}
    pair_cache: dict = {}
    sym = _UnifiedSymmetry(g)
    bag_peels: dict = {}
    tables: dict[int, dict] = {}
    for nid in ntd.topo_order():
        node = ntd.nodes[nid]
        if node.kind == "leaf":
            (v,) = node.bag
            table = process_leaf(v, waypoints)
        elif node.kind == "forget":
            child = ntd.nodes[node.children[0]]
            table = process_forget(
                g, node.vertex, tables[child.id], node.bag, bag_edge_ids(child.bag)
            )
        elif node.kind == "introduce":
            child = ntd.nodes[node.children[0]]
            table = process_introduce(
                g, node.vertex, tables[child.id], node.bag, bag_edge_ids(node.bag), waypoints
            )
        elif node.kind == "join":
            a, b = node.children
            bem = 0
            for eid in bag_edge_ids(node.bag):
                bem |= 1 << eid
            table = process_join(
                g, node.bag, bem, tables[a], tables[b], waypoints, budget, counters,
                struct_cache, pair_cache, sym, bag_peels,
            )
        else:
            raise InternalError(f"unknown node kind {node.kind}")
        if sym.groups and not (node.bag & sym.subdiv):
            table = _canonize_table(table, sym)
        tables[nid] = table
        counters["entries"] += len(table)
        counters["max_table"] = max(counters["max_table"], len(table))
    return DpRun(ntd, g, waypoints, anchor, tables, counters)


def hierholzer_route(g: CapacitatedGraph, mask: int, start: int) -> Route:
    """Closed Eulerian walk over the masked edge set, starting at start."""
    if mask == 0:
        return Route(start, ())
    incident: dict[int, list] = {}
    m = mask
    count = 0
    while m:
        low = m & -m
        eid = low.bit_length() - 1
        e = g.edges[eid]
        incident.setdefault(e.u, []).append(eid)
        incident.setdefault(e.v, []).append(eid)
        count += 1
        m ^= low
    for lst in incident.values():
        lst.sort(reverse=True)  # pop() takes lowest id first
    if start not in incident:
        raise InternalError("walk reconstruction: start vertex not on the walk")
    used = set()
    vstack = [start]
    estack: list[tuple[int, bool]] = []
    steps: list[tuple[int, bool]] = []
    while vstack:
        v = vstack[-1]
        lst = incident.get(v, [])
        while lst and lst[-1] in used:
            lst.pop()
        if lst:
            eid = lst.pop()
            used.add(eid)
            e = g.edges[eid]
            vstack.append(e.other(v))
            estack.append((eid, v == e.u))
        else:
            vstack.pop()
            if estack:
                steps.append(estack.pop())
    if len(steps) != count:
        raise InternalError("walk reconstruction left edges unused")
    steps.reverse()
    return Route(start, tuple(steps))


def solve_tw(
    inst: Instance,
    width_cap: int = DEFAULT_WIDTH_CAP,
    decompose_mode: str = "auto",
    share_budget: int = DEFAULT_SHARE_BUDGET,
    keep_run: bool = False,
) -> SolveResult:
    """Full pipeline: clamp, cycle-reduce, unify, decompose, DP, map back."""
    t0 = time.perf_counter()
    trace = TransformTrace()
    inst1, st = clamp_instance(inst)
    trace.add(st)
    inst2, st_cycle = reduce_to_cycle(inst1)
    trace.add(st_cycle)
    inst3, st_unify = unify_instance(inst2)
    trace.add(st_unify)
    anchor = inst2.s

    mode = decompose_mode
    if mode == "auto":
        mode = "exact" if inst2.graph.n <= 24 else "heuristic"
    td = decompose(inst2.graph, mode)
    td_u = lift_unified(td, inst3.graph)
    bad = validate_decomposition(inst3.graph, td_u)
    if bad:
        raise InternalError(f"lifted decomposition invalid: {bad[0].describe()}")
    ntd = make_nice(td_u)
    bad = validate_nice(inst3.graph, ntd)
    if bad:
        raise InternalError(f"nice decomposition invalid: {bad[0].describe()}")
    if ntd.width > width_cap:
        raise WidthLimitError(
            f"decomposition width {ntd.width} exceeds cap {width_cap}; "
            "try --algo linegraph or --algo oracle"
        )

    dp_waypoints = set(inst3.waypoints)
    if dp_waypoints or inst.s != inst.t:
        dp_waypoints.add(anchor)
    run = run_dp(inst3.graph, ntd, frozenset(dp_waypoints), anchor, share_budget)

    counters = dict(run.counters)
    counters["width"] = ntd.width
    counters["nice_nodes"] = len(ntd.nodes)
    counters["trace"] = trace.summary()
    root_table = run.tables[ntd.root]
    result_entry = root_table.get(EMPTY_KEY)
    counters["wall_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    if result_entry is None:
        res = SolveResult("infeasible", None, None, counters)
        if keep_run:
            res.counters["run"] = run
        return res

    walk = hierholzer_route(inst3.graph, result_entry.mask, anchor)
    if validate_route(inst3, walk):
        raise InternalError("reconstructed unified walk is invalid")
    route = trace.map_route_back(walk)
    cost = route_cost(inst, route)  # raises if the mapped route is invalid
    expect = result_entry.weight // 2 - (2 if st_cycle is not None else 0)
    if result_entry.weight % 2 != 0 or cost != expect:
        raise InternalError(
            f"cost mismatch: table weight {result_entry.weight}, route cost {cost}"
        )
    counters["wall_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    res = SolveResult("feasible", cost, route, counters)
    if keep_run:
        res.counters["run"] = run
    return res


def format_sig_line(pairs, emask_or_ids, weight: int) -> str:
    if isinstance(emask_or_ids, int):
        ids = []
        m = emask_or_ids
        while m:
            low = m & -m
            ids.append(low.bit_length() - 1)
            m ^= low
    else:
        ids = list(emask_or_ids)
    ptxt = ",".join(f"{a}-{b}" for a, b in pairs) if pairs else "-"
    etxt = ",".join(str(i) for i in ids) if ids else "-"
    return f"sig {ptxt}|{etxt} w={weight}"


def dump_tables(run: DpRun, directory):
    """One file per node with `sig <pairs>|<edges> w=<weight>` lines."""
    import os

    os.makedirs(directory, exist_ok=True)
    index = []
    for nid in sorted(run.tables):
        node = run.ntd.nodes[nid]
        lines = sorted(
            format_sig_line(pairs, emask, ent.weight)
            for (pairs, emask), ent in run.tables[nid].items()
        )
        with open(os.path.join(directory, f"node{nid}.txt"), "w") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        bag = ",".join(str(v) for v in sorted(node.bag))
        index.append(f"node {nid} kind={node.kind} bag={bag or '-'} entries={len(lines)}")
    with open(os.path.join(directory, "index.txt"), "w") as fh:
        fh.write("\n".join(index) + "\n")
