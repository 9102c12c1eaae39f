"""Signature machinery for the decomposition DP.

A signature is (pairs, edges): an unordered multiset of unordered endpoint
pairs over the bag, plus the subset of bag-internal edges the sub-solution
uses.  The distinguished EMPTY signature is ((), ()); a nonempty edge subset
with no pairs is not a signature.  Canonical form: each pair (min, max),
pairs sorted, edge ids sorted.
"""

from __future__ import annotations

from itertools import combinations, combinations_with_replacement

from wrp.errors import WidthLimitError

EMPTY_PAIRS: tuple = ()


def canon_pairs(pairs) -> tuple:
    return tuple(sorted((a, b) if a <= b else (b, a) for a, b in pairs))


def pairs_stats(pairs) -> tuple[int, int]:
    """(number of pairs, number of distinct endpoint vertices)."""
    verts = set()
    for a, b in pairs:
        verts.add(a)
        verts.add(b)
    return len(pairs), len(verts)


def pairs_ok(pairs, bag_size: int) -> bool:
    """Condition on the endpoint shape: at most |bag| pairs and at least as
    many distinct endpoint vertices as pairs."""
    ell, beta = pairs_stats(pairs)
    if ell == 0:
        return True
    return ell <= bag_size and beta >= ell


def enumerate_pair_multisets(bag, max_pairs: int | None = None):
    """All canonical nonempty pair multisets over the bag with beta >= ell."""
    verts = sorted(bag)
    limit = len(verts) if max_pairs is None else min(max_pairs, len(verts))
    universe = [(a, b) for i, a in enumerate(verts) for b in verts[i:]]
    out = []
    for r in range(1, limit + 1):
        for combo in combinations_with_replacement(universe, r):
            if pairs_ok(combo, len(verts)):
                out.append(tuple(combo))
    return out


def enumerate_signatures(bag, bag_edge_ids, width_limit: int = 8):
    """Every canonical signature over the bag, EMPTY included.

    Raises WidthLimitError when the bag exceeds width_limit + 1 vertices;
    the count grows like 2^O(|bag|^2) and is only meant for desk scale.
    """
    if len(bag) > width_limit + 1:
        raise WidthLimitError(
            f"bag of size {len(bag)} exceeds width limit {width_limit}"
        )
    eids = sorted(bag_edge_ids)
    subsets = [()]
    for r in range(1, len(eids) + 1):
        subsets.extend(combinations(eids, r))
    out = [(EMPTY_PAIRS, ())]
    for pairs in enumerate_pair_multisets(bag):
        for es in subsets:
            out.append((pairs, es))
    return out
