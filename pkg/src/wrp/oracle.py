"""Brute-force reference solver: uniform-cost search over residual states.

The state space is (current vertex, remaining capacity per edge, set of
waypoints already visited).  Capacities above 2 are treated as 2; a minimum
walk never needs an edge more than twice, so the optimum is unchanged.
Intended for small instances (roughly n <= 8) and as the ground truth the
other backends are tested against.
"""

from __future__ import annotations

import heapq
from itertools import count

from wrp.errors import ResourceLimitError
from wrp.model import Instance, Route, SolveResult

DEFAULT_STATE_BUDGET = 5_000_000


def _dominated(entries, caps, cost) -> bool:
    for ocaps, ocost in entries:
        if ocost <= cost and all(a >= b for a, b in zip(ocaps, caps)):
            return True
    return False


def brute_force_solve(instance: Instance, state_budget: int | None = DEFAULT_STATE_BUDGET) -> SolveResult:
    """Exact minimum-cost route by exhaustive best-first search.

    Raises ResourceLimitError when more than state_budget states get
    expanded; exhausting the space without reaching the goal means the
    instance is infeasible.
    """
    g = instance.graph
    wp_index = {w: i for i, w in enumerate(sorted(instance.waypoints))}
    full_mask = (1 << len(wp_index)) - 1
    start_caps = tuple(min(e.cap, 2) for e in g.edges)
    weights = [e.weight for e in g.edges]

    start = (instance.s, start_caps, 0)
    seq = count()
    heap = [(0, next(seq), start)]
    # pareto[(v, mask)] holds non-dominated (caps, cost) pairs
    pareto = {(instance.s, 0): [(start_caps, 0)]}
    parent: dict = {start: None}
    expanded = 0
    pushed = 1

    while heap:
        cost, _, state = heapq.heappop(heap)
        v, caps, mask = state
        entries = pareto.get((v, mask), ())
        if (caps, cost) not in entries:
            continue  # superseded after push
        if v == instance.t and mask == full_mask:
            steps = []
            cur = state
            while parent[cur] is not None:
                prev, eid, fwd = parent[cur]
                steps.append((eid, fwd))
                cur = prev
            steps.reverse()
            route = Route(instance.s, tuple(steps))
            return SolveResult(
                "feasible",
                cost,
                route,
                {"states_expanded": expanded, "states_pushed": pushed},
            )
        expanded += 1
        if state_budget is not None and expanded > state_budget:
            raise ResourceLimitError(f"oracle state budget {state_budget} exhausted")
        for eid in g.incident(v):
            if caps[eid] == 0:
                continue
            e = g.edges[eid]
            w = e.other(v)
            ncaps = caps[:eid] + (caps[eid] - 1,) + caps[eid + 1 :]
            nmask = mask | (1 << wp_index[w]) if w in wp_index else mask
            ncost = cost + weights[eid]
            cell = pareto.setdefault((w, nmask), [])
            if _dominated(cell, ncaps, ncost):
                continue
            cell[:] = [
                (ocaps, ocost)
                for ocaps, ocost in cell
                if not (ncost <= ocost and all(a >= b for a, b in zip(ncaps, ocaps)))
            ]
            cell.append((ncaps, ncost))
            nstate = (w, ncaps, nmask)
            parent[nstate] = (state, eid, v == e.u)
            heapq.heappush(heap, (ncost, next(seq), nstate))
            pushed += 1

    return SolveResult(
        "infeasible", None, None, {"states_expanded": expanded, "states_pushed": pushed}
    )
