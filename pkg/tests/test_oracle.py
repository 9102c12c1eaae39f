"""Brute-force reference solver."""

import random

import pytest

from helpers import naive_min_walk, rand_instance, route_is_valid
from wrp.errors import ResourceLimitError
from wrp.instances import canonical
from wrp.model import CapacitatedGraph, Edge, Instance
from wrp.oracle import brute_force_solve


def triangle():
    return CapacitatedGraph(3, [Edge(0, 0, 1, 1, 1), Edge(1, 1, 2, 1, 1), Edge(2, 0, 2, 1, 1)])


def test_triangle_closed_tour_costs_three():
    # s = t with one waypoint on a unit-capacity triangle: the walk cannot
    # bounce on one edge, it must go around
    res = brute_force_solve(Instance(triangle(), 0, 0, frozenset({1})))
    assert res.status == "feasible" and res.cost == 3


def test_unit_bridge_infeasible():
    g = CapacitatedGraph(2, [Edge(0, 0, 1, 1, 1)])
    res = brute_force_solve(Instance(g, 0, 0, frozenset({1})))
    assert res.status == "infeasible"
    assert res.cost is None and res.route is None


def test_empty_task_zero_cost():
    res = brute_force_solve(Instance(triangle(), 2, 2))
    assert res.cost == 0 and res.route.steps == ()


def test_fig1_instances():
    assert brute_force_solve(canonical("fig1-left")).cost == 7
    assert brute_force_solve(canonical("fig1-right")).cost == 6


def test_state_budget_error():
    with pytest.raises(ResourceLimitError, match="budget"):
        brute_force_solve(canonical("fig1-left"), state_budget=3)


def test_returned_routes_are_valid():
    rng = random.Random(60)
    for _ in range(30):
        inst = rand_instance(rng, n_max=7, m_max=11)
        res = brute_force_solve(inst)
        if res.status == "feasible":
            assert route_is_valid(inst, res.route)


def test_matches_naive_enumeration():
    rng = random.Random(61)
    for _ in range(50):
        inst = rand_instance(rng, n_max=5, m_max=7, k_max=2)
        res = brute_force_solve(inst)
        naive = naive_min_walk(inst)
        assert (res.cost if res.status == "feasible" else None) == naive


def test_deterministic_route_choice():
    inst = canonical("fig1-left")
    a = brute_force_solve(inst)
    b = brute_force_solve(inst)
    assert a.route == b.route and a.cost == b.cost


def test_counters_report_search_size():
    res = brute_force_solve(canonical("fig1-left"))
    assert res.counters["states_expanded"] > 0
    assert res.counters["states_pushed"] >= res.counters["states_expanded"]
