"""Unit expansion, the crossing-gadget graph, route/path mapping, and the
cycle-search solver built on them."""

import random
from collections import Counter

import pytest

from helpers import rand_instance, route_is_valid
from wrp.errors import (
    BackendUnavailableError,
    ResourceLimitError,
    ValidationError,
)
from wrp.instances import canonical
from wrp.linegraph import (
    ExhaustiveKCycleBackend,
    build_waypoint_line_graph,
    map_path_to_route,
    map_route_to_path,
    normalize_instance,
    normalize_simple_unit,
    solve_via_kcycle,
)
from wrp.model import CapacitatedGraph, Edge, Instance, Route, route_cost
from wrp.oracle import brute_force_solve


def k2(cap=1, weight=1):
    return CapacitatedGraph(2, [Edge(0, 0, 1, cap, weight)])


class TestNormalize:
    def test_cap2_unit_weight_edge(self):
        g2, trace = normalize_simple_unit(k2(cap=2, weight=1))
        assert g2.n == 4 and g2.m == 4
        assert all(e.cap == 1 and e.weight == 1 for e in g2.edges)

    def test_cap1_weight3_edge(self):
        g2, _ = normalize_simple_unit(k2(cap=1, weight=3))
        assert g2.n == 7 and g2.m == 6

    def test_zero_weight_rejected(self):
        with pytest.raises(ValidationError, match="weight 0"):
            normalize_simple_unit(k2(weight=0))

    def test_size_bounds(self):
        rng = random.Random(8)
        for _ in range(40):
            inst = rand_instance(rng, n_max=7, m_max=10)
            g = inst.graph
            g2, _ = normalize_simple_unit(g)
            f = max(e.weight for e in g.edges)
            assert g2.n <= g.n + 4 * g.m * f
            assert g2.m <= g.n + 4 * g.m * f

    def test_route_maps_forward_and_back(self):
        g = k2(cap=2, weight=2)
        inst = Instance(g, 0, 0, frozenset({1}))
        norm, trace = normalize_instance(inst)
        res = brute_force_solve(norm)
        back = trace.map_route_back(res.route)
        assert route_is_valid(inst, back)
        fwd = trace.steps[0].map_route_forward(Route(0, ((0, True), (0, False))))
        assert route_is_valid(norm, fwd)

    def test_capacity_excess_rejected_on_forward_map(self):
        g = k2(cap=1, weight=1)
        inst = Instance(g, 0, 0)
        _, trace = normalize_instance(inst)
        with pytest.raises(ValidationError, match="beyond its capacity"):
            trace.steps[0].map_route_forward(Route(0, ((0, True), (0, False))))


class TestBuild:
    def test_isolated_edge(self):
        g = k2()
        lg = build_waypoint_line_graph(g, 0, 0)
        assert lg.graph.n == 6 and lg.graph.m == 5
        kinds = Counter(p.kind for p in lg.prov)
        assert kinds == {"hub": 2, "port": 2, "epath": 2}

    def test_degree_three_vertex_becomes_subdivided_clique(self):
        # star with a degree-3 center: hub + 3 ports and all 3 port pairs
        # joined through rim vertices
        g = CapacitatedGraph(
            4, [Edge(0, 0, 1, 1, 1), Edge(1, 0, 2, 1, 1), Edge(2, 0, 3, 1, 1)]
        )
        lg = build_waypoint_line_graph(g, 1, 1)
        kinds = Counter(p.kind for p in lg.prov)
        assert kinds == {"hub": 4, "port": 6, "rim": 3, "epath": 6}
        assert lg.graph.degree(lg.hub[0]) == 3

    def test_hub_degree_matches_vertex_degree(self):
        g = canonical("fig1-right").graph
        lg = build_waypoint_line_graph(g, 0, 0)
        for v in range(g.n):
            assert lg.graph.degree(lg.hub[v]) == g.degree(v)

    def test_one_provenance_tag_per_vertex(self):
        g = canonical("fig1-right").graph
        lg = build_waypoint_line_graph(g, 0, 4, waypoints=(1, 2))
        assert len(lg.prov) == lg.graph.n
        lines = lg.prov_lines()
        assert lines[0].startswith("prov 0 ")
        assert len(lines) == lg.graph.n

    def test_requires_normalized_input(self):
        with pytest.raises(ValidationError, match="unit"):
            build_waypoint_line_graph(k2(cap=2), 0, 0)
        parallel = CapacitatedGraph(2, [Edge(0, 0, 1, 1, 1), Edge(1, 0, 1, 1, 1)])
        with pytest.raises(ValidationError, match="simple"):
            build_waypoint_line_graph(parallel, 0, 0)

    def test_size_bound_on_randoms(self):
        rng = random.Random(14)
        for _ in range(30):
            inst = rand_instance(rng, n_max=6, m_max=9)
            g = inst.graph
            norm, _ = normalize_simple_unit(g)
            lg = build_waypoint_line_graph(norm, 0, 0)
            f = max(e.weight for e in g.edges)
            bound = 199 * g.n**4 * f * f
            assert lg.graph.n <= bound and lg.graph.m <= bound


class TestMapping:
    def fig1_right_cycle(self):
        # fig1-right with s = t = 0 and the old terminals as waypoints is
        # already unit/simple: expansion applies directly
        inst = canonical("fig1-right")
        return inst

    def test_route_to_path_five_times_length(self):
        inst = self.fig1_right_cycle()
        g = inst.graph
        lg = build_waypoint_line_graph(g, 0, 0, waypoints=(1, 2, 3, 4))
        # closed optimal tour: out along the top, back along the bottom
        route = brute_force_solve(Instance(g, 0, 0, frozenset({1, 2, 3, 4}))).route
        path = map_route_to_path(lg, route)
        assert len(path) - 1 == 5 * len(route.steps)
        assert path[0] == lg.s_hub and path[-1] == lg.s_hub
        # vertex-disjoint apart from the closing hub
        assert len(set(path[:-1])) == len(path) - 1

    def test_path_to_route_round_trip(self):
        inst = self.fig1_right_cycle()
        g = inst.graph
        lg = build_waypoint_line_graph(g, 0, 0, waypoints=(1, 2, 3, 4))
        route = brute_force_solve(Instance(g, 0, 0, frozenset({1, 2, 3, 4}))).route
        path = map_route_to_path(lg, route)
        back = map_path_to_route(lg, path)
        assert back == route

    def test_empty_route_round_trip(self):
        g = canonical("fig1-right").graph
        lg = build_waypoint_line_graph(g, 0, 0)
        path = map_route_to_path(lg, Route(0, ()))
        assert path == (lg.s_hub,)
        assert map_path_to_route(lg, path) == Route(0, ())

    def test_round_trip_on_randoms(self):
        rng = random.Random(17)
        done = 0
        while done < 30:
            inst = rand_instance(rng, n_max=6, m_max=9, k_max=3)
            norm, _ = normalize_instance(Instance(inst.graph, inst.s, inst.s, inst.waypoints))
            res = brute_force_solve(norm)
            if res.status != "feasible":
                continue
            lg = build_waypoint_line_graph(
                norm.graph, norm.s, norm.s, tuple(norm.waypoints)
            )
            path = map_route_to_path(lg, res.route)
            assert len(path) - 1 == 5 * len(res.route.steps)
            assert map_path_to_route(lg, path) == res.route
            done += 1

    def test_unvisited_waypoint_rejected(self):
        g = canonical("fig1-right").graph
        lg = build_waypoint_line_graph(g, 0, 0, waypoints=(1,))
        with pytest.raises(ValidationError, match="waypoint"):
            map_route_to_path(lg, Route(0, ()))

    def test_foreign_path_rejected(self):
        g = canonical("fig1-right").graph
        lg = build_waypoint_line_graph(g, 0, 0)
        with pytest.raises(ValidationError):
            map_path_to_route(lg, (lg.s_hub, lg.s_hub + 1, lg.s_hub))


class TestSolve:
    def test_fig1_left(self):
        inst = canonical("fig1-left")
        res = solve_via_kcycle(inst)
        assert res.status == "feasible" and res.cost == 7
        assert route_is_valid(inst, res.route)
        assert route_cost(inst, res.route) == 7

    def test_fig1_right(self):
        res = solve_via_kcycle(canonical("fig1-right"))
        assert res.cost == 6

    def test_trivial_closed_instance(self):
        g = canonical("fig1-right").graph
        res = solve_via_kcycle(Instance(g, 0, 0))
        assert res.cost == 0 and res.route.steps == ()

    def test_matches_oracle_on_randoms(self):
        rng = random.Random(19)
        for _ in range(60):
            inst = rand_instance(rng, n_max=7, m_max=11, k_max=3)
            a = solve_via_kcycle(inst)
            b = brute_force_solve(inst)
            assert a.status == b.status
            assert a.cost == b.cost
            if a.status == "feasible":
                assert route_is_valid(inst, a.route)

    def test_waypoint_limit_error(self):
        inst = canonical("fig1-left")
        backend = ExhaustiveKCycleBackend(max_k=1)
        with pytest.raises(ResourceLimitError, match="backend limit 1"):
            solve_via_kcycle(inst, backend)

    def test_node_budget_error(self):
        inst = canonical("fig1-left")
        backend = ExhaustiveKCycleBackend(node_budget=2)
        with pytest.raises(ResourceLimitError, match="node budget"):
            solve_via_kcycle(inst, backend)

    def test_feasibility_mode_names_missing_backend(self):
        with pytest.raises(BackendUnavailableError, match="feasibility"):
            solve_via_kcycle(canonical("fig1-left"), feasible_only=True)

    def test_deterministic(self):
        a = solve_via_kcycle(canonical("fig1-left"))
        b = solve_via_kcycle(canonical("fig1-left"))
        assert a.route == b.route and a.counters == b.counters

    def test_counters_present(self):
        res = solve_via_kcycle(canonical("fig1-left"))
        for key in ("expansion_vertices", "expansion_edges", "nodes", "cycle_length", "trace"):
            assert key in res.counters
