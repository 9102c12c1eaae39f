"""Text formats: instances, routes, decompositions, digests."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import rand_instance
from wrp.errors import ParseError, ValidationError
from wrp.instances import canonical, grid_base
from wrp.model import Route
from wrp.textio import (
    format_decomposition,
    format_instance,
    format_route,
    instance_digest,
    parse_decomposition,
    parse_instance,
    parse_route,
)

SAMPLE = """\
# comment line
v 3
e 0 1 1 2   # trailing comment
e 1 2 2 3

s 0
t 2
w 1
"""


class TestInstanceFormat:
    def test_parse_sample(self):
        inst = parse_instance(SAMPLE)
        assert inst.graph.n == 3 and inst.graph.m == 2
        assert inst.graph.edges[1].cap == 2 and inst.graph.edges[1].weight == 3
        assert (inst.s, inst.t) == (0, 2)
        assert inst.waypoints == frozenset({1})

    def test_round_trip_fixpoint(self):
        rng = random.Random(3)
        for _ in range(30):
            inst = rand_instance(rng)
            text = format_instance(inst)
            assert format_instance(parse_instance(text)) == text

    def test_coords_round_trip(self):
        inst = grid_base(3, 0)
        text = format_instance(inst)
        again = parse_instance(text)
        assert again.coords == inst.coords
        assert "coord 0 0 0" in text

    def test_missing_terminal_rejected(self):
        with pytest.raises(ParseError, match="s"):
            parse_instance("v 2\ne 0 1 1 1\nt 1\n")

    def test_bad_integer_has_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_instance("v 2\ne 0 x 1 1\ns 0\nt 1\n")

    def test_unknown_directive_rejected(self):
        with pytest.raises(ParseError):
            parse_instance("v 2\ne 0 1 1 1\nq 3\ns 0\nt 1\n")

    def test_disconnected_is_load_error(self):
        with pytest.raises(ParseError, match="connected"):
            parse_instance("v 3\ne 0 1 1 1\ns 0\nt 1\n")

    def test_digest_frozen_for_canonical_instances(self):
        assert instance_digest(canonical("fig1-left")) == "a84a7c0dd74c"
        assert instance_digest(canonical("fig1-right")) == "51f96fa03314"

    def test_digest_tracks_content(self):
        a = parse_instance(SAMPLE)
        b = parse_instance(SAMPLE.replace("w 1", ""))
        assert instance_digest(a) != instance_digest(b)


class TestRouteFormat:
    def test_round_trip(self):
        r = Route(0, ((4, True), (5, True), (2, False)))
        text = format_route(r, 7)
        back, cost = parse_route(text)
        assert back == r and cost == 7

    def test_cost_line_optional(self):
        back, cost = parse_route("route 3 ; 1:+ 0:-\n")
        assert back == Route(3, ((1, True), (0, False)))
        assert cost is None

    def test_empty_route(self):
        back, cost = parse_route(format_route(Route(5, ()), 0))
        assert back == Route(5, ()) and cost == 0

    def test_bad_direction_rejected(self):
        with pytest.raises(ParseError):
            parse_route("route 0 ; 1:x\n")

    @given(
        st.integers(0, 50),
        st.lists(st.tuples(st.integers(0, 99), st.booleans()), max_size=12),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, start, steps):
        r = Route(start, tuple(steps))
        back, _ = parse_route(format_route(r))
        assert back == r


class TestDecompositionFormat:
    def test_plain_round_trip(self):
        bags = {0: frozenset({0, 1}), 1: frozenset({1, 2})}
        links = [(0, 1)]
        text = format_decomposition(bags, links)
        got = parse_decomposition(text)
        assert got["bags"] == bags and list(got["links"]) == links
        assert not got["kinds"] and got["root"] is None

    def test_nice_round_trip(self):
        bags = {0: frozenset(), 1: frozenset({4})}
        links = [(0, 1)]
        kinds = {0: "forget:4", 1: "leaf"}
        text = format_decomposition(bags, links, kinds=kinds, root=0)
        got = parse_decomposition(text)
        assert got["bags"] == bags and got["kinds"] == kinds and got["root"] == 0

    def test_bad_kind_rejected(self):
        with pytest.raises(ParseError):
            parse_decomposition("node 0 : 1\nkind 0 wiggle\n")
