"""Exact routing through mandatory waypoints on capacitated undirected graphs.

The package solves the following problem: given a connected undirected graph
with positive integer edge capacities and non-negative integer edge weights,
two (not necessarily distinct) terminals s and t, and a set of waypoint
vertices, find a minimum-weight walk from s to t that visits every waypoint
and traverses no edge more often than its capacity.

Three independent solving routes are provided:

* ``wrp.dpsolve``    dynamic programming over a nice tree decomposition,
* ``wrp.linegraph``  reduction to shortest vertex-disjoint cycle search,
* ``wrp.oracle``     brute-force uniform-cost search (small instances only).
"""

from wrp.errors import (
    BackendUnavailableError,
    InvalidRouteError,
    ParseError,
    ResourceLimitError,
    ValidationError,
    WidthLimitError,
    WrpError,
)
from wrp.model import CapacitatedGraph, Edge, Instance, Route, route_cost, validate_route

__all__ = [
    "BackendUnavailableError",
    "CapacitatedGraph",
    "Edge",
    "Instance",
    "InvalidRouteError",
    "ParseError",
    "ResourceLimitError",
    "Route",
    "ValidationError",
    "WidthLimitError",
    "WrpError",
    "route_cost",
    "validate_route",
]

__version__ = "0.1.0"
