"""Line-oriented text formats for instances, routes and tree decompositions.

Instance format (one directive per line, '#' starts a comment):

    v <count>
    e <u> <v> <cap> <weight>     # edge ids assigned in order of appearance
    s <vertex>
    t <vertex>
    w <vertex>                   # repeated, one waypoint per line
    coord <vertex> <x> <y>       # optional planar hint, e.g. grid instances

Route format:

    route <start> ; <edgeid>:<+|-> <edgeid>:<+|-> ...
    cost <int>

Decomposition format:

    node <id> : <vertex> <vertex> ...
    link <a> <b>
    kind <id> leaf|forget:<v>|introduce:<v>|join   # nice decompositions only
    root <id>                                      # nice decompositions only
"""

from __future__ import annotations

import hashlib

from wrp.errors import ParseError
from wrp.model import CapacitatedGraph, Edge, Instance, Route


def _tokens(text: str):
    """Yield (line_no, tokens) for non-empty, non-comment lines."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line.split()


def _int(tok: str, line_no: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"expected integer, got {tok!r}", line_no) from None


def parse_instance(text: str) -> Instance:
    n = None
    s = None
    t = None
    edges: list[Edge] = []
    waypoints: list[int] = []
    coords: dict[int, tuple[int, int]] = {}
    for line_no, toks in _tokens(text):
        kind, args = toks[0], toks[1:]
        if kind == "v":
            if n is not None:
                raise ParseError("duplicate v line", line_no)
            if len(args) != 1:
                raise ParseError("v takes one argument", line_no)
            n = _int(args[0], line_no)
        elif kind == "e":
            if len(args) != 4:
                raise ParseError("e takes four arguments", line_no)
            u, v, cap, weight = (_int(a, line_no) for a in args)
            edges.append(Edge(len(edges), u, v, cap, weight))
        elif kind == "s":
            if len(args) != 1 or s is not None:
                raise ParseError("bad s line", line_no)
            s = _int(args[0], line_no)
        elif kind == "t":
            if len(args) != 1 or t is not None:
                raise ParseError("bad t line", line_no)
            t = _int(args[0], line_no)
        elif kind == "w":
            if len(args) != 1:
                raise ParseError("w takes one argument", line_no)
            waypoints.append(_int(args[0], line_no))
        elif kind == "coord":
            if len(args) != 3:
                raise ParseError("coord takes three arguments", line_no)
            vid, x, y = (_int(a, line_no) for a in args)
            coords[vid] = (x, y)
        else:
            raise ParseError(f"unknown directive {kind!r}", line_no)
    if n is None:
        raise ParseError("missing v line")
    if s is None or t is None:
        raise ParseError("missing s or t line")
    try:
        graph = CapacitatedGraph(n, edges)
        return Instance(graph, s, t, frozenset(waypoints), coords or None)
    except Exception as exc:
        raise ParseError(str(exc)) from exc


def format_instance(instance: Instance) -> str:
    g = instance.graph
    lines = [f"v {g.n}"]
    for e in g.edges:
        lines.append(f"e {e.u} {e.v} {e.cap} {e.weight}")
    lines.append(f"s {instance.s}")
    lines.append(f"t {instance.t}")
    for w in sorted(instance.waypoints):
        lines.append(f"w {w}")
    if instance.coords:
        for v in sorted(instance.coords):
            x, y = instance.coords[v]
            lines.append(f"coord {v} {x} {y}")
    return "\n".join(lines) + "\n"


def instance_digest(instance: Instance) -> str:
    """Stable short hash of the canonical serialization."""
    blob = format_instance(instance).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def parse_route(text: str) -> tuple[Route, int | None]:
    """Parse a route file; returns (route, declared_cost_or_None)."""
    route = None
    cost = None
    for line_no, toks in _tokens(text):
        if toks[0] == "route":
            if route is not None:
                raise ParseError("duplicate route line", line_no)
            if len(toks) < 3 or toks[2] != ";":
                raise ParseError("route line must be: route <start> ; steps...", line_no)
            start = _int(toks[1], line_no)
            steps = []
            for tok in toks[3:]:
                if ":" not in tok:
                    raise ParseError(f"bad step {tok!r}", line_no)
                eid_s, dir_s = tok.rsplit(":", 1)
                if dir_s not in ("+", "-"):
                    raise ParseError(f"bad direction in step {tok!r}", line_no)
                steps.append((_int(eid_s, line_no), dir_s == "+"))
            route = Route(start, tuple(steps))
        elif toks[0] == "cost":
            if len(toks) != 2:
                raise ParseError("cost takes one argument", line_no)
            cost = _int(toks[1], line_no)
        else:
            raise ParseError(f"unknown directive {toks[0]!r}", line_no)
    if route is None:
        raise ParseError("missing route line")
    return route, cost


def format_route(route: Route, cost: int | None = None) -> str:
    steps = " ".join(f"{eid}:{'+' if fwd else '-'}" for eid, fwd in route.steps)
    line = f"route {route.start} ;"
    if steps:
        line += " " + steps
    out = line + "\n"
    if cost is not None:
        out += f"cost {cost}\n"
    return out


def parse_decomposition(text: str):
    """Parse a (possibly nice) decomposition into a plain dict bundle.

    Returns {"bags": {id: frozenset}, "links": [(a, b)], "kinds": {id: str},
    "root": id_or_None}.  Structural validation lives in wrp.treewidth.
    """
    bags: dict[int, frozenset[int]] = {}
    links: list[tuple[int, int]] = []
    kinds: dict[int, str] = {}
    root = None
    for line_no, toks in _tokens(text):
        kind, args = toks[0], toks[1:]
        if kind == "node":
            if len(args) < 2 or args[1] != ":":
                raise ParseError("node line must be: node <id> : vertices...", line_no)
            nid = _int(args[0], line_no)
            if nid in bags:
                raise ParseError(f"duplicate node {nid}", line_no)
            bags[nid] = frozenset(_int(a, line_no) for a in args[2:])
        elif kind == "link":
            if len(args) != 2:
                raise ParseError("link takes two arguments", line_no)
            links.append((_int(args[0], line_no), _int(args[1], line_no)))
        elif kind == "kind":
            if len(args) != 2:
                raise ParseError("kind takes two arguments", line_no)
            nid = _int(args[0], line_no)
            label = args[1]
            base = label.split(":", 1)[0]
            if base not in ("leaf", "forget", "introduce", "join"):
                raise ParseError(f"unknown node kind {label!r}", line_no)
            kinds[nid] = label
        elif kind == "root":
            if len(args) != 1 or root is not None:
                raise ParseError("bad root line", line_no)
            root = _int(args[0], line_no)
        else:
            raise ParseError(f"unknown directive {kind!r}", line_no)
    if not bags:
        raise ParseError("decomposition has no node lines")
    return {"bags": bags, "links": links, "kinds": kinds, "root": root}


def format_decomposition(bags, links, kinds=None, root=None) -> str:
    lines = []
    for nid in sorted(bags):
        verts = " ".join(str(v) for v in sorted(bags[nid]))
        lines.append(f"node {nid} :" + (f" {verts}" if verts else ""))
    for a, b in sorted(links):
        lines.append(f"link {a} {b}")
    if kinds:
        for nid in sorted(kinds):
            lines.append(f"kind {nid} {kinds[nid]}")
    if root is not None:
        lines.append(f"root {root}")
    return "\n".join(lines) + "\n"
