"""Command-line front end: solve, verify, decompose, gen, bench.

Reports are line-oriented text on stdout.  Everything printed on stdout is
deterministic for a fixed invocation and seed; measured wall-clock times go
to stderr (solve/verify) or into the bench CSV, where they are inherently
run-dependent.  Exit codes: 0 success (including a clean "infeasible"
answer), 1 failed verification, 2 parse/usage error, 3 resource or backend
limit.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from .dpsolve import DEFAULT_SHARE_BUDGET, DEFAULT_WIDTH_CAP, dump_tables, solve_tw
from .errors import (
    BackendUnavailableError,
    InvalidRouteError,
    ParseError,
    ResourceLimitError,
    ValidationError,
)
from .instances import (
    canonical,
    cycle_graph,
    gen_bipartite_trees_gadget,
    gen_grid_tail,
    gen_partial_ktree,
    grid_base,
    ham_encode,
)
from .linegraph import (
    DEFAULT_MAX_K,
    DEFAULT_NODE_BUDGET,
    ExhaustiveKCycleBackend,
    solve_via_kcycle,
)
from .model import Instance, route_cost, validate_route
from .oracle import DEFAULT_STATE_BUDGET, brute_force_solve
from .textio import (
    format_decomposition,
    format_instance,
    format_route,
    instance_digest,
    parse_instance,
    parse_route,
)
from .treewidth import decompose, make_nice

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_LIMIT = 3

ALGOS = ("auto", "tw", "linegraph", "oracle")
FAMILIES = (
    "fig1-left",
    "fig1-right",
    "partial-ktree",
    "grid-deg3-tail",
    "bipartite-3reg-trees",
    "ham-encode",
)
ORACLE_MAX_N = 8


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load_instance(path: str) -> Instance:
    return parse_instance(_read_text(path))


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _graph_text(g) -> str:
    """Bare graph in the instance text format (no terminals/waypoints)."""
    lines = [f"v {g.n}"]
    for e in g.edges:
        lines.append(f"e {e.u} {e.v} {e.cap} {e.weight}")
    return "\n".join(lines) + "\n"


def _pick_algo(inst: Instance, args) -> str:
    """auto dispatch: small -> oracle, low width -> tw, few waypoints ->
    cycle backend, otherwise fail with guidance."""
    if inst.graph.n <= ORACLE_MAX_N:
        return "oracle"
    width_cap = args.width_cap if args.width_cap is not None else DEFAULT_WIDTH_CAP
    est = decompose(inst.graph, mode="heuristic").width
    if est <= width_cap:
        return "tw"
    max_k = args.max_k if args.max_k is not None else DEFAULT_MAX_K
    if len(inst.waypoints) <= max_k:
        return "linegraph"
    raise ResourceLimitError(
        f"no backend fits: {inst.graph.n} vertices exceed the oracle range, "
        f"heuristic width {est} exceeds cap {width_cap}, and "
        f"{len(inst.waypoints)} waypoints exceed the cycle backend limit "
        f"{max_k}; raise --width-cap or --max-k"
    )


def _run_algo(inst: Instance, algo: str, args):
    """Returns (SolveResult, resolved algo name)."""
    if algo == "auto":
        algo = _pick_algo(inst, args)
    dump_dir = getattr(args, "dump_tables", None)
    if algo == "oracle":
        budget = args.state_budget or DEFAULT_STATE_BUDGET
        return brute_force_solve(inst, state_budget=budget), algo
    if algo == "tw":
        res = solve_tw(
            inst,
            width_cap=args.width_cap if args.width_cap is not None else DEFAULT_WIDTH_CAP,
            share_budget=args.state_budget or DEFAULT_SHARE_BUDGET,
            keep_run=bool(dump_dir),
        )
        return res, algo
    if algo == "linegraph":
        backend = ExhaustiveKCycleBackend(
            max_k=args.max_k if args.max_k is not None else DEFAULT_MAX_K,
            node_budget=args.state_budget or DEFAULT_NODE_BUDGET,
        )
        res = solve_via_kcycle(inst, backend, keep_expansion=bool(dump_dir))
        return res, algo
    raise ValidationError(f"unknown algorithm {algo!r}")


def _dump_solver_state(res, algo: str, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    run = res.counters.pop("run", None)
    lg = res.counters.pop("expansion", None)
    if algo == "tw" and run is not None:
        dump_tables(run, directory)
    elif algo == "linegraph" and lg is not None:
        _write_text(os.path.join(directory, "lr_graph.txt"), _graph_text(lg.graph))
        _write_text(
            os.path.join(directory, "lr_prov.txt"),
            "\n".join(lg.prov_lines()) + "\n",
        )
    else:
        print(f"note: nothing to dump for --algo {algo}", file=sys.stderr)


def _counters_line(counters: dict) -> str:
    skip = {"run", "expansion", "trace", "wall_ms"}
    parts = [f"{k}={counters[k]}" for k in sorted(counters) if k not in skip]
    return " ".join(parts)


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    t0 = time.perf_counter()
    res, algo = _run_algo(inst, args.algo, args)
    wall_ms = round((time.perf_counter() - t0) * 1000, 3)
    if args.dump_tables:
        _dump_solver_state(res, algo, args.dump_tables)

    lines = [f"instance {instance_digest(inst)}", f"algo {algo}", f"status {res.status}"]
    if res.status == "feasible":
        lines.append(format_route(res.route, res.cost).rstrip("\n"))
    trace = res.counters.get("trace", "none scale=1")
    lines.append(f"trace {trace}")
    cline = _counters_line(res.counters)
    if cline:
        lines.append(f"counters {cline}")
    print("\n".join(lines))
    print(f"time_ms {wall_ms}", file=sys.stderr)

    if args.route_out and res.status == "feasible":
        _write_text(args.route_out, format_route(res.route, res.cost))
    if args.report_json:
        payload = {
            "instance": instance_digest(inst),
            "algo": algo,
            "status": res.status,
            "cost": res.cost,
            "route": format_route(res.route).strip() if res.route is not None else None,
            "counters": {
                k: v
                for k, v in res.counters.items()
                if k not in ("run", "expansion")
            },
            "time_ms": wall_ms,
        }
        _write_text(args.report_json, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    route, claimed = parse_route(_read_text(args.route))
    violations = validate_route(inst, route)
    if violations:
        for v in violations:
            print(v.describe())
        return EXIT_INVALID
    cost = route_cost(inst, route)
    if claimed is not None and claimed != cost:
        print(f"cost-mismatch: route file claims {claimed}, actual cost is {cost}")
        return EXIT_INVALID
    print(f"valid cost {cost}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    inst = _load_instance(args.instance)
    td = decompose(inst.graph, mode=args.mode)
    if args.nice:
        ntd = make_nice(td)
        bags = {nid: node.bag for nid, node in ntd.nodes.items()}
        links = sorted(
            (nid, c) for nid, node in ntd.nodes.items() for c in node.children
        )
        kinds = {}
        for nid, node in ntd.nodes.items():
            if node.kind in ("introduce", "forget"):
                kinds[nid] = f"{node.kind}:{node.vertex}"
            else:
                kinds[nid] = node.kind
        text = format_decomposition(bags, links, kinds=kinds, root=ntd.root)
        width = ntd.width
    else:
        text = format_decomposition(td.bags, td.links)
        width = td.width
    out = f"# width {width}\n{text}"
    if args.output:
        _write_text(args.output, out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def _generate(family: str, seed: int, n=None, k=None, r=None, keep_prob=0.85, edge=0):
    if family in ("fig1-left", "fig1-right"):
        return canonical(family)
    if family == "partial-ktree":
        return gen_partial_ktree(n or 8, k if k is not None else 2, keep_prob, seed)
    if family == "grid-deg3-tail":
        base = grid_base(n or 4, seed)
        return gen_grid_tail(base, r if r is not None else 1)
    if family == "bipartite-3reg-trees":
        base = ham_encode(cycle_graph(n or 6))
        return gen_bipartite_trees_gadget(base, edge, r if r is not None else 2)
    if family == "ham-encode":
        return ham_encode(cycle_graph(n or 6))
    raise ValidationError(f"unknown family {family!r}")


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else 0
    inst = _generate(
        args.family,
        seed,
        n=args.n,
        k=args.k,
        r=args.r,
        keep_prob=args.keep_prob,
        edge=args.edge,
    )
    text = format_instance(inst)
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_bench_spec(text: str):
    """One row per line: <family> <algo[,algo...]> [key=value ...].

    Keys: n k r seed edge (ints), keep-prob (float).  '#' starts a comment.
    """
    rows = []
    for lno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError("expected '<family> <algos> [key=value ...]'", lno)
        family, algostr = parts[0], parts[1]
        if family not in FAMILIES:
            raise ParseError(f"unknown family {family!r}", lno)
        algos = algostr.split(",")
        for a in algos:
            if a not in ("tw", "linegraph", "oracle"):
                raise ParseError(f"unknown algorithm {a!r}", lno)
        params = {}
        for tok in parts[2:]:
            if "=" not in tok:
                raise ParseError(f"expected key=value, got {tok!r}", lno)
            key, val = tok.split("=", 1)
            if key == "keep-prob":
                params["keep_prob"] = float(val)
            elif key in ("n", "k", "r", "seed", "edge"):
                params[key] = int(val)
            else:
                raise ParseError(f"unknown parameter {key!r}", lno)
        rows.append((family, algos, params))
    if not rows:
        raise ParseError("bench spec contains no rows")
    return rows


def _render_bench_figure(results, fig_path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for row in results:
        if row["status"] not in ("feasible", "infeasible"):
            continue
        series.setdefault((row["family"], row["algo"]), []).append(
            (row["n"], row["ms"])
        )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (family, algo), pts in sorted(series.items()):
        pts.sort()
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            marker="o",
            label=f"{family}/{algo}",
        )
    ax.set_xlabel("instance size (vertices)")
    ax.set_ylabel("wall time (ms)")
    ax.set_title("solver wall time by instance size")
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)


def cmd_bench(args) -> int:
    rows = _parse_bench_spec(_read_text(args.specfile))
    seed_default = args.seed if args.seed is not None else 0
    results = []
    for idx, (family, algos, params) in enumerate(rows):
        seed = params.get("seed", seed_default)
        inst = _generate(
            family,
            seed,
            n=params.get("n"),
            k=params.get("k"),
            r=params.get("r"),
            keep_prob=params.get("keep_prob", 0.85),
            edge=params.get("edge", 0),
        )
        costs = {}
        for algo in algos:
            rec = {
                "row": idx,
                "family": family,
                "n": inst.graph.n,
                "m": inst.graph.m,
                "waypoints": len(inst.waypoints),
                "seed": seed,
                "algo": algo,
            }
            if algo == "oracle" and inst.graph.n > ORACLE_MAX_N:
                rec.update(status="skipped", cost="", ms="")
                results.append(rec)
                continue
            t0 = time.perf_counter()
            try:
                res, _ = _run_algo(inst, algo, args)
            except (ResourceLimitError, BackendUnavailableError) as exc:
                rec.update(status="limit", cost="", ms="")
                print(f"row {idx} {algo}: {exc}", file=sys.stderr)
                results.append(rec)
                continue
            ms = round((time.perf_counter() - t0) * 1000, 2)
            cost = res.cost if res.status == "feasible" else ""
            rec.update(status=res.status, cost=cost, ms=ms)
            results.append(rec)
            if res.status == "feasible":
                costs[algo] = res.cost
            else:
                costs[algo] = None
        answered = {v for v in costs.values()}
        if len(answered) > 1:
            raise ValidationError(
                f"row {idx}: backends disagree on the optimum: {costs}"
            )

    headers = ["row", "family", "n", "m", "waypoints", "seed", "algo", "status", "cost", "ms"]
    table = [[str(r[h]) for h in headers] for r in results]
    widths = [max(len(h), *(len(row[i]) for row in table)) for i, h in enumerate(headers)]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)).rstrip())
    for row in table:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())

    csv_path = args.output or os.path.splitext(args.specfile)[0] + ".csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for r in results:
            writer.writerow([r[h] for h in headers])
    fig_path = os.path.splitext(csv_path)[0] + ".png"
    _render_bench_figure(results, fig_path)
    print(f"wrote {csv_path} and {fig_path}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="generator seed (default 0)")
    common.add_argument(
        "--width-cap",
        type=int,
        default=None,
        help=f"treewidth DP width cap (default {DEFAULT_WIDTH_CAP})",
    )
    common.add_argument(
        "--max-k",
        type=int,
        default=None,
        help=f"cycle backend waypoint limit (default {DEFAULT_MAX_K})",
    )
    common.add_argument(
        "--state-budget",
        type=int,
        default=None,
        help="search budget: oracle states, DP table entries, or cycle search nodes",
    )
    common.add_argument(
        "--dump-tables",
        metavar="DIR",
        default=None,
        help="write per-node DP tables (tw) or the expanded graph with its "
        "provenance sidecar (linegraph) into DIR",
    )

    parser = argparse.ArgumentParser(
        prog="wrp",
        description="Exact solvers for capacitated waypoint routing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve an instance file")
    p.add_argument("instance", help="instance text file")
    p.add_argument("--algo", choices=ALGOS, default="auto")
    p.add_argument("--report-json", metavar="FILE", help="machine-readable report sidecar")
    p.add_argument("--route-out", metavar="FILE", help="write the route artifact here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="check a route against an instance")
    p.add_argument("instance")
    p.add_argument("route", help="route text file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("decompose", parents=[common], help="print a tree decomposition")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    p.add_argument("--nice", action="store_true", help="emit the nice form with kind/root lines")
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gen", parents=[common], help="generate an instance")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, help="size knob (vertices, columns, or cycle length)")
    p.add_argument("--k", type=int, help="backbone clique size (partial-ktree)")
    p.add_argument("--r", type=int, help="growth exponent / tree depth")
    p.add_argument("--keep-prob", type=float, default=0.85, help="edge keep probability")
    p.add_argument("--edge", type=int, default=0, help="edge id replaced by the gadget")
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", parents=[common], help="run a benchmark spec")
    p.add_argument("specfile", help="one '<family> <algos> [key=value ...]' row per line")
    p.add_argument("-o", "--output", metavar="FILE", help="CSV path (default: spec name + .csv)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidRouteError as exc:
        for v in exc.violations:
            print(v.describe())
        return EXIT_INVALID
    except (ResourceLimitError, BackendUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
