"""Command-line front end.

Subcommands: ``classify`` (tractability verdict and ratio bounds),
``repair`` (subset/update engines), ``verify`` (violation listing),
``mpd`` (most probable database), ``gen`` (instance generators).

Every run emits a JSON report with a versioned schema; the payload is
byte-identical across reruns on the same inputs (wall time lives outside
the payload). Exit codes: 0 success, 1 inconsistent input to ``verify``,
2 usage/parse/IO errors, 3 exact repair requested for an intractable
dependency set, 4 brute-force cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import CapExceeded, IntractableFdSet, RepairError
from .fds import FdSet, fds_to_text, metrics, parse_attribute_list, parse_fds, ratio_bounds
from .gadgets import (
    Graph,
    RandomInstanceParams,
    gen_delta_k,
    gen_delta_prime_k,
    gen_random_instance,
    gen_vertex_cover_gadget,
)
from .mpd import ProbabilisticTable, brute_mpd, mpd_solve
from .srepair import approx_s_repair, brute_s_repair, opt_s_repair, osr_succeeds
from .table import Table, changelog_csv, load_table, satisfies, table_to_csv
from .urepair import brute_u_repair, repair_u, update_to_subset

SPEC_VERSION = "1"

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_INPUT_ERROR = 2
EXIT_INTRACTABLE = 3
EXIT_CAP = 4


class _CliFailure(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _CliFailure(f"cannot read {path}: {exc}", EXIT_INPUT_ERROR) from exc


def _load_inputs(table_path: str | None, fds_path: str, schema_path: str | None):
    inputs: dict[str, str] = {}
    table = None
    if table_path is not None:
        table_text = _read(table_path)
        inputs[table_path] = _sha256(table_text)
        table = load_table(table_text)
    fds_text = _read(fds_path)
    inputs[fds_path] = _sha256(fds_text)
    if table is not None:
        schema = table.schema
    elif schema_path is not None:
        schema_text = _read(schema_path)
        inputs[schema_path] = _sha256(schema_text)
        schema = parse_attribute_list(schema_text)
    else:
        schema = _infer_schema(fds_text)
    d = parse_fds(fds_text, tuple(schema))
    return table, d, inputs


def _infer_schema(fds_text: str) -> tuple[str, ...]:
    """Schema from a dependency file alone: attributes in first appearance order."""
    seen: list[str] = []
    for raw in fds_text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "->" not in line:
            continue
        for side in line.split("->"):
            for token in side.split(","):
                token = token.strip()
                if token and token not in seen:
                    seen.append(token)
    return tuple(seen)


def _report(command: str, inputs: dict[str, str], payload: dict, started: float, out_path: str | None) -> None:
    report = {
        "spec_version": SPEC_VERSION,
        "tool_version": __version__,
        "command": command,
        "inputs": inputs,
        "payload": payload,
        "wall_time_ms": round((time.monotonic() - started) * 1000.0, 3),
    }
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_classify(args: argparse.Namespace) -> int:
    started = time.monotonic()
    _, d, inputs = _load_inputs(None, args.fds, args.schema)
    ok, trace = osr_succeeds(d)
    m = metrics(d)
    bounds = ratio_bounds(d)
    payload = {
        "tractable_s": ok,
        "trace": trace.payload(),
        "is_chain": m.is_chain,
        "mlc": m.mlc,
        "mfs": m.mfs,
        "mci": m.mci,
        "consensus_attrs": sorted(m.consensus_attrs),
        "bound_2mlc": bounds["bound_2mlc"],
        "bound_kl": bounds["bound_kl"],
        "combined_bound": bounds["combined_bound"],
    }
    _report("classify", inputs, payload, started, args.report)
    return EXIT_OK


def cmd_repair(args: argparse.Namespace) -> int:
    started = time.monotonic()
    table, d, inputs = _load_inputs(args.table, args.fds, None)
    assert table is not None

    changes_text = None
    if args.mode in ("subset-exact", "subset-approx", "subset-brute"):
        if args.mode == "subset-exact":
            try:
                report = opt_s_repair(d, table, args.threads)
            except IntractableFdSet as exc:
                raise _CliFailure(str(exc), EXIT_INTRACTABLE) from exc
        elif args.mode == "subset-approx":
            report = approx_s_repair(d, table)
        else:
            try:
                report = brute_s_repair(d, table)
            except CapExceeded as exc:
                raise _CliFailure(str(exc), EXIT_CAP) from exc
        payload = report.payload(table)
        repaired = table.subset(report.repair.retained_ids)
    else:
        if args.mode == "update":
            u_report = repair_u(d, table, args.threads)
            payload = u_report.payload()
            repair = u_report.repair
        else:  # update-brute
            try:
                repair = brute_u_repair(d, table)
            except CapExceeded as exc:
                raise _CliFailure(str(exc), EXIT_CAP) from exc
            payload = {
                "distance": round(repair.distance, 9),
                "guarantee": repair.guarantee,
                "algorithm": "brute-force",
            }
        payload["updated_cells"] = sum(len(cells) for cells in repair.updates.values())
        repaired = table.apply_updates(repair.updates)
        changes_text = changelog_csv(table, repair)

    _write(args.out, table_to_csv(repaired))
    if args.changes and changes_text is not None:
        _write(args.changes, changes_text)
    _report(f"repair:{args.mode}", inputs, payload, started, args.report)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    started = time.monotonic()
    table, d, inputs = _load_inputs(args.table, args.fds, None)
    assert table is not None
    violations = satisfies(table, d)
    payload = {
        "consistent": not violations,
        "violations": [{"fd": str(v.fd), "ids": list(v.ids)} for v in violations],
    }
    _report("verify", inputs, payload, started, args.report)
    return EXIT_OK if not violations else EXIT_INCONSISTENT


def cmd_mpd(args: argparse.Namespace) -> int:
    started = time.monotonic()
    table, d, inputs = _load_inputs(args.table, args.fds, None)
    assert table is not None
    prob = ProbabilisticTable(table)
    try:
        result = brute_mpd(d, prob) if args.brute else mpd_solve(d, prob, args.threads)
    except IntractableFdSet as exc:
        raise _CliFailure(str(exc), EXIT_INTRACTABLE) from exc
    except CapExceeded as exc:
        raise _CliFailure(str(exc), EXIT_CAP) from exc
    _report("mpd", inputs, result.payload(), started, args.report)
    return EXIT_OK


def _parse_edges(text: str) -> Graph:
    edges = []
    vertices: list[str] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" not in chunk:
            raise _CliFailure(f"edge {chunk!r} must look like u-v", EXIT_INPUT_ERROR)
        u, v = (part.strip() for part in chunk.split("-", 1))
        for name in (u, v):
            if name not in vertices:
                vertices.append(name)
        edges.append((u, v))
    return Graph(tuple(vertices), tuple(edges))


def cmd_gen(args: argparse.Namespace) -> int:
    started = time.monotonic()
    table = None
    if args.gadget == "vertex-cover":
        graph = _parse_edges(args.edges or "")
        if args.vertices:
            names = tuple(dict.fromkeys(list(graph.vertices) + [v.strip() for v in args.vertices.split(",") if v.strip()]))
            graph = Graph(names, graph.edges)
        table, d = gen_vertex_cover_gadget(graph)
        source = {"gadget": "vertex-cover", "edges": [list(e) for e in graph.edges], "vertices": list(graph.vertices)}
    elif args.family:
        if args.k is None:
            raise _CliFailure("--family requires --k", EXIT_INPUT_ERROR)
        d = gen_delta_k(args.k) if args.family == "delta" else gen_delta_prime_k(args.k)
        source = {"family": args.family, "k": args.k}
    elif args.random:
        params = RandomInstanceParams(
            tuples=args.tuples,
            attrs=args.attrs,
            domain_size=args.domain,
            weights=tuple(float(w) for w in args.weights.split(",")),
            fd_specs=tuple(args.fd_spec) if args.fd_spec else ("A -> B",),
        )
        table, d = gen_random_instance(args.seed, params)
        source = {"random": {"seed": args.seed, "tuples": args.tuples, "attrs": args.attrs, "domain": args.domain}}
    else:
        raise _CliFailure("choose one of --gadget, --family, --random", EXIT_INPUT_ERROR)

    if table is not None:
        if not args.out_table:
            raise _CliFailure("this generator produces a table: --out-table is required", EXIT_INPUT_ERROR)
        _write(args.out_table, table_to_csv(table))
    _write(args.out_fds, fds_to_text(d))

    payload = {
        "source": source,
        "fds": [str(dep) for dep in d.fds],
        "rows": None if table is None else len(table),
        "unweighted": None if table is None else table.is_unweighted,
    }
    _report("gen", {}, payload, started, args.report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdrepair", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fdrepair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="tractability verdict and ratio bounds for a dependency file")
    p.add_argument("--fds", required=True)
    p.add_argument("--schema", default=None, help="optional attribute-list file; inferred from the FD file otherwise")
    p.add_argument("--report", default=None)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("repair", help="repair a table and write the result")
    p.add_argument("--mode", required=True,
                   choices=["subset-exact", "subset-approx", "subset-brute", "update", "update-brute"])
    p.add_argument("--table", required=True)
    p.add_argument("--fds", required=True)
    p.add_argument("--out", default=None, help="path for the repaired table CSV")
    p.add_argument("--changes", default=None, help="path for the cell-level change log CSV (update modes)")
    p.add_argument("--report", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(handler=cmd_repair)

    p = sub.add_parser("verify", help="list violations; exit 0 when consistent")
    p.add_argument("--table", required=True)
    p.add_argument("--fds", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("mpd", help="most probable database for a probabilistic table")
    p.add_argument("--table", required=True)
    p.add_argument("--fds", required=True)
    p.add_argument("--brute", action="store_true", help="use the exhaustive oracle instead of the reduction")
    p.add_argument("--report", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(handler=cmd_mpd)

    p = sub.add_parser("gen", help="generate gadget, family, or random instances")
    p.add_argument("--gadget", choices=["vertex-cover"], default=None)
    p.add_argument("--edges", default=None, help='edge list "u-v,v-w" for --gadget vertex-cover')
    p.add_argument("--vertices", default=None, help="extra isolated vertices, comma-separated")
    p.add_argument("--family", choices=["delta", "delta-prime"], default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--random", action="store_true")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--tuples", type=int, default=4)
    p.add_argument("--attrs", type=int, default=3)
    p.add_argument("--domain", type=int, default=3)
    p.add_argument("--weights", default="1,2,3")
    p.add_argument("--fd-spec", action="append", default=None,
                   help="dependency text (';'-separated lines); repeatable to form a catalog")
    p.add_argument("--out-table", default=None)
    p.add_argument("--out-fds", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(handler=cmd_gen)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _CliFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except RepairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
