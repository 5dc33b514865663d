"""Command-line front end: analyze, render, survey, gd.

Exit codes: 0 success, 2 malformed or inconsistent input, 3 memory budget
exceeded, 4 survey enumeration cap exceeded, 5 decomposition verification
mismatch.  All output is deterministic for fixed inputs and flags once
timings are suppressed with --no-timings.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from itertools import combinations

from .bounds import bounds_report
from .errors import BudgetError, ParseError
from .graphdir import MWGraph, gd_dimension, load_graph, verify_decomposition
from .grid import build_grid, render_pbm
from .model import (
    DigitSet,
    dihedral_canonical,
    parse_digitset,
    serialize_digitset,
    th_prescreen,
)

REPORT_SCHEMA_ID = "fracube-report/1"
DEFAULT_SURVEY_CAP = 10**7

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": REPORT_SCHEMA_ID,
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "input", "reduction", "dim_h", "verdict",
                 "first_island_level", "ic_upper", "ic_exact", "th_upper",
                 "strict_drop", "th_prescreen", "gd"],
    "properties": {
        "schema": {"const": REPORT_SCHEMA_ID},
        "input": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "d", "digit_count", "digits"],
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "d": {"type": "integer", "minimum": 1},
                "digit_count": {"type": "integer", "minimum": 1},
                "digits": {"type": "array",
                           "items": {"type": "array", "items": {"type": "integer"}}},
            },
        },
        "reduction": {
            "type": "object",
            "additionalProperties": False,
            "required": ["steps", "reduced_d", "collapsed_to_point"],
            "properties": {
                "steps": {"type": "array", "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["normal", "offset", "dropped_axis"],
                    "properties": {
                        "normal": {"type": "array", "items": {"type": "integer"}},
                        "offset": {"type": "string"},
                        "dropped_axis": {"type": "integer"},
                    },
                }},
                "reduced_d": {"type": "integer", "minimum": 1},
                "collapsed_to_point": {"type": "boolean"},
            },
        },
        "dim_h": {
            "type": "object",
            "additionalProperties": False,
            "required": ["value", "log_arg", "log_base"],
            "properties": {
                "value": {"type": "number"},
                "log_arg": {"type": "integer"},
                "log_base": {"type": "integer"},
            },
        },
        "verdict": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "level", "island_id", "certificate", "k_max"],
            "properties": {
                "kind": {"enum": ["has_trivial_point", "no_trivial_point",
                                  "singleton", "unknown"]},
                "level": {"type": ["integer", "null"]},
                "island_id": {"type": ["integer", "null"]},
                "certificate": {"type": ["string", "null"]},
                "k_max": {"type": ["integer", "null"]},
            },
        },
        "first_island_level": {"type": ["integer", "null"]},
        "ic_upper": {
            "type": "object",
            "additionalProperties": False,
            "required": ["value", "witness"],
            "properties": {
                "value": {"type": "number"},
                "witness": {
                    "type": ["object", "null"],
                    "additionalProperties": False,
                    "required": ["level", "removed_cells"],
                    "properties": {
                        "level": {"type": "integer"},
                        "removed_cells": {"type": "integer"},
                    },
                },
            },
        },
        "ic_exact": {"type": ["number", "null"]},
        "th_upper": {"type": "number"},
        "strict_drop": {"type": "boolean"},
        "th_prescreen": {
            "type": "object",
            "additionalProperties": False,
            "required": ["status", "form", "reason"],
            "properties": {
                "status": {"enum": ["ruled_out", "possible", "inconclusive"]},
                "form": {"type": ["string", "null"]},
                "reason": {"type": ["string", "null"]},
            },
        },
        "gd": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["dimension", "interval", "verification"],
            "properties": {
                "dimension": {"type": "number"},
                "interval": {"type": "array", "items": {"type": "number"},
                             "minItems": 2, "maxItems": 2},
                "verification": {
                    "type": ["object", "null"],
                    "additionalProperties": False,
                    "required": ["node", "cell", "levels", "all_equal"],
                    "properties": {
                        "node": {"type": "string"},
                        "cell": {"type": "array", "items": {"type": "integer"}},
                        "levels": {"type": "array", "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["level", "equal", "component_cells",
                                         "path_cells", "first_mismatch"],
                            "properties": {
                                "level": {"type": "integer"},
                                "equal": {"type": "boolean"},
                                "component_cells": {"type": "integer"},
                                "path_cells": {"type": "integer"},
                                "first_mismatch": {
                                    "type": ["array", "null"],
                                    "items": {"type": "integer"},
                                },
                            },
                        }},
                        "all_equal": {"type": "boolean"},
                    },
                },
            },
        },
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


def default_kmax(dim: int) -> int:
    if dim <= 2:
        return 6
    if dim == 3:
        return 3
    return 2


# ---------------------------------------------------------------------------
# Analysis report
# ---------------------------------------------------------------------------

def build_analysis_report(ds: DigitSet, k_max: int, graph: MWGraph | None = None,
                          gd_node: str | None = None, gd_cell=None,
                          include_timings: bool = True,
                          max_bytes: int | None = None) -> dict:
    """Assemble the fracube-report/1 JSON document for one digit set."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    gd_section = None
    gd_value = None
    if graph is not None:
        t = time.perf_counter()
        value, interval = gd_dimension(graph)
        gd_value = value
        verification = None
        if gd_node is not None and gd_cell is not None:
            ver = verify_decomposition(ds, graph, gd_node, gd_cell, k_max, max_bytes)
            verification = {
                "node": gd_node,
                "cell": [int(c) for c in gd_cell],
                "levels": [
                    {"level": o.level, "equal": o.equal,
                     "component_cells": o.component_cells,
                     "path_cells": o.path_cell_count,
                     "first_mismatch": list(o.first_mismatch) if o.first_mismatch else None}
                    for o in ver.levels
                ],
                "all_equal": ver.all_equal,
            }
        gd_section = {"dimension": value, "interval": [interval[0], interval[1]],
                      "verification": verification}
        timings["gd_s"] = time.perf_counter() - t

    t = time.perf_counter()
    rep = bounds_report(ds, k_max, gd_value=gd_value, max_bytes=max_bytes)
    timings["bounds_s"] = time.perf_counter() - t
    prescreen = th_prescreen(ds, rep.verdict)

    from .model import reduce_full_rank

    red = reduce_full_rank(ds)
    verdict = rep.verdict
    doc = {
        "schema": REPORT_SCHEMA_ID,
        "input": {
            "n": ds.base,
            "d": ds.dim,
            "digit_count": ds.count,
            "digits": [list(h) for h in ds.digits],
        },
        "reduction": {
            "steps": [
                {"normal": list(s.normal), "offset": str(s.offset),
                 "dropped_axis": s.dropped_axis}
                for s in red.steps
            ],
            "reduced_d": red.reduced.dim,
            "collapsed_to_point": red.collapsed_to_point,
        },
        "dim_h": {"value": rep.dim_h, "log_arg": rep.dim_h_parts[0],
                  "log_base": rep.dim_h_parts[1]},
        "verdict": {"kind": verdict.kind, "level": verdict.level,
                    "island_id": verdict.island_id,
                    "certificate": verdict.certificate, "k_max": verdict.k_max},
        "first_island_level": verdict.level,
        "ic_upper": {
            "value": rep.ic_upper,
            "witness": ({"level": rep.ic_witness.level,
                         "removed_cells": rep.ic_witness.removed_cells}
                        if rep.ic_witness else None),
        },
        "ic_exact": rep.ic_exact,
        "th_upper": rep.th_upper,
        "strict_drop": rep.strict_drop,
        "th_prescreen": {"status": prescreen.status, "form": prescreen.form,
                         "reason": prescreen.reason},
        "gd": gd_section,
    }
    if include_timings:
        timings["total_s"] = time.perf_counter() - t0
        doc["timings"] = timings
    return doc


def _print_human_report(doc: dict, out) -> None:
    i = doc["input"]
    print(f"input: n={i['n']} d={i['d']} N={i['digit_count']}", file=out)
    red = doc["reduction"]
    if red["collapsed_to_point"]:
        print(f"reduction: collapsed to a single point after {len(red['steps'])} step(s)", file=out)
    elif red["steps"]:
        print(f"reduction: {len(red['steps'])} step(s), reduced dimension {red['reduced_d']}", file=out)
    else:
        print("reduction: none (full affine rank)", file=out)
    dh = doc["dim_h"]
    print(f"dim_H: log {dh['log_arg']} / log {dh['log_base']} = {dh['value']!r}", file=out)
    v = doc["verdict"]
    if v["kind"] == "has_trivial_point":
        print(f"verdict: trivial point exists (island at level {v['level']}, "
              f"component #{v['island_id']})", file=out)
    elif v["kind"] == "no_trivial_point":
        print(f"verdict: no trivial point (certificate: {v['certificate']})", file=out)
    elif v["kind"] == "singleton":
        print("verdict: singleton attractor (the point is trivial)", file=out)
    else:
        print(f"verdict: unknown up to level {v['k_max']}", file=out)
    print(f"first island level: {doc['first_island_level']}", file=out)
    ic = doc["ic_upper"]
    if ic["witness"]:
        print(f"ic upper bound: {ic['value']!r} (witness: level {ic['witness']['level']}, "
              f"{ic['witness']['removed_cells']} island cells removed)", file=out)
    else:
        print(f"ic upper bound: {ic['value']!r} (no island found)", file=out)
    if doc["ic_exact"] is not None:
        print(f"ic exact (graph-directed): {doc['ic_exact']!r}", file=out)
    print(f"tH upper bound: {doc['th_upper']!r}", file=out)
    print(f"strict dimension drop: {'yes' if doc['strict_drop'] else 'no'}", file=out)
    ps = doc["th_prescreen"]
    detail = ps["form"] or ps["reason"]
    print(f"tH prescreen: {ps['status']}" + (f" ({detail})" if detail else ""), file=out)
    if doc["gd"]:
        g = doc["gd"]
        print(f"gd dimension: {g['dimension']!r} in [{g['interval'][0]!r}, {g['interval'][1]!r}]",
              file=out)
        if g["verification"]:
            word = "all levels equal" if g["verification"]["all_equal"] else "MISMATCH"
            print(f"gd verification: {word}", file=out)
    if "timings" in doc:
        print(f"elapsed: {doc['timings']['total_s']:.3f}s", file=out)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _read_file(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


def _parse_cell(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ParseError(f"invalid cell {text!r}, expected comma-separated integers") from None


def cmd_analyze(args) -> int:
    ds = parse_digitset(_read_file(args.path))
    k_max = args.kmax if args.kmax is not None else default_kmax(ds.dim)
    graph = load_graph(_read_file(args.gd)) if args.gd else None
    gd_cell = _parse_cell(args.cell) if args.cell else None
    doc = build_analysis_report(ds, k_max, graph=graph, gd_node=args.node,
                                gd_cell=gd_cell, include_timings=not args.no_timings,
                                max_bytes=args.max_bytes)
    if args.json:
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        _print_human_report(doc, sys.stdout)
    return 0


def _parse_slice(text: str) -> tuple:
    parts = text.split(",")
    out = []
    for t in parts:
        t = t.strip()
        if t == "*":
            out.append(None)
        else:
            try:
                out.append(int(t))
            except ValueError:
                raise ParseError(f"invalid slice entry {t!r}") from None
    return tuple(out)


def cmd_render(args) -> int:
    ds = parse_digitset(_read_file(args.path))
    grid = build_grid(ds, args.k, max_bytes=args.max_bytes)
    slice_spec = _parse_slice(args.slice) if args.slice else None
    data = render_pbm(grid, slice_spec)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


def canonical_key(ds: DigitSet) -> str:
    digits = ";".join(",".join(str(c) for c in h) for h in ds.digits)
    return f"n{ds.base}d{ds.dim}:{digits}"


def survey_record(ds: DigitSet, k_max: int, max_bytes: int | None = None,
                  symmetry_representative: bool | None = None) -> dict:
    """Flattened one-line analysis record for survey output."""
    rep = bounds_report(ds, k_max, max_bytes=max_bytes)
    v = rep.verdict
    return {
        "key": canonical_key(ds),
        "n": ds.base,
        "d": ds.dim,
        "digit_count": ds.count,
        "digits": [list(h) for h in ds.digits],
        "dim_h": rep.dim_h,
        "verdict": v.kind,
        "first_island_level": v.level,
        "ic_upper": rep.ic_upper,
        "th_upper": rep.th_upper,
        "strict_drop": rep.strict_drop,
        "symmetry_representative": symmetry_representative,
    }


def _survey_worker(task) -> dict:
    n, d, flats, k_max, max_bytes, rep_flag = task
    ds = DigitSet.from_flat_indices(n, d, flats)
    return survey_record(ds, k_max, max_bytes, rep_flag)


def _existing_keys(path: str) -> set[str]:
    keys = set()
    if not os.path.exists(path):
        return keys
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # tolerate a truncated trailing line
            if isinstance(rec, dict) and "key" in rec:
                keys.add(rec["key"])
    return keys


def cmd_survey(args) -> int:
    n, d, cells = args.n, args.d, args.cells
    if n < 2 or d < 1 or not 1 <= cells <= n**d:
        print(f"survey: invalid parameters n={n} d={d} cells={cells}", file=sys.stderr)
        return 2
    total = math.comb(n**d, cells)
    if total > args.cap:
        print(f"survey: enumeration of {total} candidate sets exceeds cap {args.cap}",
              file=sys.stderr)
        return 4
    k_max = args.kmax if args.kmax is not None else default_kmax(d)
    reduce_sym = args.mod_symmetry and d == 2
    if args.mod_symmetry and d != 2:
        print("survey: --mod-symmetry applies to d=2 only, running unreduced",
              file=sys.stderr)

    skip_keys = _existing_keys(args.out) if (args.resume and args.out) else set()

    tasks = []
    skipped = 0
    for flats in combinations(range(n**d), cells):
        ds = DigitSet.from_flat_indices(n, d, flats)
        rep_flag = None
        if d == 2:
            rep_flag = dihedral_canonical(ds) == ds
        if reduce_sym and not rep_flag:
            continue
        if canonical_key(ds) in skip_keys:
            skipped += 1
            continue
        tasks.append((n, d, flats, k_max, args.max_bytes, rep_flag))

    sink = open(args.out, "a", encoding="utf-8") if args.out else sys.stdout
    counts: dict[str, int] = {}
    emitted = 0
    try:
        if args.jobs > 1 and len(tasks) > 1:
            import multiprocessing as mp
            from concurrent.futures import ProcessPoolExecutor

            ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
            chunk = max(1, len(tasks) // (args.jobs * 4))
            with ProcessPoolExecutor(max_workers=args.jobs, mp_context=ctx) as pool:
                results = pool.map(_survey_worker, tasks, chunksize=chunk)
                for rec in results:
                    sink.write(json.dumps(rec, sort_keys=True) + "\n")
                    sink.flush()
                    counts[rec["verdict"]] = counts.get(rec["verdict"], 0) + 1
                    emitted += 1
        else:
            for task in tasks:
                rec = _survey_worker(task)
                sink.write(json.dumps(rec, sort_keys=True) + "\n")
                sink.flush()
                counts[rec["verdict"]] = counts.get(rec["verdict"], 0) + 1
                emitted += 1
    finally:
        if args.out:
            sink.close()

    summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    line = f"survey complete: {emitted} record(s)"
    if skipped:
        line += f", {skipped} skipped (resume)"
    if summary:
        line += f" [{summary}]"
    print(line, file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_gd(args) -> int:
    graph = load_graph(_read_file(args.graph))
    value, (lo, hi) = gd_dimension(graph)
    print(f"gd dimension = {value!r}")
    print(f"certified interval = [{lo!r}, {hi!r}] (width {hi - lo:.3e})")
    if not args.verify:
        return 0
    if args.node is None or args.cell is None:
        print("gd: --verify requires --node and --cell", file=sys.stderr)
        return 2
    ds = parse_digitset(_read_file(args.verify))
    ver = verify_decomposition(ds, graph, args.node, _parse_cell(args.cell),
                               args.levels, max_bytes=args.max_bytes)
    for o in ver.levels:
        if o.equal:
            print(f"level {o.level}: equal ({o.component_cells} cells)")
        else:
            print(f"level {o.level}: MISMATCH (component {o.component_cells} cells, "
                  f"paths {o.path_cell_count} cells)")
    if ver.all_equal:
        print("verification: all levels equal")
        return 0
    first_bad = next(o for o in ver.levels if not o.equal)
    print(f"gd: verification mismatch at level {first_bad.level}, "
          f"first differing cell {first_bad.first_mismatch}", file=sys.stderr)
    return 5


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracube",
                                description="Fractal-cube analysis tools")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="analyze a digit-set file")
    pa.add_argument("path")
    pa.add_argument("--kmax", type=int, default=None,
                    help="island search depth (default 6 for d<=2, 3 for d=3)")
    pa.add_argument("--json", action="store_true", help="emit the JSON report")
    pa.add_argument("--gd", metavar="GRAPHFILE", default=None,
                    help="graph-directed decomposition for the exact index")
    pa.add_argument("--node", default=None, help="graph node to verify against")
    pa.add_argument("--cell", default=None, help="seed cell, e.g. 0,0")
    pa.add_argument("--no-timings", action="store_true")
    pa.add_argument("--max-bytes", type=int, default=None)
    pa.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("render", help="render a level as a PBM bitmap")
    pr.add_argument("path")
    pr.add_argument("-k", type=int, required=True, help="subdivision level")
    pr.add_argument("-o", "--out", default=None)
    pr.add_argument("--slice", default=None,
                    help="for d>2: comma list fixing coordinates, '*' for the 2 free axes")
    pr.add_argument("--max-bytes", type=int, default=None)
    pr.set_defaults(func=cmd_render)

    ps = sub.add_parser("survey", help="analyze every digit set of a given shape")
    ps.add_argument("--n", type=int, required=True)
    ps.add_argument("--d", type=int, required=True)
    ps.add_argument("--cells", type=int, required=True)
    ps.add_argument("--kmax", type=int, default=None)
    ps.add_argument("--mod-symmetry", action="store_true",
                    help="emit one record per square-symmetry class (d=2)")
    ps.add_argument("--out", default=None, help="JSONL output file (default stdout)")
    ps.add_argument("--resume", action="store_true",
                    help="skip records already present in --out")
    ps.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ps.add_argument("--cap", type=int, default=DEFAULT_SURVEY_CAP)
    ps.add_argument("--max-bytes", type=int, default=None)
    ps.set_defaults(func=cmd_survey)

    pg = sub.add_parser("gd", help="graph-directed dimension and verification")
    pg.add_argument("--graph", required=True)
    pg.add_argument("--verify", metavar="CUBEFILE", default=None)
    pg.add_argument("--node", default=None)
    pg.add_argument("--cell", default=None)
    pg.add_argument("--levels", type=int, default=3)
    pg.add_argument("--max-bytes", type=int, default=None)
    pg.set_defaults(func=cmd_gd)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"fracube: {e}", file=sys.stderr)
        return 2
    except BudgetError as e:
        print(f"fracube: {e}", file=sys.stderr)
        return 3
    except OverflowError as e:
        print(f"fracube: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"fracube: {e}", file=sys.stderr)
        return 2


def entry() -> None:  # console-script shim
    sys.exit(main())
