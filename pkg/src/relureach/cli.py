"""Command-line front end.

Exit codes: 0 success / SAFE, 1 UNSAFE, 2 bad input, 3 resource cap hit,
4 soundness violation found by ``sample-check``.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import jsonio
from .errors import ReachError, ResourceCapExceeded
from .geometry import Polyhedron, UnionOfPolyhedra
from .netmodel import dumps_network, forward, load_network, random_network
from .oracle import SoundnessReport, check_soundness, sample_input_set, write_samples_csv
from .reach import MODES, ReachSet, default_jobs, export_reach, network_reach
from .verify import SafetySpec, check_reach_set

log = logging.getLogger("relureach")

EXIT_OK, EXIT_UNSAFE, EXIT_INPUT, EXIT_CAP, EXIT_UNSOUND = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc.msg} at line {exc.lineno} column {exc.colno}") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def load_input_set(path):
    """Union of polyhedra, a single polyhedron, or ``{"kind": "ball_inf", ...}``."""
    obj = _read_json(path)
    if isinstance(obj, dict) and obj.get("kind") == "ball_inf":
        c = np.asarray(obj["center"], dtype=float)
        r = float(obj["radius"])
        return UnionOfPolyhedra((Polyhedron.box(c - r, c + r),))
    return UnionOfPolyhedra.from_json(obj)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_gen_net(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    net = random_network(sizes, args.seed, hidden=args.hidden, output=args.output)
    _write(dumps_network(net), args.out)
    return EXIT_OK


def cmd_reach(args):
    net = load_network(args.net)
    X0 = load_input_set(args.input_set)
    Y, stats = network_reach(net, X0, mode=args.mode, jobs=args.jobs, region_cap=args.region_cap)
    if args.export == "regions":
        doc = Y.to_json(stats)
    elif args.export == "hrep":
        doc = {"layer": Y.layer_index, "stats": stats.counts_json(), **export_reach(Y, "hrep").to_json()}
    else:
        doc = {"polygons": [[list(v) for v in poly] for poly in export_reach(Y, "polygons2d")]}
    _write(jsonio.dumps(doc), args.out)
    # Timings vary run to run, so they stay out of the region file.
    timing = jsonio.dumps(stats.to_json())
    if args.stats_out:
        _write(timing, args.stats_out)
    if args.out not in (None, "-"):
        sys.stdout.write(timing)
    return EXIT_OK


def cmd_verify(args):
    net = load_network(args.net)
    X0 = load_input_set(args.input_set)
    spec = SafetySpec.from_json(_read_json(args.spec))
    if spec.dim != net.output_dim:
        raise InputError(f"spec has dimension {spec.dim}, network outputs {net.output_dim}")
    Y, stats = network_reach(net, X0, mode=args.mode, jobs=args.jobs, region_cap=args.region_cap)
    verdict = check_reach_set(Y, spec, net)
    verdict.stats = stats.to_json()
    sys.stdout.write(jsonio.dumps(verdict.to_json()))
    return EXIT_OK if verdict.safe else EXIT_UNSAFE


def cmd_sample_check(args):
    net = load_network(args.net)
    X0 = load_input_set(args.input_set)
    if args.uniform is not None:
        X = sample_input_set(X0, "uniform", n=args.uniform, seed=args.seed)
    elif args.step is not None:
        X = sample_input_set(X0, "grid", step=args.step)
    else:
        X = sample_input_set(X0, "grid", per_axis=args.grid)
    doc = _read_json(args.reach)
    if "regions" in doc:
        report = check_soundness(net, ReachSet.from_json(doc), X, tol=args.tol)
    elif "pieces" in doc:
        F = forward(net, X)
        union = UnionOfPolyhedra.from_json(doc)
        if union.dim != F.shape[1]:
            hit = np.zeros(len(X), dtype=bool)
        else:
            hit = union.contains_many(F, args.tol)
        fails = [{"index": int(k), "x": X[k].tolist(), "y": F[k].tolist(), "residual": None}
                 for k in np.flatnonzero(~hit)]
        report = SoundnessReport(len(X), fails, 0.0 if hit.all() else float("inf"), args.tol)
    else:
        raise InputError("reach file has neither 'regions' nor 'pieces'")
    if args.csv:
        write_samples_csv(args.csv, X, forward(net, X))
    _write(jsonio.dumps(report.to_json()), args.report)
    return EXIT_OK if report.ok else EXIT_UNSOUND


def cmd_stats(args):
    """Per-layer counts and timings from stats or reach files, as CSV."""
    w = csv.writer(sys.stdout)
    w.writerow(["file", "mode", "jobs", "layer", "regions", "pruned", "candidates", "bound", "seconds"])
    for path in args.files:
        doc = _read_json(path)
        st = doc.get("stats", doc)
        counts = st.get("per_layer_counts")
        if counts is None:
            raise InputError(f"{path}: no per-layer counts")
        n = len(counts)

        def col(key):
            v = st.get(key)
            return v if v is not None else [""] * n

        for k, row in enumerate(zip(counts, col("per_layer_pruned"), col("per_layer_candidates"),
                                    col("per_layer_bound"), col("per_layer_seconds")), start=1):
            secs = row[4] if row[4] == "" else format(row[4], ".6f")
            w.writerow([path, st.get("mode", ""), st.get("jobs", ""), k, row[0], row[1], row[2], row[3], secs])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="relureach", description="Exact reachability and safety checks for ReLU networks.")
    p.add_argument("--log-level", default=os.environ.get("REACH_LOG", "WARNING"))
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-net", help="write a seeded random network")
    g.add_argument("--sizes", required=True, help="comma-separated widths, input first")
    g.add_argument("--hidden", default="relu", choices=["relu", "linear"])
    g.add_argument("--output", default="linear", choices=["relu", "linear"])
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_gen_net)

    def reach_flags(sp):
        sp.add_argument("--mode", default="neuronwise", choices=MODES)
        sp.add_argument("--jobs", type=int, default=default_jobs())
        sp.add_argument("--region-cap", type=int, default=100_000)

    r = sub.add_parser("reach", help="compute the output reach set")
    r.add_argument("net")
    r.add_argument("input_set")
    reach_flags(r)
    r.add_argument("--export", default="regions", choices=["regions", "hrep", "polygons2d"])
    r.add_argument("--out", default="-")
    r.add_argument("--stats-out")
    r.set_defaults(func=cmd_reach)

    v = sub.add_parser("verify", help="check the reach set against a safety spec")
    v.add_argument("net")
    v.add_argument("input_set")
    v.add_argument("spec")
    reach_flags(v)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample-check", help="validate a reach file by sampling")
    s.add_argument("net")
    s.add_argument("input_set")
    s.add_argument("reach")
    how = s.add_mutually_exclusive_group()
    how.add_argument("--grid", type=int, default=20, help="grid points per axis")
    how.add_argument("--step", type=float, help="grid spacing instead of a point count")
    how.add_argument("--uniform", type=int, help="number of uniform random samples")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--report", default="-")
    s.add_argument("--csv", help="dump samples and outputs to this CSV file")
    s.set_defaults(func=cmd_sample_check)

    t = sub.add_parser("stats", help="tabulate per-layer counts and timings")
    t.add_argument("files", nargs="+")
    t.set_defaults(func=cmd_stats)
    return p


def _fail(code, exc):
    sys.stderr.write(jsonio.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}))
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ResourceCapExceeded as exc:
        return _fail(EXIT_CAP, exc)
    except (ReachError, InputError, ValueError, KeyError, TypeError, OSError) as exc:
        return _fail(EXIT_INPUT, exc)


if __name__ == "__main__":
    sys.exit(main())
