"""Command-line front end: ``gridswitch <subcommand> [options]``.

Exit status is 0 on success, 1 for usage or input errors and 2 when the
analysis itself fails (islanding contingency, infeasible base case).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .contingency import (baseline_rows, bilevel_row, run_full_pipeline, scenario_a,
                          scenario_b, scenario_c, screen_n1)
from .dispatch import DEFAULT_SHED_WEIGHT, base_dispatch
from .lp import LPError
from .network import (CaseError, ContingencySpec, apply_load_profile, load_case,
                      read_load_profile, scale_ratings)
from .report import emit_table, jsonable, render_aligned
from .sensitivity import IslandingError, compute_lodf, compute_ptdf
from .switching import BilevelConfig, run_bilevel

log = logging.getLogger("gridswitch")

SCREEN_COLUMNS = ("contingency", "islanded", "level1_shed_mw", "violation_count_fixed",
                  "needs_level2")


class UsageError(Exception):
    pass


class AnalysisError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--case", default="ieee39",
                        help="case JSON file (default: bundled IEEE 39-bus case)")
    common.add_argument("--loads", help="bus,load_mw CSV overriding bus loads "
                                        "('table1' selects the bundled profile)")
    common.add_argument("--rating-factor", type=float, default=1.0,
                        help="scale all branch ratings, e.g. 0.98 for an MVA-to-MW allowance")
    common.add_argument("--shed-weight", type=float, default=DEFAULT_SHED_WEIGHT)
    common.add_argument("--output", choices=("table", "json", "csv"), default="json")
    common.add_argument("--out", help="write to this file instead of stdout")
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock timings so output is reproducible")
    common.add_argument("-v", "--verbose", action="store_true")

    ctg = _Parser(add_help=False)
    ctg.add_argument("--contingency", required=True, help="branch:N or gen:N")

    tuning = _Parser(add_help=False)
    tuning.add_argument("--top-k", type=int, default=10)
    tuning.add_argument("--lbr-threshold", type=float, default=0.95)
    tuning.add_argument("--lodf-basis", choices=("pre", "post"), default="post")
    tuning.add_argument("--stop-at-zero-shed", action="store_true")
    tuning.add_argument("--shed-tol", type=float, default=1e-3)

    p = _Parser(prog="gridswitch",
                description="Post-contingency transmission switching analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("bilevel", parents=[common, ctg, tuning],
                   help="bi-level switching search")
    b = sub.add_parser("baseline", parents=[common, ctg],
                       help="closest-branch and enumeration baselines (fixed injections)")
    b.add_argument("--kind", choices=("cbce", "cbve", "ce", "all"), default="all")
    b.add_argument("--n", type=int, default=10, help="list length for CBCE/CBVE")
    for name, text in (("scenario-a", "shedding without upward re-dispatch"),
                       ("scenario-b", "shedding with re-dispatch"),
                       ("scenario-c", "shedding, re-dispatch and switching by enumeration")):
        sub.add_parser(name, parents=[common, ctg, tuning], help=text)
    sub.add_parser("compare", parents=[common, ctg, tuning],
                   help="scenarios A, B, C and the bi-level method side by side")
    sub.add_parser("screen", parents=[common, tuning], help="N-1 screening table")
    for name in ("lodf", "ptdf"):
        m = sub.add_parser(name, parents=[common], help=f"dump the {name.upper()} matrix as CSV")
        m.add_argument("--contingency", help="compute on the post-contingency topology")
        if name == "lodf":
            m.add_argument("--lodf-basis", choices=("pre", "post"), default="post")
    return p


def _network(args):
    net = load_case(args.case)
    if args.loads:
        net = apply_load_profile(net, read_load_profile(args.loads))
    return scale_ratings(net, args.rating_factor)


def _contingency(args, net) -> ContingencySpec:
    spec = ContingencySpec.parse(args.contingency)
    spec.check(net)
    return spec


def _config(args) -> BilevelConfig:
    try:
        return BilevelConfig(shed_tol_mw=args.shed_tol, lbr_loading_frac=args.lbr_threshold,
                             top_k=args.top_k, lodf_basis=args.lodf_basis,
                             shed_weight=args.shed_weight,
                             stop_at_zero_shed=args.stop_at_zero_shed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _rows_out(rows, args) -> str:
    if args.no_timing:
        rows = [r.without_timing() for r in rows]
    return emit_table(rows, args.output)


def _matrix_csv(values, row_ids, col_ids) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["branch", *col_ids])
    for rid, row in zip(row_ids, values):
        w.writerow([rid, *("" if np.isnan(v) else repr(float(v)) for v in row)])
    return buf.getvalue()


def _run(args) -> str:
    net = _network(args)
    cmd = args.command
    if cmd in ("lodf", "ptdf"):
        topo = net
        if args.contingency:
            spec = _contingency(args, net)
            if cmd == "ptdf" or args.lodf_basis == "post":
                topo = spec.apply(net)
        ptdf = compute_ptdf(topo)
        if cmd == "ptdf":
            return _matrix_csv(ptdf.values, ptdf.branch_ids, ptdf.bus_ids)
        lodf = compute_lodf(ptdf, topo)
        return _matrix_csv(lodf.values, lodf.branch_ids, lodf.branch_ids)

    if base_dispatch(net, args.shed_weight).status != "optimal":
        raise AnalysisError("base case dispatch is infeasible")

    if cmd == "screen":
        rows = screen_n1(net, _config(args))
        if args.output == "json":
            return json.dumps([jsonable(r.to_dict()) for r in rows], indent=2) + "\n"
        cells = [[r.contingency, r.islanded,
                  "" if r.level1_shed_mw is None else f"{r.level1_shed_mw:.4f}",
                  "" if r.violation_count_fixed is None else r.violation_count_fixed,
                  r.needs_level2] for r in rows]
        if args.output == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(SCREEN_COLUMNS)
            w.writerows(cells)
            return buf.getvalue()
        return render_aligned(SCREEN_COLUMNS, cells)

    spec = _contingency(args, net)
    if cmd == "bilevel":
        rep = run_bilevel(net, spec, _config(args))
        if args.output != "json":
            return _rows_out([bilevel_row(rep)], args)
        doc = rep.to_dict()
        if args.no_timing:
            doc["timings"] = {}
            for c in doc["candidates"]:
                c["time_s"] = None
        else:
            doc["timings"] = {k: round(v, 3) for k, v in doc["timings"].items()}
            for c in doc["candidates"]:
                c["time_s"] = round(c["time_s"], 3)
        return json.dumps(jsonable(doc), indent=2) + "\n"
    if cmd == "baseline":
        kinds = ("cbce", "cbve", "ce") if args.kind == "all" else (args.kind,)
        return _rows_out(baseline_rows(net, spec, args.n, kinds, args.shed_weight), args)
    cfg = _config(args)
    if cmd == "scenario-a":
        rows = [scenario_a(net, spec, cfg.shed_weight)]
    elif cmd == "scenario-b":
        rows = [scenario_b(net, spec, cfg.shed_weight)]
    elif cmd == "scenario-c":
        rows = [scenario_c(net, spec, cfg.shed_weight, cfg.shed_tol_mw)]
    else:
        rows = run_full_pipeline(net, spec, cfg).rows
    return _rows_out(rows, args)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gridswitch: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = _run(args)
    except (IslandingError, AnalysisError, LPError) as exc:
        print(f"gridswitch: analysis error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, CaseError) as exc:
        print(f"gridswitch: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
