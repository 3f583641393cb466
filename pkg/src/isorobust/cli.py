"""Command-line interface.

Exit codes: 0 success / robust / nothing found, 1 not robust / counterexample
found / verification failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dsl, report
from .allocation import lowest_allocation
from .checker import InternalInconsistency, is_robust
from .model import ModelError, parse_allocation
from .oracle import (
    BoundTooSmall,
    allowed_under,
    bounded_counterexample_search,
    build_split_schedule,
    canonical_allocation,
    check_conditions,
    is_conflict_serializable,
    violations,
)
from .promotion import explore, group_rows

EXIT_OK, EXIT_FOUND, EXIT_INPUT = 0, 1, 2
DEFAULT_TEMPLATES = "builtin:smallbank"


class InputError(Exception):
    pass


def _load(path: str):
    try:
        return dsl.load(path)
    except FileNotFoundError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except ModelError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _alloc(text: str, model):
    try:
        return parse_allocation(text, model)
    except ValueError as exc:
        raise InputError(f"bad allocation: {exc}") from exc


def _verify(witness, alloc):
    s = build_split_schedule(witness, alloc)
    canon = canonical_allocation(witness, alloc)
    ok = not is_conflict_serializable(s) and allowed_under(s, canon)
    return s, canon, ok


def _plot_schedule(args, s, name: str, title: str):
    if args.plot_dir:
        from .plotting import schedule_timeline

        Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
        schedule_timeline(s, Path(args.plot_dir) / name, title)


def _schedule_rows(s):
    return [("schedule", i + 1, s.ops[o].txn, s.ops[o].kind, s.ops[o].obj or "",
             s.version_fn.get(o, "")) for i, o in enumerate(s.order)]


def cmd_check(args, out) -> int:
    model = _load(args.templates)
    alloc = _alloc(args.alloc, model)
    verdict = is_robust(model, alloc)
    payload = {"schema_version": report.SCHEMA_VERSION, "command": "check",
               "allocation": report.allocation_json(alloc), "robust": verdict.robust,
               "witness": None, "schedule": None, "oracle_verified": False}
    s = None
    if not verdict.robust:
        s, _, ok = _verify(verdict.witness, alloc)
        payload["witness"] = report.witness_json(verdict.witness, model)
        payload["schedule"] = report.schedule_json(s)
        payload["oracle_verified"] = ok
        _plot_schedule(args, s, "witness_schedule.png", "counterexample split schedule")
    if args.format == "json":
        out.write(report.dumps(payload))
    else:
        rows = [("allocation", alloc.format()), ("robust", str(verdict.robust).lower())]
        if s is not None:
            w = verdict.witness
            rows += [("quadruple", i + 1, str(q)) for i, q in enumerate(w.quadruples)]
            rows += [("h", w.h), ("c_o2", w.c_o2), ("c_pn", w.c_pn)]
            rows += _schedule_rows(s)
            rows.append(("oracle_verified", str(payload["oracle_verified"]).lower()))
        out.write(report.tsv(rows))
    return EXIT_OK if verdict.robust else EXIT_FOUND


def cmd_lowest(args, out) -> int:
    model = _load(args.templates)
    alloc = lowest_allocation(model)
    if args.format == "json":
        out.write(report.dumps({"schema_version": report.SCHEMA_VERSION, "command": "lowest",
                                "allocation": report.allocation_json(alloc)}))
    else:
        out.write(report.tsv([("template", "level")] + [(k, v.name) for k, v in alloc.items()]))
    return EXIT_OK


def cmd_promotions(args, out) -> int:
    model = _load(args.templates)
    rows = explore(model)
    if args.group or args.plot_dir:
        grouped = group_rows(rows)
        if args.group:
            rows = grouped
        letters = {r.index: r.group for r in grouped}
    else:
        letters = {}
    if args.plot_dir:
        from .plotting import allocation_heatmap

        Path(args.plot_dir).mkdir(parents=True, exist_ok=True)
        allocation_heatmap(rows, model, Path(args.plot_dir) / "promotions.png")
    names = [t.name for t in model.templates]
    if args.format == "json":
        out.write(report.dumps({
            "schema_version": report.SCHEMA_VERSION, "command": "promotions",
            "rows": [{"row": r.index, "group": letters.get(r.index) or None, "choice": r.label,
                      "promoted": sorted([list(c) for c in r.choice]),
                      "allocation": report.allocation_json(r.allocation)} for r in rows]}))
    else:
        header = (["group"] if letters else []) + ["row", "choice"] + [t.short_name for t in model.templates]
        table = [header]
        for r in rows:
            table.append(([letters[r.index]] if letters else []) + [r.index, r.label]
                         + [r.allocation[n].name for n in names])
        out.write(report.tsv(table))
    return EXIT_OK


def cmd_oracle_verify(args, out) -> int:
    try:
        text = Path(args.witness).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{args.witness}: {exc.strerror or exc}") from exc
    try:
        witness, model, embedded = report.load_witness(text)
    except (report.ReportError, ModelError) as exc:
        raise InputError(str(exc)) from exc
    if args.alloc is not None:
        alloc = _alloc(args.alloc, model)
    elif embedded is not None:
        alloc = embedded
    else:
        raise InputError("no allocation given and none embedded in the witness file")
    missing = [t.name for t in model.templates if t.name not in alloc]
    if missing:
        raise InputError(f"allocation lacks template(s) {missing}")
    s, canon, ok = _verify(witness, alloc)
    failed = check_conditions(witness.quadruples, alloc)
    payload = {"schema_version": report.SCHEMA_VERSION, "command": "oracle verify",
               "allocation": report.allocation_json(alloc), "oracle_verified": ok,
               "serializable": is_conflict_serializable(s), "violations": violations(s, canon),
               "failed_conditions": failed, "schedule": report.schedule_json(s)}
    _plot_schedule(args, s, "verified_schedule.png", "replayed split schedule")
    if args.format == "json":
        out.write(report.dumps(payload))
    else:
        rows = [("oracle_verified", str(ok).lower()),
                ("serializable", str(payload["serializable"]).lower())]
        rows += [("violation", v) for v in payload["violations"]]
        rows += [("failed_condition", c) for c in failed]
        rows += _schedule_rows(s)
        out.write(report.tsv(rows))
    return EXIT_OK if ok else EXIT_FOUND


def cmd_oracle_search(args, out) -> int:
    model = _load(args.templates)
    alloc = _alloc(args.alloc, model)
    try:
        ce = bounded_counterexample_search(model, alloc, args.bound)
    except BoundTooSmall as exc:
        raise InputError(str(exc)) from exc
    payload = {"schema_version": report.SCHEMA_VERSION, "command": "oracle search",
               "allocation": report.allocation_json(alloc), "bound": args.bound,
               "result": "counterexample" if ce else "none found within bound",
               "quadruples": [str(q) for q in ce.quadruples] if ce else None,
               "schedule": report.schedule_json(ce.schedule) if ce else None}
    if ce:
        _plot_schedule(args, ce.schedule, "search_schedule.png", "bounded-search counterexample")
    if args.format == "json":
        out.write(report.dumps(payload))
    else:
        rows = [("bound", args.bound), ("result", payload["result"])]
        if ce:
            rows += [("quadruple", i + 1, str(q)) for i, q in enumerate(ce.quadruples)]
            rows += _schedule_rows(ce.schedule)
        out.write(report.tsv(rows))
    return EXIT_FOUND if ce else EXIT_OK


def _common() -> argparse.ArgumentParser:
    # a fresh parent per parser: argparse shares action objects with parents,
    # so set_defaults on one would leak into the others
    common = argparse.ArgumentParser(add_help=False)
    fmt = common.add_mutually_exclusive_group()
    # SUPPRESS keeps a subcommand from resetting a flag given before it
    fmt.add_argument("--json", dest="format", action="store_const", const="json",
                     default=argparse.SUPPRESS, help="machine-readable JSON report")
    fmt.add_argument("--text", dest="format", action="store_const", const="text",
                     default=argparse.SUPPRESS, help="tab-delimited report (default)")
    common.add_argument("--plot-dir", default=argparse.SUPPRESS,
                        help="also write PNG figures into this directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="isorobust", parents=[_common()],
                                description="Robustness of transaction templates under RC/SI/SSI.")
    p.set_defaults(format="text", plot_dir=None)
    sub = p.add_subparsers(dest="command", required=True)

    def templates_arg(sp):
        sp.add_argument("--templates", default=DEFAULT_TEMPLATES,
                        help="template file, or builtin:smallbank (default)")

    sp = sub.add_parser("check", parents=[common], help="decide robustness of one allocation")
    templates_arg(sp)
    sp.add_argument("--alloc", required=True, help="Name=LEVEL,... (unlisted templates get SSI)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("lowest", parents=[common], help="unique lowest robust allocation")
    templates_arg(sp)
    sp.set_defaults(func=cmd_lowest)

    sp = sub.add_parser("promotions", parents=[common], help="lowest allocation per read-promotion choice")
    templates_arg(sp)
    sp.add_argument("--group", action="store_true", help="group rows by allocation")
    sp.set_defaults(func=cmd_promotions)

    op = sub.add_parser("oracle", help="schedule-level ground truth")
    osub = op.add_subparsers(dest="oracle_command", required=True)
    sp = osub.add_parser("verify", parents=[common], help="replay a witness as a split schedule")
    sp.add_argument("--witness", required=True, help="witness JSON or a check --json report")
    sp.add_argument("--alloc", help="allocation (defaults to the one embedded in the report)")
    sp.set_defaults(func=cmd_oracle_verify)
    sp = osub.add_parser("search", parents=[common], help="bounded brute-force counterexample search")
    templates_arg(sp)
    sp.add_argument("--alloc", required=True)
    sp.add_argument("--bound", type=int, default=3, help="maximum number of quadruples (>= 2)")
    sp.set_defaults(func=cmd_oracle_search)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"isorobust: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalInconsistency as exc:
        print(f"isorobust: internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
