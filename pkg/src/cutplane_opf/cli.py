"""Command-line front end: ``solve``, ``perturb`` and ``report``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
from typing import Optional, Sequence

from .cuts import CutPolicy
from .driver import DriverParams, export_cuts, import_cuts, run
from .network import BranchKey, load_case, validate_case, write_case
from .perturb import branch_flows, branch_off, perturb_loads, select_max_flow_branch
from .relaxation import RelaxationOptions, acopf_residuals, build_base_model, read_primal_point
from .report import format_log, parse_log, report, summarize
from .store import read_store, write_store

EXIT_OK, EXIT_INFEASIBLE, EXIT_ERROR = 0, 1, 2
CERTIFY_TOL = 1e-6


class UsageError(Exception):
    pass


def _typed(cls, key: str, value: str):
    ftype = {f.name: f.type for f in dataclasses.fields(cls)}[key]
    ftype = ftype if isinstance(ftype, str) else ftype.__name__
    if "bool" in ftype:
        if value.lower() not in ("0", "1", "true", "false"):
            raise UsageError(f"bad boolean {value!r} for {key}")
        return value.lower() in ("1", "true")
    if "int" in ftype:
        return int(value)
    if "float" in ftype:
        return float(value)
    return value


def split_params(pairs: Sequence[str]) -> tuple[dict, dict, dict]:
    """Route ``k=v`` pairs to driver, policy and relaxation option fields."""
    groups = {DriverParams: {}, CutPolicy: {}, RelaxationOptions: {}}
    names = {cls: {f.name for f in dataclasses.fields(cls)} - {"policy", "clock"} for cls in groups}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"expected k=v, got {pair!r}")
        owner = next((cls for cls in groups if key in names[cls]), None)
        if owner is None:
            raise UsageError(f"unknown parameter {key!r}")
        try:
            groups[owner][key] = _typed(owner, key, value)
        except ValueError:
            raise UsageError(f"bad value {value!r} for {key}") from None
    return groups[DriverParams], groups[CutPolicy], groups[RelaxationOptions]


def _parse_branch(text: str) -> BranchKey:
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise UsageError(f"expected --branch a,b[,circuit], got {text!r}")
    try:
        return BranchKey(*(int(p) for p in parts))
    except ValueError:
        raise UsageError(f"bad branch label {text!r}") from None


def cmd_solve(a) -> int:
    case = load_case(a.case)
    for d in validate_case(case):
        print(f"{d.severity}: {d.message}", file=sys.stderr)
    dkw, pkw, okw = split_params(a.params)
    if a.time_limit is not None:
        dkw["time_limit"] = a.time_limit
    if a.max_rounds is not None:
        dkw["max_rounds"] = a.max_rounds
    if a.seed_envelopes:
        dkw["seed_envelopes"] = True
    if a.backend:
        dkw["backend"] = a.backend
    if a.no_timing:
        dkw["clock"] = lambda: 0.0
    params = DriverParams(policy=CutPolicy(**pkw), **dkw)
    bundle = build_base_model(case, RelaxationOptions(**okw))
    warm = None
    if a.warm_start:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            warm, skipped = import_cuts(read_store(a.warm_start), case)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        print(f"warm start: {len(warm)} cuts loaded, {skipped} skipped", file=sys.stderr)
    result = run(bundle, warm, params)
    log = format_log(result)
    if a.log:
        with open(a.log, "w") as fh:
            fh.write(log)
    sys.stdout.write(log)
    primal = None
    if a.primal:
        rep = acopf_residuals(case, read_primal_point(open(a.primal).read()))
        if rep.max_violation <= CERTIFY_TOL:
            primal = rep.objective
            print(f"primal objective {primal:.6f} (max residual {rep.max_violation:.2e})")
        else:
            print(f"warning: primal point not certified (max residual {rep.max_violation:.2e})",
                  file=sys.stderr)
    sys.stdout.write(report(summarize(result), primal))
    if a.export_cuts:
        write_store(export_cuts(result, case), a.export_cuts)
    return EXIT_INFEASIBLE if result.status == "Infeasible" else EXIT_OK


def cmd_perturb(a) -> int:
    case = load_case(a.case)
    if a.mode == "loads":
        out = perturb_loads(case, a.seed)
    else:
        if a.branch:
            key = _parse_branch(a.branch)
        elif a.primal:
            flows = branch_flows(case, read_primal_point(open(a.primal).read()))
            key = select_max_flow_branch(flows)
            if key is None:
                raise UsageError("case has no in-service branch")
            print(f"selected branch {key} (|P| = {abs(flows[key]):.6g} p.u.)", file=sys.stderr)
        else:
            raise UsageError("branch-off mode needs --branch or --primal")
        out = branch_off(case, key)
    with open(a.out, "w") as fh:
        fh.write(write_case(out))
    return EXIT_OK


def cmd_report(a) -> int:
    with open(a.log) as fh:
        summary = parse_log(fh.read())
    sys.stdout.write(report(summary, a.primal))
    return EXIT_INFEASIBLE if summary.status == "Infeasible" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cutplane-opf",
                                description="Cutting-plane SOC bounds for AC optimal power flow.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the cutting-plane loop on a case")
    s.add_argument("--case", required=True)
    s.add_argument("--warm-start", metavar="CSTORE")
    s.add_argument("--export-cuts", metavar="CSTORE")
    s.add_argument("--time-limit", type=float, metavar="S")
    s.add_argument("--max-rounds", type=int, metavar="N")
    s.add_argument("--seed-envelopes", action="store_true")
    s.add_argument("--backend", choices=["simplex", "highs"])
    s.add_argument("--params", nargs="*", default=[], metavar="K=V")
    s.add_argument("--log", metavar="FILE", help="also write the round log here")
    s.add_argument("--primal", metavar="FILE", help="primal point file for the gap")
    s.add_argument("--no-timing", action="store_true",
                   help="report zero times so logs are reproducible byte for byte")
    s.set_defaults(func=cmd_solve)

    q = sub.add_parser("perturb", help="write a related instance")
    q.add_argument("--case", required=True)
    q.add_argument("--mode", choices=["loads", "branch-off"], required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--branch", metavar="A,B")
    q.add_argument("--primal", metavar="FILE")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_perturb)

    r = sub.add_parser("report", help="summarise a round log")
    r.add_argument("--log", required=True)
    r.add_argument("--primal", type=float, metavar="Z")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
