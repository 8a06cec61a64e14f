"""Command line entry point ``twistorcheck``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 inconclusive (a residual fell between the thresholds).
"""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError
from .scenarios import BUILTIN, builtin_scenarios, exit_code, get_builtin, load_scenario, report_json, run_scenario, with_sampling


def _sampling_args(p: argparse.ArgumentParser):
    p.add_argument("--samples", type=int, help="number of chart sample points")
    p.add_argument("--sphere-samples", type=int, help="number of spiral points on the sphere (six poles are always added)")
    p.add_argument("--step", type=float, help="finite-difference step for first derivatives; curvature uses 10x")
    p.add_argument("--seed", type=int, help="seed of the scrambled Halton points and random direction pairs")


def _overrides(args) -> dict:
    return {"points": args.samples, "sphere": args.sphere_samples, "h": args.step, "seed": args.seed}


def _summary_line(report: dict) -> str:
    v = report["verdict"]
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    status = "PASS" if report["pass"] else "FAIL"
    tail = f"  failed: {', '.join(failed)}" if failed else ""
    return f"{status}  {report['scenario']['name']:32s} {v['classification']:14s} max G {v['measured_max_g']:.2e}{tail}"


def cmd_list(args) -> int:
    for name in builtin_scenarios():
        print(f"{name:32s} {BUILTIN[name]['description']}")
    return 0


def cmd_describe(args) -> int:
    sc = get_builtin(args.name) if args.name in BUILTIN else load_scenario(args.name)
    print(json.dumps(sc.to_dict(), indent=2))
    return 0


def cmd_run(args) -> int:
    sc = with_sampling(load_scenario(args.scenario), **_overrides(args))
    report = run_scenario(sc)
    text = report_json(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(_summary_line(report))
    else:
        print(text)
    return exit_code(report)


def cmd_suite(args) -> int:
    codes = []
    reports = []
    for name in builtin_scenarios():
        sc = with_sampling(get_builtin(name), **_overrides(args))
        report = run_scenario(sc)
        reports.append(report)
        codes.append(exit_code(report))
        print(_summary_line(report), flush=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps(reports, indent=2) + "\n")
    npass = sum(c == 0 for c in codes)
    print(f"{npass}/{len(codes)} scenarios pass")
    if all(c == 0 for c in codes):
        return 0
    return 3 if 3 in codes and 1 not in codes else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistorcheck", description="Numerical checks of twistor-space integrability for generalized quaternionic Kaehler structures.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("list", help="list builtin scenarios")
    p.set_defaults(func=cmd_list)
    p = sub.add_parser("describe", help="print a scenario as JSON")
    p.add_argument("name")
    p.set_defaults(func=cmd_describe)
    p = sub.add_parser("run", help="run one scenario (builtin name or JSON file)")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    _sampling_args(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("suite", help="run all builtin scenarios; exit 0 iff all pass")
    p.add_argument("--out", help="write all reports as a JSON list")
    _sampling_args(p)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
