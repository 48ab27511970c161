"""Command-line driver.

    groupoid-morita COMMAND [WORKSPACE] [NAME ...] [--tolerance T] [--seed S] [--exact] [--json]

Operands are names of groupoids, functors or bibundles, resolved in the
workspace first and then among the built-ins (``pair3``, ``unit2``,
``point``, ``z2``, ``s3``).  Given a workspace and no names, the command
runs the workspace jobs of that command, or for ``validate`` and the
``verify-*`` commands, over everything the workspace defines.

Exit status: 0 every job passed, 1 some job failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .commands import COMMANDS, Options, run_job
from .linalg import DEFAULT_TOL
from .workspace import WorkspaceError, empty_workspace, load_workspace

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_DEFAULT_JOB_COMMANDS = ("validate", "verify-w-functor", "verify-c-functor")


class _UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupoid-morita",
                                description="Certify convolution algebras, correspondences and Hilbert "
                                            "bimodules of finite groupoids.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("operands", nargs="*", help="workspace file and/or object names")
    p.add_argument("-w", "--workspace", help="workspace file (JSON)")
    p.add_argument("--tolerance", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="rational arithmetic where available")
    p.add_argument("--json", action="store_true", help="emit the structured report")
    return p


def _looks_like_file(s: str) -> bool:
    return s.endswith((".json", ".ws")) or Path(s).is_file()


def _plan(args, ws):
    """The list of (job name, command, operands, exact) to run."""
    if args.operands:
        return [(args.command, args.command, list(args.operands), args.exact)]
    if ws.path is None:
        raise _UsageError(f"{args.command} needs operands or a workspace")
    jobs = [(name, j["command"], j["operands"], args.exact or j.get("exact", False))
            for name, j in ws.jobs.items() if j["command"] == args.command]
    if jobs:
        return sorted(jobs)
    if args.command in _DEFAULT_JOB_COMMANDS:
        return [(args.command, args.command, [], args.exact)]
    raise _UsageError(f"workspace {ws.path} has no {args.command} jobs and no operands were given")


def run(argv=None) -> tuple[int, dict | None, str]:
    """Parse ``argv`` and execute; returns (exit code, report, text output)."""
    args = build_parser().parse_intermixed_args(argv)
    start = time.perf_counter()
    ws_path = args.workspace
    if ws_path is None and args.operands and _looks_like_file(args.operands[0]):
        ws_path = args.operands.pop(0)
    load_error = None
    try:
        ws = load_workspace(ws_path) if ws_path else empty_workspace()
    except WorkspaceError as exc:
        if args.command != "validate":
            raise _UsageError(str(exc)) from None
        load_error, ws = exc, None
    jobs_out, timing = [], {}
    if load_error is not None:
        jobs_out.append({"name": "validate", "command": "validate", "operands": [], "status": "fail",
                         "certificates": {"error": str(load_error), "kind": load_error.kind,
                                          "location": load_error.location}})
        timing["validate"] = 0.0
    else:
        for name, command, operands, exact in _plan(args, ws):
            t0 = time.perf_counter()
            try:
                passed, certs = run_job(command, ws, operands, Options(args.tolerance, args.seed, exact))
            except WorkspaceError as exc:
                raise _UsageError(f"job {name}: {exc}") from None
            timing[name] = time.perf_counter() - t0
            jobs_out.append({"name": name, "command": command, "operands": list(operands),
                             "status": "pass" if passed else "fail", "certificates": certs})
    jobs_out.sort(key=lambda j: j["name"])
    ok = all(j["status"] == "pass" for j in jobs_out)
    report = {
        "schema": "groupoid-morita/report", "version": 1, "command": args.command,
        "workspace": ws_path, "status": "pass" if ok else "fail", "seed": args.seed,
        "tolerance": args.tolerance, "exact": args.exact, "jobs": jobs_out,
        "timing": {"total_seconds": time.perf_counter() - start, "jobs": timing},
    }
    text = json.dumps(report, indent=2, sort_keys=True) if args.json else format_report(report)
    return (EXIT_PASS if ok else EXIT_FAIL), report, text


def _format_value(v: dict, indent: int) -> list[str]:
    pad = "  " * indent
    lines = []
    for k, x in v.items():
        if isinstance(x, dict) and x:
            lines.append(f"{pad}{k}:")
            lines += _format_value(x, indent + 1)
        else:
            lines.append(f"{pad}{k}: {_short(x)}")
    return lines


def _short(x) -> str:
    if isinstance(x, float):
        return f"{x:.3g}"
    if isinstance(x, list):
        return "[" + ", ".join(_short(i) for i in x) + "]"
    if isinstance(x, dict):
        return "{" + ", ".join(f"{k}: {_short(v)}" for k, v in x.items()) + "}"
    return str(x)


def format_report(report: dict) -> str:
    lines = []
    for j in report["jobs"]:
        ops = " ".join(j["operands"])
        lines.append(f"{j['status'].upper():4}  {j['name']}  ({j['command']}{' ' + ops if ops else ''})")
        lines += _format_value(j["certificates"], 1)
    lines.append(f"{report['status'].upper()}: {sum(j['status'] == 'pass' for j in report['jobs'])}"
                 f"/{len(report['jobs'])} jobs passed (tolerance {report['tolerance']:g}, seed {report['seed']})")
    return "\n".join(lines)


def main(argv=None) -> int:
    try:
        code, _, text = run(argv)
    except _UsageError as exc:
        print(f"groupoid-morita: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
