"""Command-line interface.

Exit codes: 0 success, 1 diagnostics or violations found, 2 usage errors
(bad arguments, unreadable files).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analysis import (
    check_conflicts,
    check_invariants,
    enumerate_states,
    expected_cost,
    reachability,
)
from .chartio import parse_chart
from .codegen import gen_c, gen_prism
from .compiler import compile_chart, pretty_print
from .errors import PchartError
from .model import validate
from .render import build_display_list, render_svg

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        return parse_chart(p.read_text())
    except PchartError as e:
        raise FindingsError(f"{path}: {e}") from None


class UsageError(Exception):
    pass


class FindingsError(Exception):
    pass


def cmd_validate(args) -> int:
    chart = _load(args.file)
    diags = validate(chart)
    for d in diags:
        print(d)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        return EXIT_FINDINGS
    print(f"{args.file}: ok ({len(chart.states)} states, {len(chart.transitions)} transitions)")
    return EXIT_OK


def cmd_compile(args) -> int:
    chart = _load(args.file)
    program = compile_chart(chart)
    print(pretty_print(program), end="")
    return EXIT_OK


def cmd_check(args) -> int:
    chart = _load(args.file)
    program = compile_chart(chart)
    violations = check_invariants(chart, program, limit=args.limit)
    conflicts = check_conflicts(program, enumerate_states(program, args.limit))
    for v in violations:
        where = f"transition {v.trans_id}" if v.trans_id is not None else "initial state"
        print(f"violation: invariant `{v.invariant_text}` of state {v.state_name!r} "
              f"broken by {where}")
        if v.pre is not None:
            print(f"  witness: {v.pre} --{v.event}--> {v.post}")
        else:
            print(f"  witness: initial valuation {v.post}")
    for c in conflicts:
        print(f"warning: commands {list(c.command_ids)} conflict on event "
              f"{c.event!r} at {c.valuation}")
    if violations:
        return EXIT_FINDINGS
    print(f"{args.file}: no invariant violations")
    return EXIT_OK


def cmd_query(args) -> int:
    chart = _load(args.file)
    program = compile_chart(chart)
    fs = enumerate_states(program, limit=args.limit)
    st = chart.state_by_name(args.target)
    if st is None:
        raise UsageError(f"no state named {args.target!r}")
    mode = args.kind[1:].lower()
    if args.kind in ("Pmax", "Pmin"):
        result = reachability(fs, st.id, mode, eps=args.eps)
    else:
        result = expected_cost(fs, st.id, mode, eps=args.eps)
    print(f"{result.value:.10g}")
    return EXIT_OK


def cmd_codegen(args) -> int:
    chart = _load(args.file)
    program = compile_chart(chart)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.target == "c":
        unit = gen_c(program, chart)
        files = {
            f"{chart.name}.h": unit.header,
            f"{chart.name}.c": unit.source,
            f"{chart.name}_harness.c": unit.harness,
        }
    else:
        unit = gen_prism(program, chart)
        files = {f"{chart.name}.prism": unit.model, f"{chart.name}.props": unit.properties}
    for name, text in files.items():
        (out / name).write_text(text)
        print(out / name)
    return EXIT_OK


def cmd_render(args) -> int:
    chart = _load(args.file)
    svg = render_svg(build_display_list(chart))
    Path(args.out).write_text(svg)
    print(args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import run_server

    directory = Path(args.dir)
    if not directory.is_dir():
        raise UsageError(f"no such directory: {args.dir}")
    port = args.port or int(os.environ.get("PCHART_PORT", "8390"))
    ui = Path(args.ui) if args.ui else None
    print(f"serving {directory} on 127.0.0.1:{port}")
    run_server(directory, port, ui)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pchart",
        description="Model, verify, and generate code from pCharts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="structural and typing diagnostics")
    p.add_argument("file")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("compile", help="print the intermediate guarded commands")
    p.add_argument("file")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("check", help="verify state invariants over the reachable space")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=10**6, help="state-space limit")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("query", help="reachability probability or expected cost")
    p.add_argument("file")
    p.add_argument("--kind", required=True, choices=["Pmax", "Pmin", "Emin", "Emax"])
    p.add_argument("--target", required=True, help="target state name")
    p.add_argument("--limit", type=int, default=10**6)
    p.add_argument("--eps", type=float, default=1e-9)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("codegen", help="emit C sources or PRISM model/properties")
    p.add_argument("file")
    p.add_argument("--target", required=True, choices=["c", "prism"])
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_codegen)

    p = sub.add_parser("render", help="render the chart to SVG")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("serve", help="serve charts to editor clients")
    p.add_argument("dir")
    p.add_argument("--port", type=int, default=None,
                   help="port (default: PCHART_PORT or 8390)")
    p.add_argument("--ui", default=None, help="static editor files to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FindingsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FINDINGS
    except PchartError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FINDINGS


if __name__ == "__main__":
    sys.exit(main())
