"""pchart: a workbench for hierarchical statecharts with timed and
probabilistic transitions.

Charts are modeled as immutable documents, compiled to probabilistic
guarded commands with priority, analyzed by exhaustive enumeration and
value iteration, and emitted as C or PRISM sources. A layout engine and
SVG renderer drive both the CLI and the browser editor protocol.

Scripting entry points:

    from pchart import ChartBuilder, compile_chart, parse_chart
    chart = parse_chart(open("charts/coin.pchart").read())
    program = compile_chart(chart)
"""

from .build import ChartBuilder, cond, goto, prob
from .chartio import parse_chart, serialize_chart
from .compiler import compile_chart, interpret_step, pretty_print
from .analysis import (
    check_conflicts,
    check_invariants,
    enumerate_states,
    expected_cost,
    reachability,
    simulate,
)
from .codegen import gen_c, gen_prism
from .layout import layout_chart
from .model import Chart, accumulated_invariant, validate
from .render import build_display_list, render_chart_svg, render_svg
from .service import apply_action

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "ChartBuilder",
    "accumulated_invariant",
    "apply_action",
    "build_display_list",
    "check_conflicts",
    "check_invariants",
    "compile_chart",
    "cond",
    "enumerate_states",
    "expected_cost",
    "gen_c",
    "gen_prism",
    "goto",
    "interpret_step",
    "layout_chart",
    "parse_chart",
    "pretty_print",
    "prob",
    "reachability",
    "render_chart_svg",
    "render_svg",
    "serialize_chart",
    "simulate",
    "validate",
    "__version__",
]
