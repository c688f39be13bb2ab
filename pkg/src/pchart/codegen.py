"""C and PRISM source generation from compiled programs.

The C path serves deterministic (sub)charts: one function per event, an
if/else-if chain per function evaluating that event's commands in priority
order, so the generated code fires exactly the command interpret_step
would. Chart comments ride along: variable comments above declarations,
transition comments above their branch.

The PRISM path serves whole charts: priorities are compiled away by
strengthening every guard with the negation of all strictly-higher
priority guards of the same event, queries become PCTL properties over
state labels, and costs land in a single rewards structure (per-outcome
costs as their expectation, state rates on tick transitions).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import ProbabilisticChart
from .expr import Binary, BoolLit, Expr, IntLit, TRUE, Unary, Var, free_vars
from .compiler import GCProgram, GuardedCommand, Outcome, _conj
from .model import Chart, StateId, dfs_order


# ---------------------------------------------------------------------------
# Expression printers

_LEVELS = {"or": 1, "and": 2, "cmp": 3, "add": 4, "mul": 5, "unary": 6, "atom": 7}
_CMP_OPS = ("=", "/=", "<", "<=", ">", ">=")


def _level_of(e: Expr) -> int:
    if isinstance(e, Binary):
        if e.op == "or":
            return _LEVELS["or"]
        if e.op == "and":
            return _LEVELS["and"]
        if e.op in _CMP_OPS:
            return _LEVELS["cmp"]
        if e.op in ("+", "-"):
            return _LEVELS["add"]
        return _LEVELS["mul"]
    if isinstance(e, Unary):
        return _LEVELS["unary"]
    return _LEVELS["atom"]


class _CPrinter:
    OPS = {"or": "||", "and": "&&", "=": "==", "/=": "!=", "<": "<", "<=": "<=",
           ">": ">", ">=": ">=", "+": "+", "-": "-", "*": "*"}

    def __init__(self):
        self.uses_div = False
        self.uses_mod = False

    def emit(self, e: Expr, need: int = 0) -> str:
        lvl = _level_of(e)
        if isinstance(e, IntLit):
            s = str(e.value)
        elif isinstance(e, BoolLit):
            s = "1" if e.value else "0"
        elif isinstance(e, Var):
            s = e.name
        elif isinstance(e, Unary):
            if e.op == "not":
                s = "!" + self.emit(e.arg, _LEVELS["unary"])
            else:
                s = "-" + self.emit(e.arg, _LEVELS["unary"])
        else:
            assert isinstance(e, Binary)
            if e.op == "div":
                self.uses_div = True
                s = f"pchart_div({self.emit(e.lhs)}, {self.emit(e.rhs)})"
                lvl = _LEVELS["atom"]
            elif e.op == "mod":
                self.uses_mod = True
                s = f"pchart_mod({self.emit(e.lhs)}, {self.emit(e.rhs)})"
                lvl = _LEVELS["atom"]
            elif e.op in _CMP_OPS:
                s = f"{self.emit(e.lhs, lvl + 1)} {self.OPS[e.op]} {self.emit(e.rhs, lvl + 1)}"
            else:
                s = f"{self.emit(e.lhs, lvl)} {self.OPS[e.op]} {self.emit(e.rhs, lvl + 1)}"
        if lvl < need:
            return f"({s})"
        return s


def _prism_bool(e: Expr, bool_vars: set[str]) -> bool:
    if isinstance(e, BoolLit):
        return True
    if isinstance(e, Var):
        return e.name in bool_vars
    if isinstance(e, Unary):
        return e.op == "not"
    if isinstance(e, Binary):
        return e.op in ("and", "or") or e.op in _CMP_OPS
    return False


class _PrismPrinter:
    OPS = {"or": "|", "and": "&", "=": "=", "/=": "!=", "<": "<", "<=": "<=",
           ">": ">", ">=": ">=", "+": "+", "-": "-", "*": "*"}

    def __init__(self, bool_vars: set[str]):
        self.bool_vars = bool_vars

    def emit(self, e: Expr, need: int = 0) -> str:
        lvl = _level_of(e)
        if isinstance(e, IntLit):
            s = str(e.value)
        elif isinstance(e, BoolLit):
            s = "true" if e.value else "false"
        elif isinstance(e, Var):
            s = e.name
        elif isinstance(e, Unary):
            if e.op == "not":
                s = "!" + self.emit(e.arg, _LEVELS["unary"])
            else:
                s = "-" + self.emit(e.arg, _LEVELS["unary"])
        else:
            assert isinstance(e, Binary)
            if e.op == "div":
                s = f"floor({self.emit(e.lhs)}/{self.emit(e.rhs)})"
                lvl = _LEVELS["atom"]
            elif e.op == "mod":
                s = f"mod({self.emit(e.lhs)},{self.emit(e.rhs)})"
                lvl = _LEVELS["atom"]
            elif e.op in ("=", "/=") and _prism_bool(e.lhs, self.bool_vars):
                inner = f"{self.emit(e.lhs, _LEVELS['cmp'] + 1)} <=> {self.emit(e.rhs, _LEVELS['cmp'] + 1)}"
                s = f"({inner})" if e.op == "=" else f"!({inner})"
                lvl = _LEVELS["atom"]
            elif e.op in _CMP_OPS:
                s = f"{self.emit(e.lhs, lvl + 1)}{self.OPS[e.op]}{self.emit(e.rhs, lvl + 1)}"
            else:
                op = self.OPS[e.op]
                pad = " " if op in ("&", "|") else ""
                s = f"{self.emit(e.lhs, lvl)}{pad}{op}{pad}{self.emit(e.rhs, lvl + 1)}"
        if lvl < need:
            return f"({s})"
        return s


def format_prism_rational(p: Fraction) -> str:
    """Terminating decimals print as decimals, everything else as num/den;
    both parse exactly in PRISM."""
    if p.denominator == 1:
        return str(p.numerator)
    den = p.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{p.numerator}/{p.denominator}"
    digits = max(twos, fives)
    scaled = p.numerator * 10**digits // p.denominator
    text = f"{scaled:0{digits + 1}d}"
    return f"{text[:-digits]}.{text[-digits:]}" if digits else text


# ---------------------------------------------------------------------------
# C generation


@dataclass(frozen=True)
class CCodeUnit:
    header: str
    source: str
    harness: str
    event_functions: tuple[str, ...]


_DIV_HELPERS = {
    "div": (
        "static int pchart_div(int a, int b) {\n"
        "    int q = a / b;\n"
        "    if ((a % b != 0) && ((a < 0) != (b < 0))) {\n"
        "        q -= 1;\n"
        "    }\n"
        "    return q;\n"
        "}\n"
    ),
    "mod": (
        "static int pchart_mod(int a, int b) {\n"
        "    int r = a % b;\n"
        "    if (r != 0 && ((r < 0) != (b < 0))) {\n"
        "        r += b;\n"
        "    }\n"
        "    return r;\n"
        "}\n"
    ),
}


def _c_updates(pr: _CPrinter, outcome: Outcome, indent: str) -> list[str]:
    updates = outcome.updates
    targets = {name for name, _ in updates}
    reads = set()
    for _, e in updates:
        reads |= free_vars(e)
    lines = []
    if len(updates) > 1 and targets & reads:
        # parallel assignment: evaluate every right side before writing
        for name, e in updates:
            lines.append(f"{indent}int pchart_new_{name} = {pr.emit(e)};")
        for name, _ in updates:
            lines.append(f"{indent}{name} = pchart_new_{name};")
    else:
        for name, e in updates:
            lines.append(f"{indent}{name} = {pr.emit(e)};")
    return lines


def gen_c(p: GCProgram, chart: Chart) -> CCodeUnit:
    """C99 sources for a deterministic program: no probabilistic outcomes."""
    for c in p.commands:
        if len(c.outcomes) > 1:
            raise ProbabilisticChart(c.id)

    name = p.name
    guard = f"PCHART_{name.upper()}_H"
    user_events = [e for e in p.events if e != "tick"]
    event_functions = [f"{name}_event_{e}" for e in user_events]

    header_lines = [
        f"/* Event interface of chart `{name}`. Generated code; do not edit. */",
        f"#ifndef {guard}",
        f"#define {guard}",
        "",
        f"void {name}_init(void);",
    ]
    for fn in event_functions:
        header_lines.append(f"void {fn}(void);")
    header_lines += [
        f"void {name}_tick(void);",
        f"void {name}_dump_state(void);",
        "",
        f"#endif /* {guard} */",
    ]
    header = "\n".join(header_lines) + "\n"

    pr = _CPrinter()
    body_chunks: list[str] = []

    def emit_event_function(fn_name: str, event: str):
        lines = [f"void {fn_name}(void) {{"]
        first = True
        for c in p.commands_for(event):
            cond = pr.emit(c.guard)
            keyword = "if" if first else "} else if"
            if c.comment:
                lines.append(f"    // {c.comment}")
            lines.append(f"    {keyword} ({cond}) {{")
            lines.extend(_c_updates(pr, c.outcomes[0], "        "))
            first = False
        if not first:
            lines.append("    }")
        lines.append("}")
        return "\n".join(lines)

    for e, fn in zip(user_events, event_functions):
        body_chunks.append(emit_event_function(fn, e))
    body_chunks.append(emit_event_function(f"{name}_tick", "tick"))

    decls = []
    for v in p.variables:
        if v.comment:
            decls.append(f"// {v.comment}")
        decls.append(f"static int {v.name};")
    init_lines = [f"void {name}_init(void) {{"]
    for v in p.variables:
        init_lines.append(f"    {v.name} = {int(v.init)};")
    init_lines.append("}")

    dump_lines = [f"void {name}_dump_state(void) {{"]
    for v in p.variables:
        dump_lines.append(f'    printf("{v.name}=%d\\n", {v.name});')
    dump_lines.append("}")

    source_parts = [
        f"/* Implementation of chart `{name}`. Generated code; do not edit. */",
        "#include <stdio.h>",
        "",
        f'#include "{name}.h"',
        "",
        "\n".join(decls),
    ]
    helpers = []
    if pr.uses_div:
        helpers.append(_DIV_HELPERS["div"])
    if pr.uses_mod:
        helpers.append(_DIV_HELPERS["mod"])
    if helpers:
        source_parts.append("\n".join(helpers).rstrip())
    source_parts.append("\n".join(init_lines))
    source_parts.extend(body_chunks)
    source_parts.append("\n".join(dump_lines))
    source = "\n\n".join(part for part in source_parts if part) + "\n"

    harness_lines = [
        f"/* Line-driven harness for `{name}`: event name in, state dump out. */",
        "#include <stdio.h>",
        "#include <string.h>",
        "",
        f'#include "{name}.h"',
        "",
        "int main(void) {",
        "    char line[128];",
        f"    {name}_init();",
        "    while (fgets(line, sizeof line, stdin)) {",
        '        line[strcspn(line, "\\r\\n")] = 0;',
        "        if (line[0] == 0) {",
        "            continue;",
        "        }",
        '        if (strcmp(line, "!reset") == 0) {',
        f"            {name}_init();",
    ]
    for e, fn in zip(user_events, event_functions):
        harness_lines.append(f'        }} else if (strcmp(line, "{e}") == 0) {{')
        harness_lines.append(f"            {fn}();")
    harness_lines += [
        '        } else if (strcmp(line, "tick") == 0) {',
        f"            {name}_tick();",
        "        }",
        f"        {name}_dump_state();",
        '        printf(".\\n");',
        "        fflush(stdout);",
        "    }",
        "    return 0;",
        "}",
    ]
    harness = "\n".join(harness_lines) + "\n"

    return CCodeUnit(header, source, harness, tuple(event_functions))


# ---------------------------------------------------------------------------
# PRISM generation


@dataclass(frozen=True)
class PrismUnit:
    model: str
    properties: str


def strengthened_guards(p: GCProgram) -> list[tuple[GuardedCommand, Expr]]:
    """Priorities compiled away: each command's guard conjoined with the
    negation of every strictly-higher-priority guard of its event."""
    out = []
    for c in p.commands:
        higher = [d.guard for d in p.commands
                  if d.event == c.event and d.priority > c.priority]
        out.append((c, _conj([c.guard] + [Unary("not", g) for g in higher])))
    return out


def _label_names(chart: Chart, sids: list[StateId]) -> dict[StateId, str]:
    names = [chart.states[s].name for s in sids]
    return {
        s: (f"label_{chart.states[s].name}" if names.count(chart.states[s].name) == 1
            else f"label_{chart.states[s].name}_{s}")
        for s in sids
    }


def gen_prism(p: GCProgram, chart: Chart) -> PrismUnit:
    """PRISM mdp model plus PCTL properties for queries and invariants."""
    bool_vars = {v.name for v in p.variables if v.is_bool}
    pr = _PrismPrinter(bool_vars)

    lines = [f"// {p.name}: probabilistic guarded commands as a PRISM mdp", "mdp", ""]
    lines.append(f"module {p.name}")
    if p.variables:
        for v in p.variables:
            comment = f" // {v.comment}" if v.comment else ""
            if v.is_bool:
                init = "true" if v.init else "false"
                lines.append(f"  {v.name} : bool init {init};{comment}")
            else:
                lines.append(f"  {v.name} : [{v.lo}..{v.hi}] init {int(v.init)};{comment}")
    else:
        lines.append("  _alive : [0..0] init 0; // placeholder: chart has no variables")
    lines.append("")

    strengthened = strengthened_guards(p)
    for c, guard in strengthened:
        if c.comment:
            lines.append(f"  // {c.comment}")
        gtext = pr.emit(guard)
        outs = []
        for o in c.outcomes:
            if o.updates:
                upd = "&".join(f"({n}'={pr.emit(e)})" for n, e in o.updates)
            else:
                upd = "true"
            outs.append((o.prob, upd))
        if len(outs) == 1:
            rhs = outs[0][1]
        else:
            rhs = " + ".join(f"{format_prism_rational(q)}:{upd}" for q, upd in outs)
        lines.append(f"  [{c.event}] {gtext} -> {rhs};")
    lines.append("endmodule")
    lines.append("")

    # labels for query targets
    target_ids = sorted({q.target for q in chart.queries})
    labels = _label_names(chart, target_ids)
    for sid in target_ids:
        lines.append(f'label "{labels[sid]}" = {pr.emit(p.activity[sid], _LEVELS["atom"])};')

    # invariant labels: ok means "inactive or holding"
    inv_states = [sid for sid in dfs_order(chart) if chart.states[sid].invariant is not None]
    inv_labels = {}
    if inv_states:
        from .compiler import subst_vars
        from .model import scope_decls

        for sid in inv_states:
            st = chart.states[sid]
            rename = {
                n: p.region_map.data_names[(owner, n)]
                for n, (owner, _) in scope_decls(chart, sid).items()
            }
            inv = subst_vars(st.invariant, rename)
            name = f"inv_ok_{st.name}" if [chart.states[s].name for s in inv_states].count(st.name) == 1 else f"inv_ok_{st.name}_{sid}"
            inv_labels[sid] = name
            act = p.activity[sid]
            holds = inv if act == TRUE else Binary("or", Unary("not", act), inv)
            lines.append(f'label "{name}" = {pr.emit(holds, _LEVELS["atom"])};')

    # rewards: expected command costs plus state rates on tick
    reward_rows = []
    for c, guard in strengthened:
        expected = sum((o.prob * o.cost for o in c.outcomes), Fraction(0))
        if expected != 0:
            reward_rows.append(f"  [{c.event}] {pr.emit(guard)} : {format_prism_rational(expected)};")
    for sid, rate in p.state_cost_rates.items():
        if rate != 0:
            reward_rows.append(f"  [tick] {pr.emit(p.activity[sid])} : {format_prism_rational(rate)};")
    if reward_rows:
        lines.append("")
        lines.append('rewards "cost"')
        lines.extend(reward_rows)
        lines.append("endrewards")

    while lines and lines[-1] == "":
        lines.pop()
    model = "\n".join(lines) + "\n"

    plines = [f"// {p.name}: properties for queries and state invariants"]
    for q in chart.queries:
        label = labels[q.target]
        if q.kind in ("Pmax", "Pmin"):
            plines.append(f'{q.kind}=? [ F "{label}" ]')
        else:
            op = "Rmin" if q.kind == "Emin" else "Rmax"
            plines.append(f'{op}=? [ F "{label}" ]')
    for sid in inv_states:
        plines.append(f'Pmax=? [ F !"{inv_labels[sid]}" ]')
    properties = "\n".join(plines) + "\n"

    return PrismUnit(model, properties)
