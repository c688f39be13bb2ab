"""The guard/action/invariant expression language and transition labels.

Grammar (EBNF), loosest binding first:

    expr      = or ;
    or        = and { "or" and } ;
    and       = neg { "and" neg } ;
    neg       = "not" neg | cmp ;
    cmp       = add [ relop add ] ;            (* non-associative *)
    relop     = "=" | "/=" | "<" | "<=" | ">" | ">=" ;
    add       = mul { ("+" | "-") mul } ;
    mul       = unary { ("*" | "div" | "mod") unary } ;
    unary     = "-" unary | atom ;
    atom      = INT | "true" | "false" | IDENT | "(" expr ")" ;

    label     = trigger [ "[" expr "]" ] [ "/" assigns ] [ "$" rational ] ;
    trigger   = IDENT
              | "after" ( INT | "[" INT "," INT "]" )
              | "uniform" "[" INT "," INT "]"
              | "exp" rational ;
    assigns   = IDENT ":=" expr { "," IDENT ":=" expr } ;
    rational  = INT [ "/" INT ] ;

    vardecl   = IDENT ":" ( "bool" | signed "." "." signed ) "=" signed_atom ;

Keywords `and or not div mod true false after uniform exp bool` are
reserved. `div` and `mod` are floored (Python semantics), so `(-7) div 2`
is -4 and `mod` is nonnegative for positive divisors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .errors import (
    EvalError,
    ExprSyntaxError,
    ExprTypeError,
    UnknownVariableError,
)

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" | "not"
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * div mod = /= < <= > >= and or
    lhs: Expr
    rhs: Expr


TRUE = BoolLit(True)
FALSE = BoolLit(False)


@dataclass(frozen=True)
class VarType:
    """Either bool or a bounded integer range."""

    base: str  # "bool" | "int"
    lo: Optional[int] = None
    hi: Optional[int] = None

    def __str__(self) -> str:
        if self.base == "bool":
            return "bool"
        return f"{self.lo}..{self.hi}"


BOOL = VarType("bool")


def int_range(lo: int, hi: int) -> VarType:
    return VarType("int", lo, hi)


TypeEnv = Mapping[str, VarType]
Value = Union[int, bool]
Valuation = Mapping[str, Value]


@dataclass(frozen=True)
class Assignment:
    name: str
    expr: Expr


@dataclass(frozen=True)
class Trigger:
    """Event or timed trigger of a transition."""

    kind: str  # "event" | "after" | "after_nondet" | "after_uniform" | "after_exp"
    event: Optional[str] = None
    lo: Optional[int] = None
    hi: Optional[int] = None
    rate: Optional[Fraction] = None


def event_trigger(name: str) -> Trigger:
    return Trigger("event", event=name)


@dataclass(frozen=True)
class TransitionLabel:
    trigger: Trigger
    guard: Optional[Expr] = None
    actions: tuple[Assignment, ...] = ()
    cost: Optional[Fraction] = None


# ---------------------------------------------------------------------------
# Lexer

KEYWORDS = {
    "and", "or", "not", "div", "mod", "true", "false",
    "after", "uniform", "exp", "bool",
}

_SYMBOLS = [":=", "..", "<=", ">=", "/=", "<", ">", "=", "+", "-", "*",
            "(", ")", "[", "]", ",", "/", "$", ":"]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>"
    + "|".join(re.escape(s) for s in _SYMBOLS)
    + r"))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | keyword | symbol | "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(at, {"token"}, stripped[0])
        pos = m.end()
        if m.group("int") is not None:
            tokens.append(Token("int", m.group("int"), m.start("int")))
        elif m.group("ident") is not None:
            word = m.group("ident")
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, m.start("ident")))
        else:
            sym = m.group("sym")
            tokens.append(Token(sym, sym, m.start("sym")))
    tokens.append(Token("end", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_RELOPS = ("=", "/=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        j = min(self.i + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "end":
            self.i += 1
        return tok

    def accept(self, kind: str) -> Optional[Token]:
        if self.cur.kind == kind:
            return self.advance()
        return None

    def expect(self, kind: str) -> Token:
        if self.cur.kind != kind:
            raise ExprSyntaxError(self.cur.pos, {kind}, self.cur.text or "end of input")
        return self.advance()

    def fail(self, expected: set[str]):
        raise ExprSyntaxError(self.cur.pos, expected, self.cur.text or "end of input")

    # expression levels -----------------------------------------------------

    def expr(self) -> Expr:
        return self.or_()

    def or_(self) -> Expr:
        e = self.and_()
        while self.accept("or"):
            e = Binary("or", e, self.and_())
        return e

    def and_(self) -> Expr:
        e = self.neg()
        while self.accept("and"):
            e = Binary("and", e, self.neg())
        return e

    def neg(self) -> Expr:
        if self.accept("not"):
            return Unary("not", self.neg())
        return self.cmp()

    def cmp(self) -> Expr:
        e = self.add()
        if self.cur.kind in _RELOPS:
            op = self.advance().kind
            rhs = self.add()
            e = Binary(op, e, rhs)
            if self.cur.kind in _RELOPS:
                self.fail({"and", "or", "end of input"})
        return e

    def add(self) -> Expr:
        e = self.mul()
        while self.cur.kind in ("+", "-"):
            op = self.advance().kind
            e = Binary(op, e, self.mul())
        return e

    def mul(self) -> Expr:
        e = self.unary()
        while self.cur.kind in ("*", "div", "mod"):
            op = self.advance().kind
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("neg", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.cur
        if tok.kind == "int":
            self.advance()
            return IntLit(int(tok.text))
        if tok.kind == "true":
            self.advance()
            return TRUE
        if tok.kind == "false":
            self.advance()
            return FALSE
        if tok.kind == "ident":
            self.advance()
            return Var(tok.text)
        if tok.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        self.fail({"integer", "identifier", "true", "false", "(", "-", "not"})

    # label parts -----------------------------------------------------------

    def nat(self) -> int:
        tok = self.expect("int")
        return int(tok.text)

    def rational(self) -> Fraction:
        num = self.nat()
        # "1/2" is a rational; "1 / x := 2" starts the action list.
        if self.cur.kind == "/" and self.peek().kind == "int":
            self.advance()
            den = self.nat()
            if den == 0:
                raise ExprSyntaxError(self.cur.pos, {"nonzero denominator"}, "0")
            return Fraction(num, den)
        return Fraction(num)

    def interval(self, require_positive: bool) -> tuple[int, int]:
        self.expect("[")
        lo_pos = self.cur.pos
        lo = self.nat()
        self.expect(",")
        hi = self.nat()
        self.expect("]")
        if require_positive and lo < 1:
            raise ExprSyntaxError(lo_pos, {"positive lower bound"}, str(lo))
        if lo > hi:
            raise ExprSyntaxError(lo_pos, {"lo <= hi"}, f"{lo},{hi}")
        return lo, hi

    def trigger(self) -> Trigger:
        if self.cur.kind == "ident":
            return event_trigger(self.advance().text)
        if self.accept("after"):
            if self.cur.kind == "[":
                lo, hi = self.interval(require_positive=True)
                return Trigger("after_nondet", lo=lo, hi=hi)
            pos = self.cur.pos
            n = self.nat()
            if n < 1:
                raise ExprSyntaxError(pos, {"positive tick count"}, str(n))
            return Trigger("after", lo=n, hi=n)
        if self.accept("uniform"):
            lo, hi = self.interval(require_positive=True)
            return Trigger("after_uniform", lo=lo, hi=hi)
        if self.accept("exp"):
            pos = self.cur.pos
            rate = self.rational()
            if rate <= 0:
                raise ExprSyntaxError(pos, {"positive rate"}, str(rate))
            return Trigger("after_exp", rate=rate)
        self.fail({"event name", "after", "uniform", "exp"})

    def assigns(self) -> tuple[Assignment, ...]:
        out = [self.assign()]
        while self.accept(","):
            out.append(self.assign())
        names = [a.name for a in out]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise ExprSyntaxError(self.cur.pos, {"distinct assignment targets"}, dup)
        return tuple(out)

    def assign(self) -> Assignment:
        name = self.expect("ident").text
        self.expect(":=")
        return Assignment(name, self.expr())

    def label(self) -> TransitionLabel:
        trig = self.trigger()
        guard = None
        if self.accept("["):
            guard = self.expr()
            self.expect("]")
        actions: tuple[Assignment, ...] = ()
        if self.accept("/"):
            actions = self.assigns()
        cost = None
        if self.accept("$"):
            cost = self.rational()
        return TransitionLabel(trig, guard, actions, cost)

    def signed_int(self) -> int:
        if self.accept("-"):
            return -self.nat()
        return self.nat()

    def vardecl(self) -> tuple[str, VarType, Expr]:
        name = self.expect("ident").text
        self.expect(":")
        if self.accept("bool"):
            vt = BOOL
        else:
            lo = self.signed_int()
            self.expect("..")
            hi_pos = self.cur.pos
            hi = self.signed_int()
            if lo > hi:
                raise ExprSyntaxError(hi_pos, {"lo <= hi"}, str(hi))
            vt = int_range(lo, hi)
        self.expect("=")
        if vt.base == "bool":
            if self.accept("true"):
                init: Expr = TRUE
            elif self.accept("false"):
                init = FALSE
            else:
                self.fail({"true", "false"})
        else:
            init = IntLit(self.signed_int())
        return name, vt, init

    def done(self):
        if self.cur.kind != "end":
            self.fail({"end of input"})


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.done()
    return e


def parse_label(text: str) -> TransitionLabel:
    p = _Parser(text)
    lab = p.label()
    p.done()
    return lab


def parse_actions(text: str) -> tuple[Assignment, ...]:
    """Parse a bare `x := e, y := f` list (used by branch-local actions)."""
    text = text.strip()
    if not text:
        return ()
    p = _Parser(text)
    acts = p.assigns()
    p.done()
    return acts


def parse_vardecl(text: str) -> tuple[str, VarType, Expr, Optional[str]]:
    """Parse `name: 0..9 = 3` or `name: bool = false`, `// comment` suffix allowed."""
    comment = None
    if "//" in text:
        text, comment = text.split("//", 1)
        comment = comment.strip()
    p = _Parser(text)
    name, vt, init = p.vardecl()
    p.done()
    return name, vt, init, comment


def parse_rational(text: str) -> Fraction:
    """Exact rational from `2`, `1/2`, or a decimal string like `0.5`."""
    return Fraction(str(text).strip())


# ---------------------------------------------------------------------------
# Type checking

_INT_OPS = ("+", "-", "*", "div", "mod")
_ORDER_OPS = ("<", "<=", ">", ">=")
_EQ_OPS = ("=", "/=")
_BOOL_OPS = ("and", "or")


def typecheck(e: Expr, env: TypeEnv) -> str:
    """Return "int" or "bool", or raise ExprTypeError/UnknownVariableError."""
    if isinstance(e, IntLit):
        return "int"
    if isinstance(e, BoolLit):
        return "bool"
    if isinstance(e, Var):
        if e.name not in env:
            raise UnknownVariableError(e.name)
        return "bool" if env[e.name].base == "bool" else "int"
    if isinstance(e, Unary):
        want = "int" if e.op == "neg" else "bool"
        got = typecheck(e.arg, env)
        if got != want:
            raise ExprTypeError(pretty(e), want, got)
        return want
    if isinstance(e, Binary):
        lt = typecheck(e.lhs, env)
        rt = typecheck(e.rhs, env)
        if e.op in _INT_OPS:
            if lt != "int" or rt != "int":
                raise ExprTypeError(pretty(e), "int", lt if lt != "int" else rt)
            return "int"
        if e.op in _ORDER_OPS:
            if lt != "int" or rt != "int":
                raise ExprTypeError(pretty(e), "int", lt if lt != "int" else rt)
            return "bool"
        if e.op in _EQ_OPS:
            if lt != rt:
                raise ExprTypeError(pretty(e), lt, rt)
            return "bool"
        if e.op in _BOOL_OPS:
            if lt != "bool" or rt != "bool":
                raise ExprTypeError(pretty(e), "bool", lt if lt != "bool" else rt)
            return "bool"
    raise ExprTypeError(repr(e), "expression", type(e).__name__)


def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return free_vars(e.arg)
    if isinstance(e, Binary):
        return free_vars(e.lhs) | free_vars(e.rhs)
    return set()


# ---------------------------------------------------------------------------
# Evaluation

def eval_expr(e: Expr, v: Valuation) -> Value:
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        try:
            return v[e.name]
        except KeyError:
            raise UnknownVariableError(e.name) from None
    if isinstance(e, Unary):
        a = eval_expr(e.arg, v)
        return -a if e.op == "neg" else not a
    if isinstance(e, Binary):
        op = e.op
        if op == "and":
            return bool(eval_expr(e.lhs, v)) and bool(eval_expr(e.rhs, v))
        if op == "or":
            return bool(eval_expr(e.lhs, v)) or bool(eval_expr(e.rhs, v))
        a = eval_expr(e.lhs, v)
        b = eval_expr(e.rhs, v)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "div":
            if b == 0:
                raise EvalError("division by zero")
            return a // b
        if op == "mod":
            if b == 0:
                raise EvalError("division by zero")
            return a % b
        if op == "=":
            return a == b
        if op == "/=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
    raise EvalError(f"cannot evaluate {e!r}")


# ---------------------------------------------------------------------------
# Pretty printing (canonical text; parse(pretty(e)) == e)

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "add": 5, "mul": 6, "neg": 7}


def _level(e: Expr) -> int:
    if isinstance(e, Binary):
        if e.op == "or":
            return _PREC["or"]
        if e.op == "and":
            return _PREC["and"]
        if e.op in _RELOPS:
            return _PREC["cmp"]
        if e.op in ("+", "-"):
            return _PREC["add"]
        return _PREC["mul"]
    if isinstance(e, Unary):
        return _PREC["not"] if e.op == "not" else _PREC["neg"]
    return 9


def _render(e: Expr, min_level: int) -> str:
    lvl = _level(e)
    if isinstance(e, IntLit):
        s = str(e.value)
    elif isinstance(e, BoolLit):
        s = "true" if e.value else "false"
    elif isinstance(e, Var):
        s = e.name
    elif isinstance(e, Unary):
        if e.op == "not":
            s = "not " + _render(e.arg, _PREC["not"])
        else:
            s = "-" + _render(e.arg, _PREC["neg"])
    else:
        assert isinstance(e, Binary)
        if e.op in _RELOPS:
            # comparisons are non-associative: operands stay at add level
            s = f"{_render(e.lhs, lvl + 1)} {e.op} {_render(e.rhs, lvl + 1)}"
        else:
            s = f"{_render(e.lhs, lvl)} {e.op} {_render(e.rhs, lvl + 1)}"
    if lvl < min_level:
        return f"({s})"
    return s


def pretty(e: Expr) -> str:
    return _render(e, 0)


def format_rational(r: Fraction) -> str:
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def format_trigger(t: Trigger) -> str:
    if t.kind == "event":
        return t.event
    if t.kind == "after":
        return f"after {t.lo}"
    if t.kind == "after_nondet":
        return f"after [{t.lo},{t.hi}]"
    if t.kind == "after_uniform":
        return f"uniform [{t.lo},{t.hi}]"
    return f"exp {format_rational(t.rate)}"


def format_actions(actions: tuple[Assignment, ...]) -> str:
    return ", ".join(f"{a.name} := {pretty(a.expr)}" for a in actions)


def format_label(lab: TransitionLabel) -> str:
    parts = [format_trigger(lab.trigger)]
    if lab.guard is not None:
        parts.append(f"[{pretty(lab.guard)}]")
    if lab.actions:
        parts.append("/ " + format_actions(lab.actions))
    if lab.cost is not None:
        parts.append(f"$ {format_rational(lab.cost)}")
    return " ".join(parts)
