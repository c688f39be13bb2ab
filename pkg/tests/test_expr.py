"""Expression language: lexer, parser, types, evaluation, labels."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from pchart.errors import (
    EvalError,
    ExprSyntaxError,
    ExprTypeError,
    UnknownVariableError,
)
from pchart.expr import (
    BOOL,
    Binary,
    BoolLit,
    IntLit,
    Unary,
    Var,
    eval_expr,
    format_label,
    int_range,
    parse_expr,
    parse_label,
    parse_vardecl,
    pretty,
    typecheck,
)


def test_precedence_chain():
    e = parse_expr("x + 1 <= 3 and not b")
    assert e == Binary(
        "and",
        Binary("<=", Binary("+", Var("x"), IntLit(1)), IntLit(3)),
        Unary("not", Var("b")),
    )


def test_mod_eval():
    assert eval_expr(parse_expr("7 mod 3"), {}) == 1


def test_comparison_non_associative():
    with pytest.raises(ExprSyntaxError):
        parse_expr("x < y < z")


def test_not_binds_looser_than_comparison():
    e = parse_expr("not x < 3")
    assert e == Unary("not", Binary("<", Var("x"), IntLit(3)))


def test_mul_before_add():
    assert eval_expr(parse_expr("2 + 3 * 4"), {}) == 14
    assert eval_expr(parse_expr("(2 + 3) * 4"), {}) == 20


def test_unary_minus():
    assert eval_expr(parse_expr("-7 + 2"), {}) == -5
    assert eval_expr(parse_expr("3 - -2"), {}) == 5


def test_floored_division():
    assert eval_expr(parse_expr("(-7) div 2"), {}) == -4
    assert eval_expr(parse_expr("7 div 2"), {}) == 3
    assert eval_expr(parse_expr("(-7) mod 2"), {}) == 1


def test_division_by_zero():
    with pytest.raises(EvalError):
        eval_expr(parse_expr("1 div 0"), {})
    with pytest.raises(EvalError):
        eval_expr(parse_expr("1 mod 0"), {})


def test_eval_square():
    assert eval_expr(parse_expr("x * x"), {"x": 3}) == 9


def test_typecheck_arith():
    env = {"x": int_range(0, 9)}
    assert typecheck(parse_expr("x + 1"), env) == "int"


def test_typecheck_mixed_fails():
    env = {"x": int_range(0, 9)}
    with pytest.raises(ExprTypeError):
        typecheck(parse_expr("x and true"), env)


def test_typecheck_unknown_var():
    with pytest.raises(UnknownVariableError):
        typecheck(parse_expr("y"), {})


def test_equality_needs_matching_types():
    env = {"x": int_range(0, 9), "b": BOOL}
    assert typecheck(parse_expr("x = 3"), env) == "bool"
    assert typecheck(parse_expr("b = true"), env) == "bool"
    with pytest.raises(ExprTypeError):
        typecheck(parse_expr("x = b"), env)


def test_keywords_not_identifiers():
    with pytest.raises(ExprSyntaxError):
        parse_expr("div + 1")


# --- labels -----------------------------------------------------------------


def test_label_full():
    lab = parse_label("E [x < 3] / x := x + 1 $ 2")
    assert lab.trigger.kind == "event" and lab.trigger.event == "E"
    assert lab.guard == Binary("<", Var("x"), IntLit(3))
    assert len(lab.actions) == 1
    assert lab.actions[0].name == "x"
    assert lab.actions[0].expr == Binary("+", Var("x"), IntLit(1))
    assert lab.cost == Fraction(2)


def test_label_after_interval():
    lab = parse_label("after [2,5]")
    assert lab.trigger.kind == "after_nondet"
    assert (lab.trigger.lo, lab.trigger.hi) == (2, 5)
    assert lab.guard is None and lab.actions == () and lab.cost is None


def test_label_uniform_bad_interval():
    with pytest.raises(ExprSyntaxError):
        parse_label("uniform [1,0]")


def test_label_after_deterministic():
    lab = parse_label("after 3")
    assert lab.trigger.kind == "after" and lab.trigger.lo == 3


def test_label_after_zero_rejected():
    with pytest.raises(ExprSyntaxError):
        parse_label("after 0")


def test_label_exp_rate():
    lab = parse_label("exp 3/2")
    assert lab.trigger.kind == "after_exp"
    assert lab.trigger.rate == Fraction(3, 2)


def test_label_exp_rational_vs_action_slash():
    lab = parse_label("exp 1 / x := 2")
    assert lab.trigger.rate == Fraction(1)
    assert lab.actions[0].name == "x"


def test_label_duplicate_assignment_targets():
    with pytest.raises(ExprSyntaxError):
        parse_label("E / x := 1, x := 2")


def test_label_cost_fraction():
    lab = parse_label("E $ 1/2")
    assert lab.cost == Fraction(1, 2)


def test_label_roundtrip():
    for text in [
        "E",
        "E [x < 3]",
        "E [x < 3] / x := x + 1 $ 2",
        "after 3",
        "after [2,5]",
        "uniform [1,4]",
        "exp 1/2",
        "go / a := 1, b := true",
    ]:
        assert format_label(parse_label(text)) == text


def test_vardecl():
    name, vt, init, comment = parse_vardecl("x: 0..3 = 2 // speed setting")
    assert name == "x" and vt == int_range(0, 3)
    assert init == IntLit(2) and comment == "speed setting"
    name, vt, init, comment = parse_vardecl("flag: bool = false")
    assert vt == BOOL and init == BoolLit(False) and comment is None


def test_vardecl_negative_range():
    _, vt, init, _ = parse_vardecl("t: -3..3 = -1")
    assert (vt.lo, vt.hi) == (-3, 3)
    assert eval_expr(init, {}) == -1


# --- property tests ----------------------------------------------------------

_ENV = {"x": int_range(-4, 4), "y": int_range(0, 3), "b": BOOL, "c": BOOL}


def _int_exprs(depth: int) -> st.SearchStrategy:
    base = st.one_of(
        st.integers(min_value=0, max_value=9).map(IntLit),
        st.sampled_from([Var("x"), Var("y")]),
    )
    if depth == 0:
        return base
    sub = _int_exprs(depth - 1)
    return st.one_of(
        base,
        st.builds(Unary, st.just("neg"), sub),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "div", "mod"]), sub, sub),
    )


def _bool_exprs(depth: int) -> st.SearchStrategy:
    base = st.one_of(
        st.booleans().map(BoolLit),
        st.sampled_from([Var("b"), Var("c")]),
    )
    if depth == 0:
        return base
    sub = _bool_exprs(depth - 1)
    ints = _int_exprs(depth - 1)
    return st.one_of(
        base,
        st.builds(Unary, st.just("not"), sub),
        st.builds(Binary, st.sampled_from(["and", "or"]), sub, sub),
        st.builds(Binary, st.sampled_from(["=", "/=", "<", "<=", ">", ">="]), ints, ints),
        st.builds(Binary, st.sampled_from(["=", "/="]), sub, sub),
    )


ANY_EXPR = st.one_of(_int_exprs(3), _bool_exprs(3))


@settings(max_examples=120, deadline=None)
@given(ANY_EXPR)
def test_pretty_parse_roundtrip(e):
    assert parse_expr(pretty(e)) == e


def _reference_eval(e, v):
    """Independent big-step interpreter used as the eval oracle."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        return v[e.name]
    if isinstance(e, Unary):
        x = _reference_eval(e.arg, v)
        return {"neg": lambda: -x, "not": lambda: not x}[e.op]()
    a = _reference_eval(e.lhs, v)
    b = _reference_eval(e.rhs, v)
    table = {
        "+": lambda: a + b,
        "-": lambda: a - b,
        "*": lambda: a * b,
        "div": lambda: math.floor(a / b),
        "mod": lambda: a - b * math.floor(a / b),
        "=": lambda: a == b,
        "/=": lambda: a != b,
        "<": lambda: a < b,
        "<=": lambda: a <= b,
        ">": lambda: a > b,
        ">=": lambda: a >= b,
        "and": lambda: a and b,
        "or": lambda: a or b,
    }
    return table[e.op]()


@settings(max_examples=120, deadline=None)
@given(
    ANY_EXPR,
    st.integers(min_value=-4, max_value=4),
    st.integers(min_value=0, max_value=3),
    st.booleans(),
    st.booleans(),
)
def test_eval_matches_reference(e, x, y, b, c):
    v = {"x": x, "y": y, "b": b, "c": c}
    try:
        expected = _reference_eval(e, v)
    except ZeroDivisionError:
        with pytest.raises(EvalError):
            eval_expr(e, v)
        return
    assert eval_expr(e, v) == expected


@settings(max_examples=120, deadline=None)
@given(ANY_EXPR,
       st.integers(min_value=-4, max_value=4),
       st.integers(min_value=0, max_value=3),
       st.booleans(), st.booleans())
def test_typecheck_success_means_eval_total(e, x, y, b, c):
    try:
        typecheck(e, _ENV)
    except (ExprTypeError, UnknownVariableError):
        return
    try:
        eval_expr(e, {"x": x, "y": y, "b": b, "c": c})
    except EvalError:
        pass  # division by zero remains a runtime error
