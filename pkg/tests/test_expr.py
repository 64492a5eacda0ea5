import math

import pytest
from hypothesis import given, strategies as st

from wlsubset.errors import (
    EvaluationDivisionError,
    ExpressionSyntaxError,
    UnboundIdentifierError,
)
from wlsubset.expr import BinOp, Neg, Num, Var, evaluate, identifiers, parse_expression, pretty_print


def test_left_associative_mul_div():
    assert parse_expression("A / B * 1000") == BinOp("*", BinOp("/", Var("A"), Var("B")), Num(1000.0))


def test_parentheses_override_precedence():
    assert parse_expression("(X + Y) / TOTAL") == BinOp("/", BinOp("+", Var("X"), Var("Y")), Var("TOTAL"))


def test_mul_binds_tighter_than_add():
    assert parse_expression("a + b * c") == BinOp("+", Var("a"), BinOp("*", Var("b"), Var("c")))


def test_unary_minus_and_dotted_names():
    e = parse_expression("-L2_RQSTS.MISS * 2")
    assert e == BinOp("*", Neg(Var("L2_RQSTS.MISS")), Num(2.0))
    assert identifiers(e) == {"L2_RQSTS.MISS"}


def test_scientific_literals():
    assert evaluate(parse_expression("1.5e3 + 2E-1"), {}) == 1500.2


def test_evaluate_mpki():
    e = parse_expression("M / I * 1000")
    assert evaluate(e, {"M": 50, "I": 100000}) == pytest.approx(0.5, rel=1e-15)


def test_self_subtraction_is_zero():
    assert evaluate(parse_expression("X - X"), {"X": 123.456}) == 0.0


def test_pretty_print_minimal_parens():
    assert pretty_print(parse_expression("((a)) - (b - c)")) == "a - (b - c)"
    assert pretty_print(parse_expression("(a - b) - c")) == "a - b - c"
    assert pretty_print(parse_expression("1000 * L2_MISS / INS")) == "1000 * L2_MISS / INS"


def test_division_by_zero_names_subexpression():
    with pytest.raises(EvaluationDivisionError) as err:
        evaluate(parse_expression("A + B / (C - C)"), {"A": 1, "B": 2, "C": 3})
    assert "B / (C - C)" in str(err.value)


def test_unbound_identifier():
    with pytest.raises(UnboundIdentifierError, match="MISSING"):
        evaluate(parse_expression("MISSING + 1"), {})


@pytest.mark.parametrize(
    "text, offset",
    [
        ("", 0),
        ("A + * B", 4),
        ("(A", 2),
        ("A B", 2),
        ("A + é", 4),
        ("é + A", 0),
        ("ab + 1 $", 7),
    ],
)
def test_syntax_error_byte_offset(text, offset):
    with pytest.raises(ExpressionSyntaxError) as err:
        parse_expression(text)
    assert err.value.offset == offset
    assert f"byte offset {offset}" in str(err.value)


names = st.sampled_from(["A", "B", "INST_RETIRED.ANY", "x_1"])
numbers = st.floats(min_value=0, max_value=1e12, allow_nan=False, allow_infinity=False)
leaves = st.one_of(names.map(Var), numbers.map(Num))
trees = st.recursive(
    leaves,
    lambda sub: st.one_of(
        sub.map(Neg),
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda t: BinOp(*t)),
    ),
    max_leaves=12,
)


@given(trees)
def test_pretty_print_round_trip(tree):
    text = pretty_print(tree)
    assert parse_expression(text) == tree
    assert pretty_print(parse_expression(text)) == text


@given(trees, st.floats(min_value=0.5, max_value=4), st.floats(min_value=0.5, max_value=4))
def test_round_trip_preserves_value(tree, a, b):
    env = {"A": a, "B": b, "INST_RETIRED.ANY": a + b, "x_1": a * b}
    try:
        v1 = evaluate(tree, env)
    except EvaluationDivisionError:
        return
    v2 = evaluate(parse_expression(pretty_print(tree)), env)
    assert v1 == v2 or (math.isnan(v1) and math.isnan(v2))
