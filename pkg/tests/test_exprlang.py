import math
import random

import numpy as np
import pytest

import impulsekit.exprlang as el
from impulsekit import DomainError, ParseError
from impulsekit.exprlang import (
    BinOp, Call, Neg, Num, Var,
    Expr, kink_arguments, parse, parse_scalar, parse_vector, remap,
    substitute_states,
)


def ev(text, x=(), u=(), n=0, m=0):
    return parse(text, n, m).eval(x, u)


def test_precedence_and_associativity():
    assert ev("2+3*4") == 14.0
    assert ev("(2+3)*4") == 20.0
    assert ev("2-3-4") == -5.0
    assert ev("12/4/3") == 1.0
    assert ev("-2*3") == -6.0
    assert ev("2*-3") == -6.0
    assert ev("--5") == 5.0
    assert ev("2 - -3") == 5.0


def test_number_formats():
    assert ev("1e3") == 1000.0
    assert ev(".5 + 2.") == 2.5
    assert ev("1.5e-3") == 0.0015


def test_functions_match_math():
    assert ev("abs(0-2.5)") == 2.5
    assert ev("sign(0-3)") == -1.0
    assert ev("sign(0)") == 0.0
    assert ev("sign(7)") == 1.0
    assert ev("pow(2, 10)") == 1024.0
    assert ev("min(3, -1)") == -1.0
    assert ev("max(3, -1)") == 3.0
    assert ev("exp(1)") == math.exp(1.0)
    assert ev("ln(exp(2))") == pytest.approx(2.0, abs=1e-15)
    assert ev("sqrt(2)") == math.sqrt(2.0)
    assert ev("sin(1) + cos(1)") == math.sin(1.0) + math.cos(1.0)


def test_variables_and_dimensions():
    e = parse("x1 + 2*x2 - u1", 2, 1)
    assert e.eval([1.0, 2.0], [3.0]) == 2.0
    with pytest.raises(ParseError):
        parse("x3", 2, 1)
    with pytest.raises(ParseError):
        parse("u1", 2, 0)
    with pytest.raises(ValueError):
        e.eval([1.0], [3.0])


def test_scalar_symbol_mode():
    g = parse_scalar("3*r + r", "r")
    assert g.eval([2.0]) == 8.0
    with pytest.raises(ParseError):
        parse_scalar("x1", "r")


def test_parse_error_positions():
    with pytest.raises(ParseError) as err:
        parse("2 +\n* 3", 0, 0)
    assert err.value.line == 2
    assert err.value.col == 1
    with pytest.raises(ParseError) as err:
        parse("x1 + $", 1, 0)
    assert "$" in str(err.value)


@pytest.mark.parametrize("bad", [
    "min(1)",
    "abs(1, 2)",
    "foo(1)",
    "2 +",
    "(2",
    "2 3",
    "",
    "1e400",
])
def test_rejected_inputs(bad):
    with pytest.raises(ParseError):
        parse(bad, 2, 1)


def test_domain_errors_raise():
    with pytest.raises(DomainError):
        parse("1/x1", 1, 0).eval([0.0])
    with pytest.raises(DomainError):
        ev("ln(0-1)")
    with pytest.raises(DomainError):
        ev("ln(0)")
    with pytest.raises(DomainError):
        ev("sqrt(0-4)")
    with pytest.raises(DomainError):
        ev("exp(1000)")


def test_eval_many_flags_instead_of_raising():
    e = parse("ln(x1)", 1, 0)
    vals, errs = e.eval_many(np.array([[1.0], [0.0], [math.e]]))
    assert errs[0] == 0 and errs[2] == 0
    assert errs[1] != 0
    assert vals[0] == 0.0
    assert vals[2] == pytest.approx(1.0, abs=1e-15)


def test_eval_many_matches_eval():
    rng = random.Random(5)
    e = parse("x1*exp(0-abs(x2)) + u1*x2", 2, 1)
    X = np.array([[rng.uniform(-3, 3) for _ in range(2)] for _ in range(40)])
    U = np.array([[rng.uniform(-1, 1)] for _ in range(40)])
    vals, errs = e.eval_many(X, U)
    assert not errs.any()
    for i in range(40):
        assert vals[i] == e.eval(X[i], U[i])


def test_grad_fd():
    e = parse("x1*x1 + 3*x2", 2, 0)
    g = e.grad_fd([2.0, 5.0])
    assert g[0] == pytest.approx(4.0, abs=1e-5)
    assert g[1] == pytest.approx(3.0, abs=1e-5)


def gen_node(rng, n, m, depth):
    if depth <= 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.45:
            return Num(round(rng.uniform(0, 10), 3))
        if r < 0.8 or m == 0:
            return Var("x", rng.randint(1, n))
        return Var("u", rng.randint(1, m))
    r = rng.random()
    if r < 0.55:
        return BinOp(rng.choice("+-*/"),
                     gen_node(rng, n, m, depth - 1),
                     gen_node(rng, n, m, depth - 1))
    if r < 0.7:
        return Neg(gen_node(rng, n, m, depth - 1))
    name = rng.choice(sorted(el.FUNCTIONS))
    return Call(name, tuple(gen_node(rng, n, m, depth - 1)
                            for _ in range(el.FUNCTIONS[name])))


def test_pretty_round_trip():
    """parse(pretty(tree)) reproduces the tree for 200 generated expressions."""
    rng = random.Random(313)
    for _ in range(200):
        n = rng.randint(1, 4)
        m = rng.randint(0, 2)
        root = gen_node(rng, n, m, rng.randint(1, 5))
        e = Expr(root, n, m)
        back = parse(e.pretty(), n, m)
        assert back.root == root
        assert back.pretty() == e.pretty()


def test_kink_arguments():
    e = parse("abs(x1 - 2) + min(x1, x2) + sqrt(x2 + 5)", 2, 0)
    kinks = kink_arguments(e)
    assert len(kinks) == 3
    vals = sorted(k.eval([3.0, 1.0]) for k in kinks)
    # x1-2 = 1, x1-x2 = 2, x2+5 = 6
    assert vals == [1.0, 2.0, 6.0]
    assert kink_arguments(parse("x1*x1", 1, 0)) == []


def test_remap_shifts_indices():
    e = parse("x1 + u1", 1, 1)
    shifted = remap(e, 3, 2, x_offset=2, u_offset=1)
    assert shifted.pretty() == "x3+u2"
    assert shifted.eval([0.0, 0.0, 4.0], [0.0, 5.0]) == 9.0
    with pytest.raises(ValueError):
        remap(e, 1, 1, x_offset=2)


def test_substitute_states():
    e = parse("x1*x1 + x2", 2, 0)
    out = substitute_states(e, {1: Num(3.0), 2: Var("x", 1)}, 1, 0)
    assert out.eval([7.0]) == 16.0


def test_vector_expr_and_packed():
    v = parse_vector(["x1 + u1", "x1*x2"], 2, 1)
    assert len(v) == 2
    assert v.pretty() == ["x1+u1", "x1*x2"]
    np.testing.assert_array_equal(v.eval([2.0, 3.0], [1.0]), [3.0, 6.0])
    code, operand, offsets, stack_need = v.packed()
    assert offsets[0] == 0
    assert offsets[-1] == len(code)
    assert stack_need >= 2


def test_expr_equality_is_structural():
    assert parse("x1+1", 1, 0) == parse("x1 + 1", 1, 0)
    assert parse("x1+1", 1, 0) != parse("1+x1", 1, 0)
