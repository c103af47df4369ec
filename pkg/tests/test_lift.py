import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from fiscids import expr as E
from fiscids.calculus import evaluate
from fiscids.errors import BasePointDomainError, ClosureCapExceeded, UnsupportedFunction
from fiscids.examples import gaussian_expression, logpoly_expression
from fiscids.integrate import solve_batch
from fiscids.lift import canon, closure, lift
from fiscids.model import SystemClass, validate_class
from fiscids.parse import parse
from fiscids.poly import Poly, RationalFn

from strategies import DOMAIN, VARS, expressions, random_expr, rng_draw

GAUSS_NAMES = ("x1", "x2")


def test_gaussian_lift_structure():
    sys = lift(gaussian_expression(), GAUSS_NAMES)
    assert sys.N == 3
    assert sys.z0_values() == [1.0, 1.0, 0.5]
    assert validate_class(sys, SystemClass.QUADRATIC).passed
    z1, z2, z3 = (Poly.var(3, k) for k in range(3))
    # z1' = z1 (z2, z3) xi; the gradient states are affine in xi
    assert sys.F[0][0] == RationalFn(z1 * z2) and sys.F[0][1] == RationalFn(z1 * z3)
    assert [sys.F[1][0], sys.F[1][1]] == [RationalFn.const(3, -1), RationalFn.const(3, Fraction(-1, 2))]
    assert [sys.F[2][0], sys.F[2][1]] == [RationalFn.const(3, Fraction(-1, 2)), RationalFn.const(3, -1)]
    assert list(sys.h) == [RationalFn(z1)]


def test_logpoly_lift_structure():
    sys = lift(logpoly_expression(), ("x",))
    assert sys.N == 2 and sys.cls is SystemClass.RATIONAL
    z2 = Poly.var(2, 1)
    P = Poly.const(2, 2) + z2 + (z2 * z2).scale(Fraction(1, 2))
    assert sys.F[0][0] == RationalFn(P.partial(1), P)
    assert sys.F[1][0] == RationalFn.const(2, 1)
    assert sys.z0[0] == E.func("log", E.Const(Fraction(2)))
    assert sys.z0[1] == E.ZERO


def test_unsupported_function():
    with pytest.raises(UnsupportedFunction) as info:
        lift(E.Func("gamma", (E.Var("x"),)), ("x",))
    assert info.value.kind == "gamma"


def test_base_point_outside_domain():
    with pytest.raises(BasePointDomainError):
        lift("log(x)", ("x",))


def test_base_point_shift():
    sys = lift("log(x)", ("x",), base_point=[1])
    assert tuple(sys.base_point) == (Fraction(1),)
    res = solve_batch(sys, [[2.0], [0.5], [3.0]])
    assert res.outputs[0, :, 0] == pytest.approx([math.log(2), math.log(0.5), math.log(3)], abs=1e-10)


def test_cap_exceeded():
    with pytest.raises(ClosureCapExceeded):
        lift("exp(sin(x))", ("x",), cap=2)
    assert lift("exp(sin(x))", ("x",), cap=4).N <= 4


def test_companions():
    sys = lift("sin(x)", ("x",))
    defs = closure([parse("sin(x)", ["x"])], ("x",)).states
    assert E.func("cos", E.Var("x")) in defs
    assert sys.N == 2


def test_constants_become_states():
    sys = lift("pi*x", ("x",))
    res = solve_batch(sys, [[0.3]])
    assert res.outputs[0, 0, 0] == pytest.approx(math.pi * 0.3, abs=1e-12)


def _check_lift(e, rng, count=50, tol=1e-8):
    sys = lift(e, VARS, base_point=[1, 1])
    assert all(not E.free_vars(v) for v in sys.z0)
    X = rng.uniform(*DOMAIN, size=(count, 2))
    res = solve_batch(sys, X)
    assert all(err is None for err in res.errors)
    want = np.array([evaluate(e, dict(zip(VARS, x))) for x in X])
    assert np.max(np.abs(res.outputs[0, :, 0] - want)) <= tol
    return sys


@pytest.mark.parametrize("text", [
    "exp(sin(x*y))", "sqrt(1 + x^2)", "tan(x - y)", "atan(x*y)", "log(x) + y^3",
    "pow(x, 2/3)", "cos(x)^2 + sin(y)", "1/(x + y)", "exp(x)*log(1+y^2)",
])
def test_correctness_named(text):
    _check_lift(parse(text, VARS), np.random.default_rng(4))


def test_correctness_random():
    rng = np.random.default_rng(20261016)
    for _ in range(15):
        _check_lift(random_expr(rng_draw(rng), 3), rng)


@settings(max_examples=30, deadline=None)
@given(expressions(depth=2))
def test_idempotent_closure(e):
    cl = closure([canon(e, VARS)], VARS)
    again = closure(list(cl.states), VARS)
    assert set(again.states) == set(cl.states)


@settings(max_examples=30, deadline=None)
@given(expressions(depth=2))
def test_z0_is_constant(e):
    sys = lift(e, VARS, base_point=[1, 1])
    for v in sys.z0:
        assert not E.free_vars(v)
        assert math.isfinite(evaluate(v))


def test_lift_is_deterministic():
    a = lift("exp(sin(x*y)) + cos(y)", VARS)
    b = lift("cos(y) + exp(sin(y*x))", VARS)
    assert a == b
