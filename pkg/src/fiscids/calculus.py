"""Differentiation, numeric evaluation and rationality detection for
:mod:`fiscids.expr` trees."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import expr as E
from .errors import DomainError, UnboundVariable, UnsupportedFunction, ZeroDenominator
from .poly import Poly, RationalFn


def _name(v) -> str:
    return v.name if isinstance(v, (E.VarId, E.Var)) else str(v)


def outer_derivative(f: E.Func) -> E.Expr:
    """d f(u) / du, written with f itself and its companions so that it is
    rational in {f(u), u, companion}."""
    u = f.args[0]
    kind = f.kind
    if kind == "exp":
        return f
    if kind == "log":
        return E.div(E.ONE, u)
    if kind == "sin":
        return E.func("cos", u)
    if kind == "cos":
        return E.neg(E.func("sin", u))
    if kind == "tan":
        return E.add(E.ONE, E.ipow(f, 2))
    if kind == "atan":
        return E.div(E.ONE, E.add(E.ONE, E.ipow(u, 2)))
    if kind == "sqrt":
        return E.div(E.ONE, E.mul(E.const(2), f))
    if kind == "pow":
        return E.div(E.mul(f.args[1], f), u)
    raise UnsupportedFunction(kind)


def companions(f: E.Func) -> list[E.Func]:
    """Functions that must accompany ``f`` for its derivative to close."""
    if f.kind == "sin":
        return [E.func("cos", f.args[0])]
    if f.kind == "cos":
        return [E.func("sin", f.args[0])]
    return []


def unsupported_kinds(e: E.Expr) -> list[str]:
    return sorted({n.kind for n in E.walk(e) if isinstance(n, E.Func) and n.kind not in E.SUPPORTED_FUNCTIONS})


def differentiate(e: E.Expr, v) -> E.Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    return _diff(e, _name(v))


@lru_cache(maxsize=65536)
def _diff(e: E.Expr, v: str) -> E.Expr:
    if isinstance(e, (E.Const, E.NamedConst)):
        return E.ZERO
    if isinstance(e, E.Var):
        return E.ONE if e.name == v else E.ZERO
    if isinstance(e, E.Add):
        return E.add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, E.Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = _diff(f, v)
            if df != E.ZERO:
                parts.append(E.mul(*fs[:i], df, *fs[i + 1:]))
        return E.add(*parts)
    if isinstance(e, E.Neg):
        return E.neg(_diff(e.arg, v))
    if isinstance(e, E.Div):
        da, db = _diff(e.num, v), _diff(e.den, v)
        if db == E.ZERO:
            return E.div(da, e.den)
        return E.div(E.sub(E.mul(da, e.den), E.mul(e.num, db)), E.ipow(e.den, 2))
    if isinstance(e, E.IntPow):
        db = _diff(e.base, v)
        if db == E.ZERO:
            return E.ZERO
        return E.mul(E.const(e.exp), E.ipow(e.base, e.exp - 1), db)
    if isinstance(e, E.Func):
        if e.kind not in E.SUPPORTED_FUNCTIONS:
            raise UnsupportedFunction(e.kind)
        du = _diff(e.args[0], v)
        if du == E.ZERO:
            return E.ZERO
        return E.mul(outer_derivative(e), du)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# numeric evaluation

_NAMED = {"pi": math.pi, "e": math.e}


def evaluate(e: E.Expr, assignment: Mapping | None = None) -> float:
    """Float value of ``e``; raises :class:`DomainError` outside a function's
    domain and :class:`UnboundVariable` for unassigned variables."""
    env = {_name(k): float(v) for k, v in (assignment or {}).items()}
    return _eval(e, env)


def _eval(e: E.Expr, env: dict) -> float:
    if isinstance(e, E.Const):
        return float(e.value)
    if isinstance(e, E.NamedConst):
        return _NAMED[e.name]
    if isinstance(e, E.Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, E.Add):
        return math.fsum(_eval(t, env) for t in e.terms)
    if isinstance(e, E.Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, env)
        return out
    if isinstance(e, E.Neg):
        return -_eval(e.arg, env)
    if isinstance(e, E.Div):
        den = _eval(e.den, env)
        if den == 0.0:
            raise DomainError(e, "division by zero")
        return _eval(e.num, env) / den
    if isinstance(e, E.IntPow):
        b = _eval(e.base, env)
        if b == 0.0 and e.exp < 0:
            raise DomainError(e, "division by zero")
        try:
            return b**e.exp
        except OverflowError:
            raise DomainError(e, "overflow") from None
    if isinstance(e, E.Func):
        x = _eval(e.args[0], env)
        k = e.kind
        try:
            if k == "exp":
                return math.exp(x)
            if k == "log":
                if x <= 0:
                    raise DomainError(e, "log of a nonpositive value")
                return math.log(x)
            if k == "sin":
                return math.sin(x)
            if k == "cos":
                return math.cos(x)
            if k == "tan":
                return math.tan(x)
            if k == "atan":
                return math.atan(x)
            if k == "sqrt":
                if x < 0:
                    raise DomainError(e, "sqrt of a negative value")
                return math.sqrt(x)
            if k == "pow":
                r = e.args[1].value
                if x < 0 or (x == 0 and r < 0):
                    raise DomainError(e, "rational power outside its domain")
                return x ** float(r)
            if k == "gamma":
                return math.gamma(x)
        except (OverflowError, ValueError) as exc:
            raise DomainError(e, str(exc)) from None
        raise UnsupportedFunction(k)
    raise TypeError(f"not an expression: {e!r}")


def evaluate_array(e: E.Expr, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation; domain violations come back as nan/inf."""
    with np.errstate(all="ignore"):
        return np.asarray(_eval_np(e, env), dtype=float)


def _eval_np(e, env):
    if isinstance(e, E.Const):
        return float(e.value)
    if isinstance(e, E.NamedConst):
        return _NAMED[e.name]
    if isinstance(e, E.Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, E.Add):
        out = _eval_np(e.terms[0], env)
        for t in e.terms[1:]:
            out = out + _eval_np(t, env)
        return out
    if isinstance(e, E.Mul):
        out = _eval_np(e.factors[0], env)
        for f in e.factors[1:]:
            out = out * _eval_np(f, env)
        return out
    if isinstance(e, E.Neg):
        return -_eval_np(e.arg, env)
    if isinstance(e, E.Div):
        return _eval_np(e.num, env) / _eval_np(e.den, env)
    if isinstance(e, E.IntPow):
        b = np.asarray(_eval_np(e.base, env), dtype=float)
        return b ** float(e.exp)
    if isinstance(e, E.Func):
        x = np.asarray(_eval_np(e.args[0], env), dtype=float)
        k = e.kind
        if k == "pow":
            r = float(e.args[1].value)
            return np.where(x >= 0, np.abs(x) ** r, np.nan)
        if k == "log":
            return np.where(x > 0, np.log(np.abs(x)), np.nan)
        if k == "sqrt":
            return np.where(x >= 0, np.sqrt(np.abs(x)), np.nan)
        if k == "gamma":
            return np.vectorize(math.gamma, otypes=[float])(x)
        return {"exp": np.exp, "sin": np.sin, "cos": np.cos, "tan": np.tan, "atan": np.arctan}[k](x)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# rationality


def as_rational(e: E.Expr, states: Sequence) -> RationalFn | None:
    """Canonical rational function of the given state symbols, or None when
    ``e`` is not rational in exactly those symbols with rational constants."""
    names = tuple(_name(s) for s in states)
    return _as_rational(e, names)


@lru_cache(maxsize=65536)
def _as_rational(e: E.Expr, names: tuple) -> RationalFn | None:
    n = len(names)
    if isinstance(e, E.Const):
        return RationalFn.const(n, e.value)
    if isinstance(e, E.Var):
        if e.name not in names:
            return None
        return RationalFn.var(n, names.index(e.name))
    if isinstance(e, (E.NamedConst, E.Func)):
        return None
    parts = [_as_rational(c, names) for c in E.children(e)]
    if any(p is None for p in parts):
        return None
    try:
        if isinstance(e, E.Add):
            out = parts[0]
            for p in parts[1:]:
                out = out + p
            return out
        if isinstance(e, E.Mul):
            out = parts[0]
            for p in parts[1:]:
                out = out * p
            return out
        if isinstance(e, E.Neg):
            return -parts[0]
        if isinstance(e, E.Div):
            return parts[0] / parts[1]
        if isinstance(e, E.IntPow):
            return parts[0] ** e.exp
    except ZeroDenominator:
        return None
    raise TypeError(f"not an expression: {e!r}")


def poly_to_expr(p: Poly, names: Sequence[str]) -> E.Expr:
    terms = []
    for mono, c in p.sorted_terms():
        factors = [E.ipow(E.Var(nm), k) for nm, k in zip(names, mono) if k]
        terms.append(E.mul(E.Const(c), *factors))
    return E.add(*terms)


def rational_to_expr(r: RationalFn | Poly, names: Sequence[str]) -> E.Expr:
    if isinstance(r, Poly):
        return poly_to_expr(r, names)
    num = poly_to_expr(r.num, names)
    if r.is_polynomial():
        return E.mul(E.Const(1 / r.den.constant_term()), num)
    return E.div(num, poly_to_expr(r.den, names))


def constant_value(e: E.Expr) -> Fraction | None:
    return e.value if isinstance(e, E.Const) else None
