"""Differential closure: from a closed-form function phi(xi) to a rational
system  z' = F(z) xi  whose states are functions alpha_k(xi) with
d alpha / d xi = F(alpha).

The closure starts from the components of phi and keeps adjoining whatever
the partial derivatives of the current states are missing:

* elementary-function subexpressions that are not yet states (innermost
  first, with their companions: sin brings cos and vice versa);
* irrational constants (``pi``, ``log(2)``, ...) as states with zero rows;
* for a function state f(u) whose outer derivative is already rational in
  the states, the affine partials du/dxi_j, so that for example
  exp(quadratic) closes over (phi, grad of the exponent);
* otherwise the inputs xi_j themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import expr as E
from .calculus import (
    as_rational,
    companions,
    differentiate,
    evaluate,
    outer_derivative,
    rational_to_expr,
    unsupported_kinds,
)
from .errors import BasePointDomainError, ClosureCapExceeded, DomainError, FiscidsError, UnsupportedFunction
from .model import FiscidsSystem, SystemClass
from .parse import parse
from .poly import RationalFn

DEFAULT_CAP = 64


def _placeholder(k: int) -> str:
    return f"__state{k}"


def canon(e: E.Expr, inputs: tuple) -> E.Expr:
    """Rewrite every transcendental-free subtree into expanded rational
    normal form over the inputs, so equal subfunctions compare equal."""
    return _canon(e, inputs)


@lru_cache(maxsize=65536)
def _canon(e: E.Expr, inputs: tuple) -> E.Expr:
    if not any(isinstance(n, (E.Func, E.NamedConst)) for n in E.walk(e)):
        r = as_rational(e, inputs)
        if r is not None:
            return rational_to_expr(r, inputs)
        return e
    if isinstance(e, E.Func):
        if e.kind == "pow":
            return E.func("pow", _canon(e.args[0], inputs), e.args[1])
        if e.kind not in E.SUPPORTED_FUNCTIONS:
            return e
        return E.func(e.kind, *(_canon(a, inputs) for a in e.args))
    if isinstance(e, E.Add):
        return E.add(*(_canon(t, inputs) for t in e.terms))
    if isinstance(e, E.Mul):
        return E.mul(*(_canon(f, inputs) for f in e.factors))
    if isinstance(e, E.Div):
        return E.div(_canon(e.num, inputs), _canon(e.den, inputs))
    if isinstance(e, E.IntPow):
        return E.ipow(_canon(e.base, inputs), e.exp)
    if isinstance(e, E.Neg):
        return E.neg(_canon(e.arg, inputs))
    return e


@dataclass
class ClosureState:
    """States alpha_k(xi) discovered so far; a state is pending until all of
    its partial derivatives are rational in the state set."""

    inputs: tuple
    states: list = field(default_factory=list)
    pending: list = field(default_factory=list)
    cap: int = DEFAULT_CAP

    def index(self, e: E.Expr) -> int | None:
        try:
            return self.states.index(e)
        except ValueError:
            return None

    def add(self, e: E.Expr) -> bool:
        if e in self.states:
            return False
        if len(self.states) >= self.cap:
            raise ClosureCapExceeded(self.cap)
        self.states.append(e)
        self.pending.append(len(self.states) - 1)
        return True

    @property
    def placeholders(self) -> tuple:
        return tuple(_placeholder(k) for k in range(len(self.states)))

    def substitute(self, e: E.Expr) -> E.Expr:
        table = {s: E.Var(_placeholder(k)) for k, s in enumerate(self.states)}
        return E.substitute(e, table)

    def rational(self, e: E.Expr) -> RationalFn | None:
        return as_rational(self.substitute(e), self.placeholders)

    def missing(self, e: E.Expr) -> list:
        """What ``e`` needs before it is rational in the states."""
        known = set(self.states)
        found: list = []

        def visit(node) -> bool:
            if node in known:
                return False
            if isinstance(node, E.NamedConst):
                found.append(node)
                return True
            if isinstance(node, E.Func):
                inner = [visit(a) for a in node.args]
                if not any(inner):
                    found.append(node)
                return True
            hit = False
            for c in E.children(node):
                hit = visit(c) or hit
            return hit

        visit(e)
        if found:
            out = []
            for f in sorted(set(found), key=E.sort_key):
                out.append(f)
                if isinstance(f, E.Func):
                    out.extend(c for c in companions(f) if c not in known)
            return out
        free = E.free_vars(self.substitute(e))
        return [E.Var(x) for x in self.inputs if x in free]


def _row_parts(cl: ClosureState, defn: E.Expr, j: int):
    """Partial derivative of a state along input j as a RationalFn of the
    current states, or (None, additions) when the closure must grow."""
    x = cl.inputs[j]
    if isinstance(defn, E.Func) and defn.kind in E.SUPPORTED_FUNCTIONS:
        u = defn.args[0]
        inner = canon(differentiate(u, x), cl.inputs)
        if inner == E.ZERO:
            return RationalFn.const(len(cl.states), 0), []
        outer = canon(outer_derivative(defn), cl.inputs)
        r_outer = cl.rational(outer)
        if r_outer is None:
            return None, cl.missing(outer)
        r_inner = cl.rational(inner)
        if r_inner is None:
            return None, _gradient_states(cl, u) or cl.missing(inner)
        return r_outer * r_inner, []
    d = canon(differentiate(defn, x), cl.inputs)
    r = cl.rational(d)
    if r is None:
        return None, cl.missing(d)
    return r, []


def _gradient_states(cl: ClosureState, u: E.Expr) -> list:
    """Affine partials of u to adjoin, when every partial not yet rational
    in the states is a degree-one polynomial of the inputs."""
    grads = []
    for x in cl.inputs:
        g = canon(differentiate(u, x), cl.inputs)
        if cl.rational(g) is not None:
            continue
        r = as_rational(g, cl.inputs)
        if r is None or not r.is_polynomial() or r.num.total_degree() != 1:
            return []
        grads.append(g)
    return [g for g in dict.fromkeys(grads) if g not in cl.states]


def closure(phi: Sequence[E.Expr], inputs: Sequence[str], cap: int = DEFAULT_CAP) -> ClosureState:
    inputs = tuple(inputs)
    for comp in phi:
        bad = unsupported_kinds(comp)
        if bad:
            raise UnsupportedFunction(bad[0])
        stray = E.free_vars(comp) - set(inputs)
        if stray:
            raise FiscidsError(f"phi uses undeclared variables {sorted(stray)}")
    cl = ClosureState(inputs=inputs, cap=cap)
    for comp in phi:
        cl.add(canon(comp, inputs))
    while cl.pending:
        k = cl.pending.pop(0)
        for j in range(len(inputs)):
            while True:
                row, additions = _row_parts(cl, cl.states[k], j)
                if row is not None:
                    break
                grew = False
                for a in additions:
                    grew = cl.add(a) or grew
                if not grew:
                    raise FiscidsError(f"closure stalled on d({cl.states[k]})/d{inputs[j]}")
    return cl


def _as_exprs(phi, inputs) -> list:
    if isinstance(phi, (str, E.Expr)):
        phi = [phi]
    return [parse(p, inputs) if isinstance(p, str) else p for p in phi]


def lift(phi, inputs: Sequence[str], base_point: Sequence | None = None, cap: int = DEFAULT_CAP) -> FiscidsSystem:
    """Rational system whose output at t = 1 is phi(xi).

    ``phi`` is an expression (or list of expressions, or strings) over the
    names in ``inputs``; ``base_point`` shifts the constant input to
    xi - base_point.
    """
    inputs = tuple(inputs)
    phi = _as_exprs(phi, inputs)
    cl = closure(phi, inputs, cap)
    N, n = len(cl.states), len(inputs)
    names = tuple(f"z{k + 1}" for k in range(N))

    F = []
    for defn in cl.states:
        row = []
        for j in range(n):
            r, _ = _row_parts(cl, defn, j)
            row.append(r)
        F.append(row)
    h = [RationalFn.var(N, cl.index(canon(p, inputs))) for p in phi]

    bp = [Fraction(0)] * n if base_point is None else [Fraction(v) for v in base_point]
    at_base = {E.Var(x): E.Const(v) for x, v in zip(inputs, bp)}
    z0 = []
    for k, defn in enumerate(cl.states):
        try:
            value = E.substitute(defn, at_base)
            numeric = evaluate(value)
        except DomainError as exc:
            raise BasePointDomainError(names[k], f"{defn}: {exc.reason}") from None
        if numeric != numeric or abs(numeric) == float("inf"):
            raise BasePointDomainError(names[k], f"{defn} is not finite")
        z0.append(value)

    return FiscidsSystem(
        F=F,
        h=h,
        z0=z0,
        cls=SystemClass.RATIONAL,
        state_names=names,
        input_names=inputs,
        base_point=None if base_point is None else bp,
    )
