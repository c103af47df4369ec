"""Symbolic scalar expressions.

Nodes are immutable dataclasses.  The lower-case constructors (:func:`add`,
:func:`mul`, :func:`div`, :func:`ipow`, :func:`func`, :func:`neg`) return
canonical trees: nested sums and products are flattened, constants are
folded exactly, like terms and like factors are merged, and commutative
operands are sorted by their printed form.  :func:`fold` rebuilds an
arbitrary tree through those constructors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Mapping

from .errors import DomainError

# kind -> arity; "pow" carries a rational constant exponent as second argument
SUPPORTED_FUNCTIONS = {
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
    "tan": 1,
    "atan": 1,
    "sqrt": 1,
    "pow": 2,
}
# recognised so they can be evaluated or reported, but without a rational
# differential rule
OPAQUE_FUNCTIONS = {"gamma": 1}
NAMED_CONSTANTS = ("pi", "e")


@dataclass(frozen=True)
class VarId:
    name: str
    index: int


class Expr:
    __slots__ = ()

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: Fraction

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True, repr=False)
class NamedConst(Expr):
    name: str

    def __repr__(self):
        return f"NamedConst({self.name})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True, repr=False)
class Add(Expr):
    terms: tuple

    def __repr__(self):
        return f"Add({', '.join(map(repr, self.terms))})"


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    factors: tuple

    def __repr__(self):
        return f"Mul({', '.join(map(repr, self.factors))})"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Div(Expr):
    num: Expr
    den: Expr

    def __repr__(self):
        return f"Div({self.num!r}, {self.den!r})"


@dataclass(frozen=True, repr=False)
class IntPow(Expr):
    base: Expr
    exp: int

    def __repr__(self):
        return f"IntPow({self.base!r}, {self.exp})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    kind: str
    args: tuple

    def __repr__(self):
        return f"Func({self.kind}, {', '.join(map(repr, self.args))})"


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(v) -> Const:
    return Const(Fraction(v))


def children(e: Expr) -> tuple:
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Neg):
        return (e.arg,)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, IntPow):
        return (e.base,)
    if isinstance(e, Func):
        return e.args
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield e
    for c in children(e):
        yield from walk(c)


def free_vars(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def is_constant(e: Expr) -> bool:
    return not free_vars(e)


def is_rational_constant(e: Expr) -> bool:
    return isinstance(e, Const)


def sort_key(e: Expr) -> str:
    return to_str(e)


# ---------------------------------------------------------------------------
# canonical constructors


def _split_coeff(t: Expr) -> tuple[Fraction, Expr]:
    if isinstance(t, Mul) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), t


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def add(*terms: Expr) -> Expr:
    total = Fraction(0)
    groups: dict[Expr, Fraction] = {}
    stack = list(terms)
    flat = []
    while stack:
        t = stack.pop(0)
        if isinstance(t, Add):
            stack[0:0] = list(t.terms)
        elif isinstance(t, Neg):
            flat.append(neg(t.arg))
        else:
            flat.append(t)
    for t in flat:
        if isinstance(t, Const):
            total += t.value
            continue
        c, rest = _split_coeff(t)
        groups[rest] = groups.get(rest, 0) + c
    items = sorted(((r, c) for r, c in groups.items() if c), key=lambda rc: sort_key(rc[0]))
    out = [_with_coeff(c, r) for r, c in items]
    if total:
        out.append(Const(total))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def mul(*factors: Expr) -> Expr:
    coeff = Fraction(1)
    powers: dict[Expr, int] = {}
    nums: list[Expr] = []
    dens: list[Expr] = []
    stack = list(factors)
    while stack:
        f = stack.pop(0)
        if isinstance(f, Mul):
            stack[0:0] = list(f.factors)
        elif isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Neg):
            coeff = -coeff
            stack.insert(0, f.arg)
        elif isinstance(f, Div):
            nums.append(f.num)
            dens.append(f.den)
        elif isinstance(f, IntPow):
            if isinstance(f.base, (IntPow, Mul, Neg, Const, Div)):
                stack.insert(0, ipow(f.base, f.exp))
            else:
                powers[f.base] = powers.get(f.base, 0) + f.exp
        else:
            powers[f] = powers.get(f, 0) + 1
    if coeff == 0:
        return ZERO
    rebuilt = []
    for base, k in powers.items():
        if k < 0:
            dens.append(ipow(base, -k))
        elif k > 0:
            rebuilt.append(ipow(base, k))
    if dens:
        return div(mul(Const(coeff), *rebuilt, *nums), mul(*dens))
    if nums:
        return mul(Const(coeff), *rebuilt, *nums)
    rebuilt.sort(key=sort_key)
    if not rebuilt:
        return Const(coeff)
    if coeff == 1 and len(rebuilt) == 1:
        return rebuilt[0]
    if coeff == 1:
        return Mul(tuple(rebuilt))
    return Mul((Const(coeff),) + tuple(rebuilt))


def neg(a: Expr) -> Expr:
    return mul(Const(Fraction(-1)), a)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0:
            raise DomainError(Div(a, b), "division by zero")
        return mul(Const(1 / b.value), a)
    if a == ZERO:
        return ZERO
    if isinstance(a, Div):
        return div(a.num, mul(a.den, b))
    if isinstance(b, Div):
        return div(mul(a, b.den), b.num)
    if a == b:
        return ONE
    return Div(a, b)


def ipow(base: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and k < 0:
            raise DomainError(IntPow(base, k), "division by zero")
        return Const(base.value**k)
    if isinstance(base, IntPow):
        return ipow(base.base, base.exp * k)
    if isinstance(base, Div):
        if k < 0:
            return div(ipow(base.den, -k), ipow(base.num, -k))
        return div(ipow(base.num, k), ipow(base.den, k))
    if isinstance(base, Mul):
        return mul(*(ipow(f, k) for f in base.factors))
    if isinstance(base, Neg):
        return mul(Const(Fraction((-1) ** (k % 2))), ipow(base.arg, k))
    if k < 0:
        # same normal form mul() gives: negative powers live in a denominator
        return Div(ONE, IntPow(base, -k))
    return IntPow(base, k)


def _exact_root(q: Fraction, n: int) -> Fraction | None:
    if q < 0:
        return None

    def iroot(v: int) -> int | None:
        r = round(v ** (1.0 / n)) if v else 0
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**n == v:
                return cand
        return None

    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def func(kind: str, *args: Expr) -> Expr:
    if kind == "pow":
        base, expo = args
        if not isinstance(expo, Const):
            # general power u^v rewritten through exp/log
            return func("exp", mul(expo, func("log", base)))
        r = expo.value
        if r.denominator == 1:
            return ipow(base, int(r))
        if isinstance(base, Const):
            root = _exact_root(base.value, r.denominator)
            if root is not None:
                return Const(root**r.numerator) if root else (ZERO if r > 0 else Func(kind, (base, expo)))
        if r == Fraction(1, 2):
            return func("sqrt", base)
        return Func("pow", (base, expo))
    (a,) = args
    if isinstance(a, Const):
        v = a.value
        if v == 0 and kind in ("sin", "tan", "atan", "sqrt"):
            return ZERO
        if v == 0 and kind in ("exp", "cos"):
            return ONE
        if v == 1 and kind == "log":
            return ZERO
        if kind == "sqrt":
            root = _exact_root(v, 2)
            if root is not None:
                return Const(root)
    return Func(kind, (a,))


def fold(e: Expr) -> Expr:
    """Rebuild ``e`` through the canonical constructors (idempotent)."""
    return _fold(e)


@lru_cache(maxsize=65536)
def _fold(e: Expr) -> Expr:
    if isinstance(e, (Const, NamedConst, Var)):
        return e
    if isinstance(e, Add):
        return add(*map(_fold, e.terms))
    if isinstance(e, Mul):
        return mul(*map(_fold, e.factors))
    if isinstance(e, Neg):
        return neg(_fold(e.arg))
    if isinstance(e, Div):
        return div(_fold(e.num), _fold(e.den))
    if isinstance(e, IntPow):
        return ipow(_fold(e.base), e.exp)
    if isinstance(e, Func):
        return func(e.kind, *map(_fold, e.args))
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, mapping: Mapping[Expr, Expr] | Callable[[Expr], Expr | None]) -> Expr:
    """Top-down replacement of whole subtrees, then refold."""
    lookup = mapping.get if isinstance(mapping, Mapping) else mapping

    def go(node):
        hit = lookup(node)
        if hit is not None:
            return hit
        if isinstance(node, Add):
            return add(*map(go, node.terms))
        if isinstance(node, Mul):
            return mul(*map(go, node.factors))
        if isinstance(node, Neg):
            return neg(go(node.arg))
        if isinstance(node, Div):
            return div(go(node.num), go(node.den))
        if isinstance(node, IntPow):
            return ipow(go(node.base), node.exp)
        if isinstance(node, Func):
            return func(node.kind, *map(go, node.args))
        return node

    return go(e)


# ---------------------------------------------------------------------------
# printing

_ATOM = 5


def _fraction_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, IntPow):
        return 4
    if isinstance(e, Const):
        if e.value.denominator != 1:
            return 2
        return 3 if e.value < 0 else _ATOM
    return _ATOM


def _is_negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul):
        return isinstance(e.factors[0], Const) and e.factors[0].value < 0
    if isinstance(e, Neg):
        return True
    if isinstance(e, Div):
        return _is_negative(e.num)
    return False


def _negate_for_print(e: Expr) -> Expr:
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Div):
        return Div(_negate_for_print(e.num), e.den)
    return neg(e)


@lru_cache(maxsize=65536)
def to_str(e: Expr) -> str:
    return _str(e, 0)


def _str(e: Expr, min_prec: int) -> str:
    s = _render(e)
    return f"({s})" if _prec(e) < min_prec else s


def _render(e: Expr) -> str:
    if isinstance(e, Const):
        return _fraction_str(e.value)
    if isinstance(e, (Var, NamedConst)):
        return e.name
    if isinstance(e, Add):
        out = _str(e.terms[0], 1)
        for t in e.terms[1:]:
            if _is_negative(t):
                out += " - " + _str(_negate_for_print(t), 2)
            else:
                out += " + " + _str(t, 2)
        return out
    if isinstance(e, Mul):
        fs = e.factors
        lead = ""
        if isinstance(fs[0], Const):
            c = fs[0].value
            fs = fs[1:]
            if c == -1:
                lead = "-"
            else:
                lead = _fraction_str(c) + "*"
        return lead + "*".join(_str(f, 3) for f in fs)
    if isinstance(e, Neg):
        return "-" + _str(e.arg, 3)
    if isinstance(e, Div):
        return _str(e.num, 2) + "/" + _str(e.den, 3)
    if isinstance(e, IntPow):
        k = str(e.exp) if e.exp >= 0 else f"({e.exp})"
        return _str(e.base, _ATOM) + "^" + k
    if isinstance(e, Func):
        return f"{e.kind}({', '.join(_str(a, 0) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")
