"""Exact sparse multivariate polynomials and rational functions.

Coefficients are :class:`fractions.Fraction` throughout.  A monomial is a
tuple of nonnegative exponents whose length is the number of ambient
variables; all orderings use graded-lex (degree first, then lexicographic
with the first variable largest).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

from .errors import AmbientMismatch, ZeroDenominator

Monomial = tuple[int, ...]
ExponentSet = frozenset  # frozenset[Monomial]


def grlex_key(mono: Monomial):
    return (sum(mono), mono)


def monomial_order(monos: Iterable[Monomial]) -> list[Monomial]:
    """Ascending total degree; within a degree, descending lexicographic."""
    return sorted(monos, key=lambda m: (sum(m), tuple(-e for e in m)))


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("float coefficients are not exact; pass a Fraction or a string")
    return Fraction(c)


def rational_gcd(values: Iterable[Fraction]) -> Fraction:
    """Largest rational g such that every value is an integer multiple of g."""
    num = 0
    den = 1
    for v in values:
        num = gcd(num, v.numerator)
        den = lcm(den, v.denominator)
    return Fraction(num, den)


class Poly:
    """Immutable sparse polynomial over Q in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Monomial, object] | None = None):
        self.nvars = nvars
        clean: dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if len(mono) != nvars:
                raise AmbientMismatch(f"monomial {mono} does not have {nvars} exponents")
            if any(e < 0 for e in mono):
                raise ValueError(f"negative exponent in {mono}")
            c = _as_fraction(c)
            if c:
                clean[mono] = clean.get(mono, 0) + c
                if not clean[mono]:
                    del clean[mono]
        self.terms = clean
        self._hash = None

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, j: int) -> "Poly":
        mono = [0] * nvars
        mono[j] = 1
        return cls(nvars, {tuple(mono): 1})

    @classmethod
    def monomial(cls, mono: Sequence[int], c=1) -> "Poly":
        return cls(len(mono), {tuple(mono): c})

    # queries -------------------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def monomials(self) -> frozenset:
        return frozenset(self.terms)

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded-lex order."""
        return sorted(self.terms.items(), key=lambda t: grlex_key(t[0]), reverse=True)

    def leading(self) -> tuple[Monomial, Fraction]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        mono = max(self.terms, key=grlex_key)
        return mono, self.terms[mono]

    def content(self) -> Fraction:
        return rational_gcd(self.terms.values())

    def monomial_content(self) -> Monomial:
        """Componentwise minimum exponent over all terms."""
        if not self.terms:
            return (0,) * self.nvars
        return tuple(min(col) for col in zip(*self.terms))

    def variables(self) -> set[int]:
        return {j for m in self.terms for j, e in enumerate(m) if e}

    # arithmetic ----------------------------------------------------------------

    def _check(self, other: "Poly"):
        if other.nvars != self.nvars:
            raise AmbientMismatch(f"ambient sizes differ: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Poly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = _as_fraction(c)
        return Poly(self.nvars, {m: v * c for m, v in self.terms.items()})

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a nonnegative integer exponent")
        result = Poly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def shift_down(self, mono: Monomial) -> "Poly":
        """Divide every term by the monomial ``mono`` (must divide all terms)."""
        return Poly(self.nvars, {tuple(a - b for a, b in zip(m, mono)): c for m, c in self.terms.items()})

    def partial(self, j: int) -> "Poly":
        if not 0 <= j < self.nvars:
            raise AmbientMismatch(f"variable index {j} outside ambient of size {self.nvars}")
        out = {}
        for m, c in self.terms.items():
            if m[j]:
                d = list(m)
                d[j] -= 1
                out[tuple(d)] = c * m[j]
        return Poly(self.nvars, out)

    def embed(self, nvars: int, positions: Sequence[int] | None = None) -> "Poly":
        """Re-express in a larger ambient; variable i goes to ``positions[i]``."""
        if positions is None:
            positions = range(self.nvars)
        out = {}
        for m, c in self.terms.items():
            new = [0] * nvars
            for i, e in zip(positions, m):
                new[i] += e
            out[tuple(new)] = c
        return Poly(nvars, out)

    def evaluate(self, point: Sequence):
        """Evaluate at ``point``; exact if the point holds Fractions."""
        if len(point) != self.nvars:
            raise AmbientMismatch(f"expected {self.nvars} values, got {len(point)}")
        total = 0
        for m, c in self.sorted_terms():
            v = c
            for x, e in zip(point, m):
                if e:
                    v = v * x**e
            total = total + v
        return total

    # comparison / display ---------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant_term() == other
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def format(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"z{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            factors = []
            for name, e in zip(names, m):
                if e == 1:
                    factors.append(name)
                elif e:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"Poly({self.format()})"


def scalar_ratio(p: Poly, q: Poly) -> Fraction | None:
    """Return k with p == k*q, or None when p is not a scalar multiple of q."""
    if q.is_zero() or p.monomials() != q.monomials():
        return None
    mono = next(iter(q.terms))
    k = p.terms[mono] / q.terms[mono]
    for m, c in q.terms.items():
        if p.terms[m] != k * c:
            return None
    return k


class RationalFn:
    """Quotient of two polynomials kept in the canonical form of
    :func:`normalize_rational`."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.const(num.nvars, 1)
        num, den = _normalize_pair(num, den)
        self.num = num
        self.den = den

    @property
    def nvars(self) -> int:
        return self.num.nvars

    @classmethod
    def const(cls, nvars: int, c) -> "RationalFn":
        return cls(Poly.const(nvars, c))

    @classmethod
    def var(cls, nvars: int, j: int) -> "RationalFn":
        return cls(Poly.var(nvars, j))

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> Poly | None:
        return self.num if self.is_polynomial() else None

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def _coerce(self, other):
        if isinstance(other, RationalFn):
            if other.nvars != self.nvars:
                raise AmbientMismatch(f"ambient sizes differ: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, Poly):
            return RationalFn(other)
        if isinstance(other, (int, Fraction)):
            return RationalFn.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, c, d = self.num, self.den, other.num, other.den
        if b == d:
            return RationalFn(a + c, b)
        k = scalar_ratio(d, b)
        if k is not None:
            return RationalFn(a * k + c, d)
        return RationalFn(a * d + c * b, b * d)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b, c, d = self.num, self.den, other.num, other.den
        # cancel factors that are scalar multiples of the opposite denominator
        one = Poly.const(a.nvars, 1)
        k = scalar_ratio(a, d)
        if k is not None:
            a, d = one.scale(k), one
        k = scalar_ratio(c, b)
        if k is not None:
            c, b = one.scale(k), one
        return RationalFn(a * c, b * d)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFn":
        if self.num.is_zero():
            raise ZeroDenominator("inverse of the zero rational function")
        return RationalFn(self.den, self.num)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise ValueError("rational functions only take integer powers")
        if k < 0:
            return self.inverse() ** (-k)
        return RationalFn(self.num**k, self.den**k)

    def partial(self, j: int) -> "RationalFn":
        a, b = self.num, self.den
        if b.is_constant():
            return RationalFn(a.partial(j), b)
        return RationalFn(a.partial(j) * b - a * b.partial(j), b * b)

    def evaluate(self, point: Sequence):
        den = self.den.evaluate(point)
        if den == 0:
            raise ZeroDenominator(f"denominator {self.den.format()} vanishes")
        return self.num.evaluate(point) / den

    def embed(self, nvars: int, positions=None) -> "RationalFn":
        return RationalFn(self.num.embed(nvars, positions), self.den.embed(nvars, positions))

    def __eq__(self, other):
        if isinstance(other, (Poly, int, Fraction)):
            other = self._coerce(other)
        if not isinstance(other, RationalFn):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def format(self, names=None) -> str:
        if self.is_polynomial():
            return self.num.format(names)
        return f"({self.num.format(names)})/({self.den.format(names)})"

    def __repr__(self):
        return f"RationalFn({self.format()})"


def _normalize_pair(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.nvars != den.nvars:
        raise AmbientMismatch(f"ambient sizes differ: {num.nvars} vs {den.nvars}")
    if den.is_zero():
        raise ZeroDenominator("zero denominator")
    nv = num.nvars
    if num.is_zero():
        return num, Poly.const(nv, 1)
    common = tuple(min(a, b) for a, b in zip(num.monomial_content(), den.monomial_content()))
    if any(common):
        num, den = num.shift_down(common), den.shift_down(common)
    if den.is_constant():
        return num.scale(1 / den.constant_term()), Poly.const(nv, 1)
    # numerator leading coefficient +-1, sign fixed by a positive denominator lead
    s = 1 / num.leading()[1]
    if den.leading()[1] * s < 0:
        s = -s
    return num.scale(s), den.scale(s)


def normalize_rational(num: Poly, den: Poly) -> RationalFn:
    """Canonical representative of num/den.

    Strips the common monomial factor and a common scalar, so two inputs
    give structurally equal outputs exactly when they differ by a
    monomial-times-scalar factor.  No polynomial gcd is taken.
    """
    return RationalFn(num, den)


def poly_add(a: Poly, b: Poly) -> Poly:
    if a.nvars != b.nvars:
        raise AmbientMismatch(f"ambient sizes differ: {a.nvars} vs {b.nvars}")
    return a + b


def poly_mul(a: Poly, b: Poly) -> Poly:
    if a.nvars != b.nvars:
        raise AmbientMismatch(f"ambient sizes differ: {a.nvars} vs {b.nvars}")
    return a * b


def poly_partial(p: Poly, j: int) -> Poly:
    return p.partial(j)


def total_degree(p: Poly) -> int:
    return p.total_degree()


def divisor_closure(s: Iterable[Monomial]) -> frozenset:
    """Smallest set containing ``s`` that is closed under componentwise
    decrease of exponents."""
    seen: set[Monomial] = set()
    stack = [tuple(m) for m in s]
    while stack:
        m = stack.pop()
        if m in seen:
            continue
        seen.add(m)
        for j, e in enumerate(m):
            if e:
                d = list(m)
                d[j] -= 1
                d = tuple(d)
                if d not in seen:
                    stack.append(d)
    return frozenset(seen)


def is_divisor_closed(s: Iterable[Monomial]) -> bool:
    s = set(s)
    for m in s:
        for j, e in enumerate(m):
            if e and tuple(x - (i == j) for i, x in enumerate(m)) not in s:
                return False
    return True
