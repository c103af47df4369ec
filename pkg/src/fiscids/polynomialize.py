"""Rational to polynomial: adjoin one reciprocal state beta_i = 1/d_i(z) per
distinct denominator.  Along the flow

    d beta_i / dt = -beta_i^2 * grad d_i(z) . z'

which is polynomial once every F entry is rewritten over (z, beta)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from . import expr as E
from .calculus import evaluate, poly_to_expr
from .errors import ClassError, DenominatorVanishesAtBase, DomainError
from .model import FiscidsSystem, SystemClass, validate_class
from .poly import Poly, RationalFn, scalar_ratio


def fresh_names(existing: Sequence[str], count: int, prefix: str = "z") -> list[str]:
    """``count`` new names of the form prefix<k>, continuing after the
    existing states and skipping any that are taken."""
    taken = set(existing)
    out = []
    k = len(existing) + 1
    while len(out) < count:
        name = f"{prefix}{k}"
        if name not in taken:
            out.append(name)
            taken.add(name)
        k += 1
    return out


@dataclass
class DenominatorBasis:
    """Distinct nonconstant denominators d_1..d_M; every entry denominator is
    s * d_i^k for some registered i."""

    nvars: int
    denominators: list = field(default_factory=list)

    def match(self, d: Poly) -> tuple[int, int, Fraction] | None:
        """(i, k, s) with d == s * d_i^k, if any."""
        deg = d.total_degree()
        for i, b in enumerate(self.denominators):
            bd = b.total_degree()
            if deg % bd:
                continue
            k = deg // bd
            s = scalar_ratio(d, b**k)
            if s is not None:
                return i, k, s
        return None

    def register(self, d: Poly) -> tuple[int, int, Fraction]:
        hit = self.match(d)
        if hit is not None:
            return hit
        self.denominators.append(d)
        return len(self.denominators) - 1, 1, Fraction(1)

    @property
    def M(self) -> int:
        return len(self.denominators)


def collect_denominators(entries: Sequence[RationalFn]) -> DenominatorBasis:
    """Register denominators in increasing degree (ties by first appearance),
    so a base d is seen before its powers."""
    nv = entries[0].nvars if entries else 0
    basis = DenominatorBasis(nv)
    seen = []
    for r in entries:
        if not r.den.is_constant() and r.den not in seen:
            seen.append(r.den)
    for d in sorted(seen, key=lambda p: p.total_degree()):
        basis.register(d)
    return basis


def _value_at(p: Poly, names, z0) -> E.Expr:
    table = {E.Var(nm): z for nm, z in zip(names, z0)}
    return E.substitute(poly_to_expr(p, names), table)


def r_to_p(sys: FiscidsSystem) -> FiscidsSystem:
    """Polynomial system with N + M states equivalent to the Rational ``sys``."""
    report = validate_class(sys, SystemClass.RATIONAL)
    if not report.passed:
        raise ClassError(f"input is not Rational: {report.diagnostics[0]}")
    F, h = sys.rational_entries()
    basis = collect_denominators([*(r for row in F for r in row), *h])
    if basis.M == 0:
        return sys.retag(SystemClass.POLYNOMIAL)

    N, M = sys.N, basis.M
    total = N + M
    names = list(sys.state_names)

    beta0 = []
    for i, d in enumerate(basis.denominators):
        at = _value_at(d, names, sys.z0)
        if isinstance(at, E.Const):
            vanishes = at.value == 0
        else:
            try:
                vanishes = abs(evaluate(at)) <= 1e-12
            except DomainError:
                vanishes = True
        if vanishes:
            raise DenominatorVanishesAtBase(i, d.format(names))
        beta0.append(E.div(E.ONE, at))

    def beta(i: int) -> Poly:
        return Poly.var(total, N + i)

    def lift_entry(r: RationalFn) -> Poly:
        num = r.num.embed(total)
        if r.den.is_constant():
            return num.scale(1 / r.den.constant_term())
        i, k, s = basis.match(r.den)
        return (num * beta(i) ** k).scale(1 / s)

    F_poly = [[lift_entry(r) for r in row] for row in F]
    h_poly = [lift_entry(r) for r in h]

    for i, d in enumerate(basis.denominators):
        grad = [d.partial(l).embed(total) for l in range(N)]
        b2 = beta(i) ** 2
        row = []
        for j in range(sys.n):
            acc = Poly.zero(total)
            for l in range(N):
                if not grad[l].is_zero():
                    acc = acc + grad[l] * F_poly[l][j]
            row.append(-(b2 * acc))
        F_poly.append(row)

    return replace(
        sys,
        F=F_poly,
        h=h_poly,
        z0=[*sys.z0, *beta0],
        cls=SystemClass.POLYNOMIAL,
        state_names=names + fresh_names(names, M),
    )
