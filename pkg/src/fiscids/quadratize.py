"""Polynomial to quadratic by monomial lifting.

Every monomial of F and h, together with all of its divisors, becomes a state
gamma_k = z^nu_k.  Since d(z^nu)/dz_i = nu_i z^(nu - e_i) and the divisor
closure contains nu - e_i, the Jacobian of gamma is affine in gamma; F
itself is affine in gamma, so their product is at most quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import expr as E
from .errors import ClassError
from .model import FiscidsSystem, SystemClass, validate_class
from .poly import Monomial, Poly, divisor_closure, monomial_order
from .polynomialize import fresh_names


@dataclass(frozen=True)
class MonomialDictionary:
    gamma: tuple  # monomials over the original states, degree-1 states first
    index: dict

    @classmethod
    def build(cls, monomials, nvars: int) -> "MonomialDictionary":
        units = [tuple(int(i == j) for i in range(nvars)) for j in range(nvars)]
        closed = divisor_closure([*monomials, *units])
        zero = (0,) * nvars
        rest = monomial_order(m for m in closed if m != zero and sum(m) > 1)
        gamma = tuple(units + rest)
        return cls(gamma, {m: k for k, m in enumerate(gamma)})

    def __len__(self):
        return len(self.gamma)

    def affine(self, p: Poly) -> Poly:
        """p(z) rewritten as a degree <= 1 polynomial of gamma."""
        K = len(self.gamma)
        terms = {}
        for mono, c in p.terms.items():
            if sum(mono) == 0:
                key = (0,) * K
            else:
                key = tuple(int(k == self.index[mono]) for k in range(K))
            terms[key] = terms.get(key, 0) + c
        return Poly(K, terms)

    def jacobian_entry(self, k: int, i: int) -> Poly:
        """d gamma_k / d z_i as an affine polynomial of gamma."""
        nu = self.gamma[k]
        K = len(self.gamma)
        if nu[i] == 0:
            return Poly.zero(K)
        lower: Monomial = tuple(e - (j == i) for j, e in enumerate(nu))
        return self.affine(Poly(len(nu), {lower: nu[i]}))


def monomial_dictionary(F, h, nvars: int) -> MonomialDictionary:
    monos = set()
    for p in [*(e for row in F for e in row), *h]:
        monos |= p.monomials()
    return MonomialDictionary.build(monos, nvars)


def p_to_q(sys: FiscidsSystem) -> FiscidsSystem:
    """Quadratic system over gamma equivalent to the Polynomial ``sys``.

    The first N states of the result are the original states in their
    original order, so no relabeling is needed to read them back.
    """
    report = validate_class(sys, SystemClass.POLYNOMIAL)
    if not report.passed:
        raise ClassError(f"input is not Polynomial: {report.diagnostics[0]}")
    F, h = sys.polynomial_entries()
    N, n = sys.N, sys.n
    dic = monomial_dictionary(F, h, N)
    K = len(dic)

    F_bar = [[dic.affine(p) for p in row] for row in F]
    F_q = []
    for k in range(K):
        row = []
        for j in range(n):
            acc = Poly.zero(K)
            for i in range(N):
                g = dic.jacobian_entry(k, i)
                if not g.is_zero() and not F_bar[i][j].is_zero():
                    acc = acc + g * F_bar[i][j]
            row.append(acc)
        F_q.append(row)
    h_q = [dic.affine(p) for p in h]

    z0 = []
    for nu in dic.gamma:
        z0.append(E.mul(*(E.ipow(z, e) for z, e in zip(sys.z0, nu) if e)))

    names = list(sys.state_names)
    return replace(
        sys,
        F=F_q,
        h=h_q,
        z0=z0,
        cls=SystemClass.QUADRATIC,
        state_names=names + fresh_names(names, K - N),
    )
