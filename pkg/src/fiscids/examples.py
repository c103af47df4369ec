"""Built-in systems with fixed constants, used by the CLI and the tests."""

from __future__ import annotations

import math
from fractions import Fraction

from . import expr as E
from .lift import lift
from .model import FiscidsSystem, SystemClass
from .pipeline import transform
from .poly import Poly

# phi(xi) = c exp(xi^T A xi / 2 + b^T xi)
GAUSSIAN_A = ((Fraction(-1), Fraction(-1, 2)), (Fraction(-1, 2), Fraction(-1)))
GAUSSIAN_B = (Fraction(1), Fraction(1, 2))
GAUSSIAN_C = Fraction(1)

# phi(xi) = log(a0 + a1 xi + a2 xi^2)
LOGPOLY_A = (Fraction(2), Fraction(1), Fraction(1, 2))


def _frac(v) -> str:
    v = Fraction(v)
    return f"({v.numerator}/{v.denominator})"


def gaussian_expression(A=GAUSSIAN_A, b=GAUSSIAN_B, c=GAUSSIAN_C, names=("x1", "x2")) -> str:
    n = len(names)
    quad = []
    for i in range(n):
        for j in range(n):
            if A[i][j]:
                quad.append(f"{_frac(Fraction(A[i][j]) / 2)}*{names[i]}*{names[j]}")
    lin = [f"{_frac(b[j])}*{names[j]}" for j in range(n) if b[j]]
    body = " + ".join(quad + lin) or "0"
    return f"{_frac(c)}*exp({body})"


def gaussian_phi(xi, A=GAUSSIAN_A, b=GAUSSIAN_B, c=GAUSSIAN_C) -> float:
    n = len(xi)
    q = sum(float(A[i][j]) * xi[i] * xi[j] for i in range(n) for j in range(n))
    return float(c) * math.exp(0.5 * q + sum(float(b[j]) * xi[j] for j in range(n)))


def gaussian_system(A=GAUSSIAN_A, b=GAUSSIAN_B, c=GAUSSIAN_C) -> FiscidsSystem:
    """Quadratic system with states (phi, A xi + b)."""
    names = tuple(f"x{j + 1}" for j in range(len(b)))
    return transform(lift(gaussian_expression(A, b, c, names), names), "q")


def logpoly_expression(a=LOGPOLY_A, name: str = "x") -> str:
    a0, a1, a2 = a
    return f"log({_frac(a0)} + {_frac(a1)}*{name} + {_frac(a2)}*{name}^2)"


def logpoly_phi(xi, a=LOGPOLY_A) -> float:
    x = xi[0] if hasattr(xi, "__len__") else xi
    a0, a1, a2 = map(float, a)
    return math.log(a0 + a1 * x + a2 * x * x)


def logpoly_system(stage: str = "q", a=LOGPOLY_A) -> FiscidsSystem:
    """The rational (2 states), polynomial (3) or quadratic (6) system for
    log of a quadratic polynomial; ``stage`` is r, p or q."""
    if Fraction(a[0]) <= 0:
        raise ValueError("a0 must be positive")
    r = lift(logpoly_expression(a), ("x",))
    return transform(r, stage)


def tt_system() -> FiscidsSystem:
    """z1' = (z2 - z1) xi1, z2' = z2 (z2 - z1) xi2, z(0) = (0, 1), y = z1."""
    N = 2
    z1, z2 = Poly.var(N, 0), Poly.var(N, 1)
    zero = Poly.zero(N)
    F = [[z2 - z1, zero], [zero, z2 * (z2 - z1)]]
    return FiscidsSystem(
        F=F,
        h=[z1],
        z0=[E.ZERO, E.ONE],
        cls=SystemClass.QUADRATIC,
        state_names=("z1", "z2"),
        input_names=("xi1", "xi2"),
    )


EXAMPLES = {"gaussian": gaussian_system, "logpoly": logpoly_system, "tt": tt_system}
