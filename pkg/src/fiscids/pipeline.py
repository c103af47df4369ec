"""Lift a formula and push it down to the requested class."""

from __future__ import annotations

from typing import Sequence

from .errors import ClassError
from .lift import DEFAULT_CAP, lift
from .model import FiscidsSystem, SystemClass, validate_class
from .polynomialize import r_to_p
from .quadratize import p_to_q

_TARGETS = {"r": SystemClass.RATIONAL, "p": SystemClass.POLYNOMIAL, "q": SystemClass.QUADRATIC}


def target_class(name) -> SystemClass:
    if isinstance(name, SystemClass):
        return name
    key = str(name).strip().lower()
    if key in _TARGETS:
        return _TARGETS[key]
    try:
        return SystemClass(str(name).capitalize())
    except ValueError:
        raise ValueError(f"unknown class {name!r}; expected r, p or q") from None


def transform(sys: FiscidsSystem, to) -> FiscidsSystem:
    """Move ``sys`` down to class ``to``, applying r_to_p and p_to_q only when
    the system does not already validate as the target (then it is just
    retagged)."""
    to = target_class(to)
    if to.rank < sys.cls.rank:
        raise ClassError(f"cannot move a {sys.cls.value} system up to {to.value}")
    if validate_class(sys, to).passed:
        return sys if sys.cls is to else sys.retag(to)
    if not validate_class(sys, SystemClass.POLYNOMIAL).passed:
        sys = r_to_p(sys)
        if validate_class(sys, to).passed:
            return sys if sys.cls is to else sys.retag(to)
    return p_to_q(sys)


def build(phi, inputs: Sequence[str], base_point=None, to="q", cap: int = DEFAULT_CAP) -> FiscidsSystem:
    return transform(lift(phi, inputs, base_point=base_point, cap=cap), to)
