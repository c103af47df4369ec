"""The input-affine system  z' = F(z) xi,  z(0) = z0,  y = h(z)  and its
rational / polynomial / quadratic subclasses."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence, Union

from . import expr as E
from .calculus import as_rational, evaluate
from .errors import ClassError, FiscidsError, SchemaError
from .parse import parse
from .poly import Poly, RationalFn

Entry = Union[Poly, RationalFn, E.Expr]

DOCUMENT_VERSION = 1


class SystemClass(str, Enum):
    GENERAL = "General"
    RATIONAL = "Rational"
    POLYNOMIAL = "Polynomial"
    QUADRATIC = "Quadratic"

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {SystemClass.GENERAL: 0, SystemClass.RATIONAL: 1, SystemClass.POLYNOMIAL: 2, SystemClass.QUADRATIC: 3}


def entry_as_rational(entry: Entry, state_names: Sequence[str]) -> RationalFn | None:
    if isinstance(entry, RationalFn):
        return entry
    if isinstance(entry, Poly):
        return RationalFn(entry)
    return as_rational(entry, state_names)


def entry_as_poly(entry: Entry, state_names: Sequence[str]) -> Poly | None:
    r = entry_as_rational(entry, state_names)
    return r.as_poly() if r is not None else None


@dataclass(frozen=True)
class FiscidsSystem:
    F: tuple  # N rows of n entries
    h: tuple  # m entries
    z0: tuple  # N constant expressions
    cls: SystemClass
    state_names: tuple
    input_names: tuple
    base_point: tuple | None = None

    def __post_init__(self):
        F = tuple(tuple(row) for row in self.F)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "z0", tuple(self.z0))
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(self, "cls", SystemClass(self.cls))
        if self.base_point is not None:
            object.__setattr__(self, "base_point", tuple(Fraction(v) for v in self.base_point))
        N, n = len(self.state_names), len(self.input_names)
        if len(F) != N or any(len(row) != n for row in F):
            raise ValueError(f"F must be {N}x{n}")
        if len(self.z0) != N:
            raise ValueError(f"z0 must have {N} entries")
        if len(set(self.state_names)) != N or len(set(self.input_names)) != n:
            raise ValueError("state and input names must be unique")
        for i, z in enumerate(self.z0):
            if not isinstance(z, E.Expr) or not E.is_constant(z):
                raise ValueError(f"z0[{i}] is not a constant expression: {z}")
        if self.base_point is not None and len(self.base_point) != n:
            raise ValueError(f"base point must have {n} entries")
        for entry in [*(e for row in F for e in row), *self.h]:
            if isinstance(entry, (Poly, RationalFn)) and entry.nvars != N:
                raise ValueError(f"entry {entry} is not over the {N} state variables")
        if self.cls is not SystemClass.GENERAL:
            report = validate_class(self, self.cls)
            if not report.passed:
                raise ClassError(f"system does not validate as {self.cls.value}: {report.diagnostics[0]}")

    @property
    def n(self) -> int:
        return len(self.input_names)

    @property
    def m(self) -> int:
        return len(self.h)

    @property
    def N(self) -> int:
        return len(self.state_names)

    def z0_values(self) -> list[float]:
        return [evaluate(z) for z in self.z0]

    def base_values(self) -> list[float]:
        if self.base_point is None:
            return [0.0] * self.n
        return [float(v) for v in self.base_point]

    def rational_entries(self):
        """(F, h) with every entry as a RationalFn; raises ClassError if not rational."""
        F = []
        for i, row in enumerate(self.F):
            out = []
            for j, e in enumerate(row):
                r = entry_as_rational(e, self.state_names)
                if r is None:
                    raise ClassError(f"F[{i}][{j}] is not rational in the states")
                out.append(r)
            F.append(out)
        h = []
        for i, e in enumerate(self.h):
            r = entry_as_rational(e, self.state_names)
            if r is None:
                raise ClassError(f"h[{i}] is not rational in the states")
            h.append(r)
        return F, h

    def polynomial_entries(self):
        F, h = self.rational_entries()
        if not all(r.is_polynomial() for r in [*(e for row in F for e in row), *h]):
            raise ClassError("system has non-polynomial entries")
        return [[r.as_poly() for r in row] for row in F], [r.as_poly() for r in h]

    def retag(self, cls: SystemClass | str) -> "FiscidsSystem":
        """Same system under another class tag, entries stored in the form
        that class uses (RationalFn for Rational, Poly for Polynomial and
        Quadratic)."""
        cls = SystemClass(cls)
        if cls is SystemClass.GENERAL:
            return replace(self, cls=cls)
        if cls is SystemClass.RATIONAL:
            F, h = self.rational_entries()
        else:
            F, h = self.polynomial_entries()
        return replace(self, F=F, h=h, cls=cls)

    def describe(self) -> str:
        names = self.state_names
        lines = []
        for i, row in enumerate(self.F):
            terms = []
            for j, e in enumerate(row):
                text = e.format(names) if isinstance(e, (Poly, RationalFn)) else str(e)
                if text != "0":
                    terms.append(f"({text})*{self.input_names[j]}")
            lines.append(f"d{names[i]}/dt = {' + '.join(terms) or '0'},  {names[i]}(0) = {self.z0[i]}")
        for k, e in enumerate(self.h):
            text = e.format(names) if isinstance(e, (Poly, RationalFn)) else str(e)
            lines.append(f"y{k + 1} = {text}")
        return "\n".join(lines)


@dataclass(frozen=True)
class TrivialRepresentation:
    """z' = xi, z(0) = 0, y = phi(z): exact for any phi, but not parametric."""

    n: int
    phi: Callable = field(compare=False)
    m: int = 1

    cls = SystemClass.GENERAL

    def output(self, z) -> list[float]:
        y = self.phi(list(z))
        if isinstance(y, (int, float)):
            return [float(y)]
        return [float(v) for v in y]


def trivial_representation(phi: Callable, n: int) -> TrivialRepresentation:
    y0 = phi([0.0] * n)
    m = 1 if isinstance(y0, (int, float)) else len(y0)
    return TrivialRepresentation(n=n, phi=phi, m=m)


@dataclass
class ValidationReport:
    target: SystemClass
    passed: bool
    diagnostics: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def validate_class(sys, target: SystemClass | str) -> ValidationReport:
    """Check every entry of F and h against the requirements of ``target``.
    Failure is reported, never raised."""
    target = SystemClass(target)
    report = ValidationReport(target, True)
    if target is SystemClass.GENERAL:
        return report
    if isinstance(sys, TrivialRepresentation):
        report.passed = False
        report.diagnostics.append("output map is an opaque evaluator")
        return report
    names = sys.state_names
    cells = [(f"F[{i}][{j}]", e, 2) for i, row in enumerate(sys.F) for j, e in enumerate(row)]
    cells += [(f"h[{k}]", e, 1) for k, e in enumerate(sys.h)]
    for where, entry, max_deg in cells:
        r = entry_as_rational(entry, names)
        if r is None:
            report.diagnostics.append(f"{where} is not rational in the states")
            continue
        if target.rank < SystemClass.POLYNOMIAL.rank:
            continue
        if not r.is_polynomial():
            report.diagnostics.append(f"{where} has denominator {r.den.format(names)}")
            continue
        if target is SystemClass.QUADRATIC and r.num.total_degree() > max_deg:
            report.diagnostics.append(f"{where} has degree {r.num.total_degree()} > {max_deg}")
    report.passed = not report.diagnostics
    return report


def classify(sys) -> SystemClass:
    """Strongest class the system validates as."""
    best = SystemClass.GENERAL
    for cls in (SystemClass.RATIONAL, SystemClass.POLYNOMIAL, SystemClass.QUADRATIC):
        if validate_class(sys, cls).passed:
            best = cls
        else:
            break
    return best


# ---------------------------------------------------------------------------
# documents

_COEFF = re.compile(r"^-?\d+/\d+$|^-?\d+$")


def _coeff_str(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def _poly_doc(p: Poly) -> list:
    return [{"coeff": _coeff_str(c), "exponents": list(m)} for m, c in p.sorted_terms()]


def _entry_doc(entry: Entry, cls: SystemClass, names) -> object:
    r = entry_as_rational(entry, names)
    if cls is SystemClass.RATIONAL:
        return {"num": _poly_doc(r.num), "den": _poly_doc(r.den)}
    return _poly_doc(r.as_poly())


def serialize(sys: FiscidsSystem) -> dict:
    if isinstance(sys, TrivialRepresentation) or sys.cls is SystemClass.GENERAL:
        raise ClassError("General systems hold opaque or symbolic entries and cannot be serialized")
    names = sys.state_names
    doc = {
        "version": DOCUMENT_VERSION,
        "n": sys.n,
        "m": sys.m,
        "N": sys.N,
        "class": sys.cls.value,
        "input_names": list(sys.input_names),
        "state_names": list(names),
        "F": [[_entry_doc(e, sys.cls, names) for e in row] for row in sys.F],
        "h": [_entry_doc(e, sys.cls, names) for e in sys.h],
        "z0": [E.to_str(z) for z in sys.z0],
    }
    if sys.base_point is not None:
        doc["base_point"] = [_coeff_str(v) for v in sys.base_point]
    return doc


def _require(doc: dict, key: str, kind, path: str = ""):
    if key not in doc:
        raise SchemaError(f"{path}/{key}", "missing field")
    value = doc[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaError(f"{path}/{key}", "expected an integer")
    if kind is not int and not isinstance(value, kind):
        raise SchemaError(f"{path}/{key}", f"expected {kind.__name__}")
    return value


def _parse_coeff(value, path: str) -> Fraction:
    if not isinstance(value, str) or not _COEFF.match(value):
        raise SchemaError(path, f"coefficient must be a 'p/q' string, got {value!r}")
    try:
        return Fraction(value)
    except ZeroDivisionError:
        raise SchemaError(path, "zero denominator in coefficient") from None


def _parse_poly(doc, N: int, path: str) -> Poly:
    if not isinstance(doc, list):
        raise SchemaError(path, "polynomial must be a list of terms")
    terms = {}
    for k, term in enumerate(doc):
        tp = f"{path}/{k}"
        if not isinstance(term, dict):
            raise SchemaError(tp, "term must be an object")
        c = _parse_coeff(_require(term, "coeff", str, tp), f"{tp}/coeff")
        exps = _require(term, "exponents", list, tp)
        if len(exps) != N or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exps):
            raise SchemaError(f"{tp}/exponents", f"expected {N} nonnegative integers")
        if tuple(exps) in terms:
            raise SchemaError(f"{tp}/exponents", "duplicate monomial")
        terms[tuple(exps)] = c
    return Poly(N, terms)


def _parse_entry(doc, N: int, path: str) -> Entry:
    if isinstance(doc, dict):
        num = _parse_poly(_require(doc, "num", list, path), N, f"{path}/num")
        den = _parse_poly(_require(doc, "den", list, path), N, f"{path}/den")
        if den.is_zero():
            raise SchemaError(f"{path}/den", "zero denominator")
        return RationalFn(num, den)
    return _parse_poly(doc, N, path)


def deserialize(doc: dict) -> FiscidsSystem:
    if not isinstance(doc, dict):
        raise SchemaError("", "document must be an object")
    version = _require(doc, "version", int)
    if version != DOCUMENT_VERSION:
        raise SchemaError("/version", f"unsupported version {version}")
    n = _require(doc, "n", int)
    m = _require(doc, "m", int)
    N = _require(doc, "N", int)
    cls_name = _require(doc, "class", str)
    try:
        cls = SystemClass(cls_name)
    except ValueError:
        raise SchemaError("/class", f"unknown class {cls_name!r}") from None
    if cls is SystemClass.GENERAL:
        raise SchemaError("/class", "General systems are not serializable")
    inputs = _require(doc, "input_names", list)
    states = _require(doc, "state_names", list)
    if len(inputs) != n or not all(isinstance(s, str) for s in inputs):
        raise SchemaError("/input_names", f"expected {n} names")
    if len(states) != N or not all(isinstance(s, str) for s in states):
        raise SchemaError("/state_names", f"expected {N} names")
    F_doc = _require(doc, "F", list)
    if len(F_doc) != N:
        raise SchemaError("/F", f"expected {N} rows")
    F = []
    for i, row in enumerate(F_doc):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"/F/{i}", f"expected {n} entries")
        F.append([_parse_entry(e, N, f"/F/{i}/{j}") for j, e in enumerate(row)])
    h_doc = _require(doc, "h", list)
    if len(h_doc) != m:
        raise SchemaError("/h", f"expected {m} entries")
    h = [_parse_entry(e, N, f"/h/{k}") for k, e in enumerate(h_doc)]
    z0_doc = _require(doc, "z0", list)
    if len(z0_doc) != N:
        raise SchemaError("/z0", f"expected {N} entries")
    z0 = []
    for i, text in enumerate(z0_doc):
        if not isinstance(text, str):
            raise SchemaError(f"/z0/{i}", "expected an expression string")
        try:
            z0.append(parse(text, ()))
        except FiscidsError as exc:
            raise SchemaError(f"/z0/{i}", str(exc)) from None
    base = None
    if "base_point" in doc:
        bp = doc["base_point"]
        if not isinstance(bp, list) or len(bp) != n:
            raise SchemaError("/base_point", f"expected {n} coefficients")
        base = [_parse_coeff(v, f"/base_point/{j}") for j, v in enumerate(bp)]
    try:
        return FiscidsSystem(F=F, h=h, z0=z0, cls=cls, state_names=states, input_names=inputs, base_point=base)
    except ClassError as exc:
        raise SchemaError("/class", str(exc)) from None
    except ValueError as exc:
        raise SchemaError("", str(exc)) from None


def dumps(sys: FiscidsSystem) -> str:
    return json.dumps(serialize(sys), indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> FiscidsSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None
    return deserialize(doc)


def save(sys: FiscidsSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(sys))


def load(path) -> FiscidsSystem:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
