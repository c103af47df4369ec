import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from fiscids import expr as E
from fiscids.errors import ClassError, SchemaError
from fiscids.examples import gaussian_system, logpoly_system, tt_system
from fiscids.integrate import output_at, solve_batch
from fiscids.model import (
    FiscidsSystem,
    SystemClass,
    classify,
    deserialize,
    dumps,
    loads,
    serialize,
    trivial_representation,
    validate_class,
)
from fiscids.poly import Poly

from strategies import polynomial_systems, rational_systems


def test_gaussian_system_is_quadratic():
    assert validate_class(gaussian_system(), SystemClass.QUADRATIC).passed


def test_cubic_polynomial_system_is_not_quadratic():
    p = logpoly_system("p")
    report = validate_class(p, SystemClass.QUADRATIC)
    assert not report.passed
    assert any("degree 3" in d for d in report.diagnostics)
    assert validate_class(p, SystemClass.POLYNOMIAL).passed
    assert classify(p) is SystemClass.POLYNOMIAL


def test_rational_system_classification():
    r = logpoly_system("r")
    assert classify(r) is SystemClass.RATIONAL
    assert not validate_class(r, SystemClass.POLYNOMIAL).passed


def test_trivial_representation_is_general_only():
    t = trivial_representation(lambda z: z[0] ** 2, 1)
    assert validate_class(t, SystemClass.GENERAL).passed
    assert not validate_class(t, SystemClass.RATIONAL).passed


def test_trivial_representation_outputs():
    ident = trivial_representation(lambda z: z, 2)
    assert list(output_at(ident, [3.0, 4.0])) == [3.0, 4.0]
    square = trivial_representation(lambda z: z[0] ** 2, 1)
    assert output_at(square, [2.0])[0] == 4.0
    calls = trivial_representation(lambda z: np.cos(z[0]) + 7.0, 1)
    assert output_at(calls, [0.0])[0] == np.cos(0.0) + 7.0


def test_stored_tag_cannot_exceed_validation():
    p = logpoly_system("p")
    with pytest.raises(ClassError):
        FiscidsSystem(F=p.F, h=p.h, z0=p.z0, cls="Quadratic", state_names=p.state_names, input_names=p.input_names)


def test_z0_must_be_constant():
    with pytest.raises(ValueError):
        FiscidsSystem(F=[[Poly.const(1, 1)]], h=[Poly.var(1, 0)], z0=[E.Var("x")], cls="Polynomial",
                      state_names=["z1"], input_names=["x"])


def test_dimension_checks():
    with pytest.raises(ValueError):
        FiscidsSystem(F=[[Poly.const(1, 1), Poly.const(1, 1)]], h=[Poly.var(1, 0)], z0=[E.ZERO],
                      cls="Polynomial", state_names=["z1"], input_names=["x"])


@pytest.mark.parametrize("make", [gaussian_system, tt_system, lambda: logpoly_system("r"),
                                  lambda: logpoly_system("p"), lambda: logpoly_system("q")])
def test_round_trip(make):
    sys = make()
    doc = serialize(sys)
    assert doc["version"] == 1
    assert deserialize(doc) == sys
    assert serialize(deserialize(doc)) == doc
    assert loads(dumps(sys)) == sys


def test_quadratic_log_polynomial_document_is_exact():
    doc = serialize(logpoly_system("q"))
    assert doc["N"] == 6
    assert doc["z0"] == ["log(2)", "0", "1/2", "0", "1/4", "0"]
    coeffs = {t["coeff"] for row in doc["F"] for entry in row for t in entry}
    assert coeffs <= {"1/1", "-1/1", "-2/1"}


def test_base_point_round_trip():
    sys = logpoly_system("q")
    from dataclasses import replace
    shifted = replace(sys, base_point=[Fraction(1, 3)])
    doc = serialize(shifted)
    assert doc["base_point"] == ["1/3"]
    assert deserialize(doc) == shifted


def test_general_systems_not_serializable():
    with pytest.raises(ClassError):
        serialize(trivial_representation(lambda z: z, 1))


def _doc():
    return serialize(tt_system())


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.pop("z0"), "/z0"),
        (lambda d: d.pop("version"), "/version"),
        (lambda d: d.update(version=7), "/version"),
        (lambda d: d.update(n="2"), "/n"),
        (lambda d: d.update({"class": "Cubic"}), "/class"),
        (lambda d: d["F"].pop(), "/F"),
        (lambda d: d["F"][0].pop(), "/F/0"),
        (lambda d: d["F"][0][0][0].update(coeff="0.5"), "/F/0/0/0/coeff"),
        (lambda d: d["F"][0][0][0].update(exponents=[1]), "/F/0/0/0/exponents"),
        (lambda d: d["z0"].__setitem__(0, "x + 1"), "/z0/0"),
        (lambda d: d["h"].append([]), "/h"),
    ],
)
def test_schema_errors(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(SchemaError) as info:
        deserialize(doc)
    assert info.value.path == path


def test_invalid_json():
    with pytest.raises(SchemaError):
        loads("{not json")


def test_tag_above_content_rejected_on_load():
    doc = serialize(logpoly_system("p"))
    doc["class"] = "Quadratic"
    with pytest.raises(SchemaError) as info:
        deserialize(doc)
    assert info.value.path == "/class"


def test_documents_are_deterministic():
    assert dumps(logpoly_system("q")) == dumps(logpoly_system("q"))
    json.loads(dumps(gaussian_system()))


@settings(max_examples=50, deadline=None)
@given(rational_systems())
def test_random_rational_round_trip(sys):
    assert deserialize(serialize(sys)) == sys


@settings(max_examples=50, deadline=None)
@given(polynomial_systems())
def test_validation_is_monotone(sys):
    order = [SystemClass.QUADRATIC, SystemClass.POLYNOMIAL, SystemClass.RATIONAL, SystemClass.GENERAL]
    passed = [validate_class(sys, c).passed for c in order]
    for stricter, weaker in zip(passed, passed[1:]):
        assert not stricter or weaker


@pytest.mark.parametrize("make", [gaussian_system, tt_system, lambda: logpoly_system("r"),
                                  lambda: logpoly_system("q")])
def test_output_at_zero_is_fixed(make):
    sys = make()
    rng = np.random.default_rng(11)
    X = rng.uniform(-1, 1, size=(20, sys.n))
    res = solve_batch(sys, X, (0.0,))
    h0 = res.outputs[0, 0]
    assert np.array_equal(res.outputs[0], np.tile(h0, (20, 1)))
