import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiscids import expr as E
from fiscids.errors import Blowup, DomainError, MaxStepsExceeded
from fiscids.examples import gaussian_phi, gaussian_system, logpoly_system, tt_system
from fiscids.integrate import IntegrationConfig, initial_output, integrate, output_at, solve_batch
from fiscids.model import FiscidsSystem, SystemClass, trivial_representation
from fiscids.poly import Poly

# frozen from tests/oracles/compute_oracles.py (mpmath, 40 digits)
EXP_HALF = 1.648721270700128146848651
LOG_7_2 = 1.252762968495367995688121
Y_TT = 0.7004776555903581579152348

RK4 = IntegrationConfig(method="fixed_rk4")


def _blowup_system():
    # z' = z^2 xi from z(0) = 1 reaches infinity at t = 1/xi
    z = Poly.var(1, 0)
    return FiscidsSystem(F=[[z * z]], h=[z], z0=[E.ONE], cls=SystemClass.POLYNOMIAL,
                         state_names=["z1"], input_names=["x"])


def test_gaussian_closed_form():
    assert output_at(gaussian_system(), [1.0, 0.0])[0] == pytest.approx(EXP_HALF, abs=1e-10)


def test_logpoly_closed_form():
    for stage in "rpq":
        assert output_at(logpoly_system(stage), [1.0])[0] == pytest.approx(LOG_7_2, abs=1e-10)


def test_tt_system_against_oracle():
    assert output_at(tt_system(), [0.5, 0.8])[0] == pytest.approx(Y_TT, abs=1e-6)


def test_zero_input_keeps_state():
    traj = integrate(gaussian_system(), [0.0, 0.0])
    assert np.all(traj.states == traj.states[0])
    assert output_at(gaussian_system(), [0.0, 0.0])[0] == 1.0


@pytest.mark.parametrize("config", [None, RK4])
def test_trivial_flow_is_exact(config):
    triv = trivial_representation(lambda z: z, 3)
    xi = [0.25, -3.0, 7.5]
    assert list(output_at(triv, xi, config=config)) == pytest.approx(xi, abs=1e-14)
    traj = integrate(triv, xi, config)
    # the only error left is rounding in the sum of step sizes
    assert traj.states[-1] == pytest.approx(xi, rel=1e-13)


def test_trivial_callback_at_zero():
    seen = []
    triv = trivial_representation(lambda z: seen.append(list(z)) or 42.0, 2)
    assert output_at(triv, [0.0, 0.0])[0] == 42.0
    assert seen[-1] == [0.0, 0.0]


def test_output_at_zero_is_exact():
    sys = logpoly_system("q")
    for x in (-5.0, 0.0, 3.0):
        assert output_at(sys, [x], t=0.0)[0] == math.log(2)
    assert initial_output(sys)[0] == math.log(2)


def test_trajectory_shape():
    traj = integrate(logpoly_system("q"), [1.0])
    assert traj.times[0] == 0.0 and traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) > 0)
    assert np.array_equal(traj.states[0], logpoly_system("q").z0_values())


def test_rk4_order():
    sys = gaussian_system()
    errs = []
    for steps in (10, 20, 40, 80):
        cfg = IntegrationConfig(method="fixed_rk4", fixed_steps=steps)
        errs.append(abs(output_at(sys, [1.0, 0.0], config=cfg)[0] - EXP_HALF))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(12 <= r <= 20 for r in ratios), ratios


def test_adaptive_and_fixed_agree_on_grid():
    sys = gaussian_system()
    g = np.linspace(-2, 2, 9)
    X = np.array([[a, b] for a in g for b in g])
    ya = solve_batch(sys, X).outputs[0, :, 0]
    yf = solve_batch(sys, X, config=RK4).outputs[0, :, 0]
    assert np.max(np.abs(ya - yf)) <= 1e-8
    want = np.array([gaussian_phi(x) for x in X])
    assert np.max(np.abs(ya - want)) <= 1e-8


def test_batch_matches_single_runs_bitwise():
    sys = logpoly_system("q")
    X = np.linspace(-2, 2, 11)[:, None]
    batch = solve_batch(sys, X).outputs[0, :, 0]
    single = np.array([output_at(sys, x)[0] for x in X])
    assert np.array_equal(batch, single)


def test_deterministic():
    sys = tt_system()
    X = np.array([[0.5, 0.8], [0.2, 0.3], [0.9, 0.1]])
    a = solve_batch(sys, X, (0.25, 0.5, 1.0))
    b = solve_batch(sys, X, (0.25, 0.5, 1.0))
    assert np.array_equal(a.states, b.states)


def test_dense_output_times():
    sys = logpoly_system("r")
    res = solve_batch(sys, [[1.0]], (0.0, 0.3, 0.7, 1.0))
    got = res.outputs[:, 0, 0]
    want = [math.log(2 + t + t * t / 2) for t in (0.0, 0.3, 0.7, 1.0)]
    assert got == pytest.approx(want, abs=1e-9)


def test_blowup_reported():
    sys = _blowup_system()
    with pytest.raises(Blowup) as info:
        output_at(sys, [2.0])
    assert 0.45 < info.value.t <= 0.5 + 1e-6
    res = solve_batch(sys, [[2.0], [0.5]])
    assert isinstance(res.errors[0], Blowup) and res.errors[1] is None
    assert np.isnan(res.outputs[0, 0, 0])
    assert res.outputs[0, 1, 0] == pytest.approx(2.0, abs=1e-10)


def test_max_steps():
    with pytest.raises(MaxStepsExceeded):
        output_at(logpoly_system("q"), [1.0], config=IntegrationConfig(max_steps=2))


def test_output_domain_error():
    triv = trivial_representation(lambda z: np.sqrt(z[0]), 1)
    with np.errstate(invalid="ignore"), pytest.raises(DomainError):
        output_at(triv, [-1.0])


@pytest.mark.parametrize("kwargs", [
    {"method": "euler"}, {"abs_tol": 0}, {"rel_tol": -1}, {"fixed_steps": 0}, {"blowup_bound": 0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegrationConfig(**kwargs)


def test_time_validation():
    with pytest.raises(ValueError):
        output_at(tt_system(), [0.1, 0.1], t=1.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_gaussian_matches_closed_form(a, b):
    assert output_at(gaussian_system(), [a, b])[0] == pytest.approx(gaussian_phi([a, b]), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 1))
def test_logpoly_along_the_ray(x, t):
    # y(t; xi) = phi(t xi) for a system with base point 0
    y = solve_batch(logpoly_system("q"), [[x]], (t,)).outputs[0, 0, 0]
    xt = t * x
    assert y == pytest.approx(math.log(2 + xt + xt * xt / 2), abs=1e-9)


def test_dense_output_matches_step_at_theta_one():
    from fiscids.integrate import _B, _P
    b7 = [*_B, 0.0]
    for row, b in zip(_P, b7):
        assert sum(row) == pytest.approx(b, abs=1e-15)
