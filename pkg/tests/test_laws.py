import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isocoll.cases import CASE_NAMES, builtin_case
from isocoll.laws import (Advection, BuckleyLeverett, BuckleyLeverettGravity, Burgers, Euler,
                          InadmissibleStateError, euler_pressure)

SCALAR_LAWS = [Advection([1.0, -0.5]), Burgers([1.0, 1.0]), Burgers([-1.0]), BuckleyLeverett(),
               BuckleyLeverettGravity()]


@pytest.mark.parametrize("law", SCALAR_LAWS, ids=repr)
@settings(max_examples=30, deadline=None)
@given(phi=st.floats(0.01, 0.99))
def test_flux_derivative_matches_difference_quotient(law, phi):
    eps = 1e-6
    fd = (law.flux(phi + eps) - law.flux(phi - eps)) / (2 * eps)
    assert np.allclose(law.flux_derivative(phi), fd, rtol=1e-6, atol=1e-7)


@settings(max_examples=80, deadline=None)
@given(l=st.floats(-2, 2), r=st.floats(-2, 2), v=st.sampled_from([1.0, -1.0, 0.5]))
def test_burgers_godunov_is_extremum_of_flux(l, r, v):
    law = Burgers([v])
    s = np.linspace(min(l, r), max(l, r), 4001)
    fs = 0.5 * v * s * s
    ref = fs.min() if l <= r else fs.max()
    got = float(law.godunov_flux(np.array(l), np.array(r), 0))
    assert got == pytest.approx(ref, abs=1e-6)


def test_bl_flux_is_monotone_on_unit_interval():
    law = BuckleyLeverett()
    u = np.linspace(0, 1, 1001)
    assert np.all(law.flux_derivative(u)[0] >= 0)
    assert float(law.flux(0.5)[0]) == pytest.approx(0.5)


def test_wavespeed_is_euclidean_norm():
    law = Advection([3.0, 4.0])
    assert np.allclose(law.wavespeed(np.zeros(5)), 5.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_euler_conserved_primitive_round_trip(dim):
    law = Euler(1.4, dim)
    rng = np.random.default_rng(dim)
    rho = rng.uniform(0.1, 2, 10)
    vel = rng.uniform(-1, 1, (10, dim))
    p = rng.uniform(0.1, 3, 10)
    u = law.conserved(rho, vel, p)
    assert np.allclose(law.velocity(u), vel)
    assert np.allclose(law.pressure(u), p)
    assert np.allclose(euler_pressure(u, 1.4), p)
    c = np.sqrt(1.4 * p / rho)
    assert np.allclose(law.wavespeed(u), np.linalg.norm(vel, axis=1) + c)


def test_euler_flux_of_state_at_rest():
    law = Euler(1.4, 2)
    u = law.conserved(np.array([1.0]), np.zeros((1, 2)), np.array([2.0]))
    f = law.flux(u)[0]
    assert np.allclose(f[0], 0) and np.allclose(f[-1], 0)
    assert np.allclose(f[1:3], 2.0 * np.eye(2))


def test_inadmissible_states_raise():
    law = Euler(1.4, 1)
    with pytest.raises(InadmissibleStateError):
        law.check_admissible(np.array([[-1.0, 0.0, 1.0]]))
    with pytest.raises(InadmissibleStateError):
        law.check_admissible(np.array([[1.0, 0.0, -1.0]]))
    with pytest.raises(ValueError):
        Euler(1.0)


@pytest.mark.parametrize("name", CASE_NAMES)
def test_builtin_cases_are_consistent(name):
    case = builtin_case(name)
    assert case.name == name
    assert case.dim == len(case.domain) == len(case.bcs)
    mesh = np.meshgrid(*[np.linspace(a, b, 9) for a, b in case.domain], indexing="ij")
    u0 = np.asarray(case.initial(*mesh))
    assert np.all(np.isfinite(u0))
    if case.is_euler:
        assert u0.shape[-1] == case.n_fields
        case.law.check_admissible(u0)
    assert case.t_final > 0 and case.dt > 0


def test_unknown_case():
    with pytest.raises(KeyError):
        builtin_case("nope")
