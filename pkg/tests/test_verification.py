import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from isocoll.cases import builtin_case
from isocoll.laws import Advection, BuckleyLeverett, Burgers, Euler
from isocoll.splines import TensorSpace
from isocoll.linalg import TensorMassSolver
from isocoll.verification.convergence import (ConvergenceRow, ConvergenceTable, fill_rates,
                                              observed_rate)
from isocoll.verification.exact import (CharacteristicCrossingError, VacuumError,
                                        burgers_characteristics, euler_star_state,
                                        exact_euler_riemann, exact_scalar_riemann,
                                        isentropic_gamma3, translated)
from isocoll.verification.fv import cell_average_distance, coarsen, reference_fv_solution
from isocoll.verification.norms import error_norm

SOD_L, SOD_R = (1.0, 0.0, 1.0), (0.125, 0.0, 0.1)


def _bl_tangent_state():
    # f'(u) u = f(u) for f = u^2 / (u^2 + (1-u)^2), solved symbolically
    u = sympy.symbols("u", positive=True)
    f = u ** 2 / (u ** 2 + (1 - u) ** 2)
    roots = sympy.solve(sympy.simplify(sympy.diff(f, u) * u - f), u)
    root = [r for r in roots if 0 < float(r) < 1][0]
    return float(root), float(f.subs(u, root) / root)


BL_STATE, BL_SPEED = _bl_tangent_state()


# ---- scalar Riemann ---------------------------------------------------------

def test_burgers_shock_position():
    sol = exact_scalar_riemann(Burgers([1.0]), 1.0, 0.0, x0=1.0 / 3.0)
    x = np.array([13 / 30 - 1e-9, 13 / 30 + 1e-9])
    assert sol([x], 0.2).tolist() == [1.0, 0.0]
    assert sol.info["waves"][0].kind == "shock"


def test_burgers_rarefaction():
    sol = exact_scalar_riemann(Burgers([1.0]), 0.0, 1.0)
    x = np.linspace(-0.5, 1.5, 21)
    assert np.allclose(sol([x], 1.0), np.clip(x, 0, 1), atol=1e-10)


def test_bl_composite_wave_matches_tangent_oracle():
    assert BL_STATE == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    sol = exact_scalar_riemann(BuckleyLeverett(), 1.0, 0.0)
    waves = sol.info["waves"]
    shock = [w for w in waves if w.kind == "shock"][0]
    assert shock.u_from == pytest.approx(BL_STATE, abs=1e-4)
    assert shock.speed_from == pytest.approx(BL_SPEED, abs=1e-4)
    t = 0.5
    x = np.array([BL_SPEED * t - 1e-3, BL_SPEED * t + 1e-3])
    v = sol([x], t)
    assert v[0] == pytest.approx(BL_STATE, abs=2e-3) and v[1] == 0.0


def test_advection_step_is_a_contact():
    sol = exact_scalar_riemann(Advection([2.0]), 1.0, 0.0)
    x = np.array([0.99, 1.01])
    assert sol([x], 0.5).tolist() == [1.0, 0.0]


@pytest.mark.parametrize("law,left,right", [(Burgers([1.0]), 1.0, 0.0),
                                            (BuckleyLeverett(), 1.0, 0.0)])
def test_scalar_rankine_hugoniot(law, left, right):
    for w in exact_scalar_riemann(law, left, right).info["waves"]:
        if w.kind == "shock":
            jump = float(law.flux(w.u_to)[0] - law.flux(w.u_from)[0]) / (w.u_to - w.u_from)
            assert w.speed_from == pytest.approx(jump, rel=1e-8)


# ---- Euler Riemann ----------------------------------------------------------

def test_sod_star_state():
    star = euler_star_state(SOD_L, SOD_R, 1.4)
    assert star.p == pytest.approx(0.30313, abs=1e-5)
    assert star.u == pytest.approx(0.92745, abs=1e-5)


def test_euler_trivial_and_mirror():
    x = np.linspace(-1, 1, 41)
    same = exact_euler_riemann(SOD_L, SOD_L, 1.4)([x], 0.3)
    assert np.allclose(same, Euler(1.4).conserved(np.ones(41), np.zeros(41), np.ones(41)))
    a = exact_euler_riemann(SOD_L, SOD_R, 1.4)([x], 0.2)
    b = exact_euler_riemann(SOD_R, SOD_L, 1.4)([-x], 0.2)
    assert np.allclose(a[:, 0], b[:, 0]) and np.allclose(a[:, 1], -b[:, 1])
    assert np.allclose(a[:, 2], b[:, 2])


def test_vacuum_detected():
    with pytest.raises(VacuumError):
        euler_star_state((1.0, -20.0, 1.0), (1.0, 20.0, 1.0), 1.4)


# ---- characteristic solutions -----------------------------------------------

def test_burgers_characteristics_fixed_point():
    sol = burgers_characteristics(lambda x: np.exp(x) - 1, np.exp)
    x = np.linspace(0, 1, 11)
    phi = sol([x], 0.01)
    assert np.max(np.abs(phi - (np.exp(x - phi * 0.01) - 1))) < 1e-12
    assert np.array_equal(sol([x], 0.0), np.exp(x) - 1)


def test_characteristic_crossing_detected():
    sol = burgers_characteristics(lambda x: -x, lambda x: -np.ones_like(x))
    with pytest.raises(CharacteristicCrossingError):
        sol([np.linspace(0, 1, 5)], 2.0)


def test_translation_is_periodic():
    ic = lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    sol = translated(ic, [1.0, 1.0], [(0, 1), (0, 1)])
    x, y = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 5), indexing="ij")
    assert np.allclose(sol([x, y], 1.0), ic(x, y), atol=1e-12)


def test_isentropic_solution_satisfies_euler():
    case = builtin_case("euler_isentropic")
    sol = case.exact()
    law = case.law
    x = np.linspace(-1, 1, 41)[1:-1]
    t, e = 0.05, 1e-5
    u = sol([x], t)
    dudt = (sol([x], t + e) - sol([x], t - e)) / (2 * e)
    dfdx = (law.flux(sol([x + e], t))[..., 0] - law.flux(sol([x - e], t))[..., 0]) / (2 * e)
    assert np.max(np.abs(dudt + dfdx)) < 1e-5
    p = law.pressure(u)
    assert np.allclose(p / u[:, 0] ** 3, 1.0, atol=1e-12)


# ---- norms --------------------------------------------------------------------

def _space(dims, k, topo="open", domain=None):
    domain = domain or [(0, 1)] * len(dims)
    return TensorSpace.uniform(domain, dims, k, topo)


def test_norm_of_interpolated_polynomial_is_zero():
    space = _space([4], 3)
    g = space.greville[0]
    c = TensorMassSolver.for_space(space).solve(g ** 3 - g)
    exact = lambda coords, t: coords[0] ** 3 - coords[0]
    assert error_norm(space, c, exact, 0.0)[0] < 1e-12


def test_unit_norm_on_square():
    space = _space([3, 3], 2)
    zero = lambda coords, t: np.zeros(np.broadcast(*coords).shape)
    assert error_norm(space, np.ones(space.shape), zero, 0.0)[0] == pytest.approx(1.0, abs=1e-13)


def test_sine_norm_closed_form():
    space = _space([64], 5)
    g = space.greville[0]
    c = TensorMassSolver.for_space(space).solve(np.sin(2 * np.pi * g))
    zero = lambda coords, t: np.zeros_like(coords[0])
    # exact spline norm differs from 1/sqrt(2) by the interpolation error only
    assert error_norm(space, c, zero, 0.0, "L2")[0] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    hi = error_norm(space, c, zero, 0.0, "L2", n_points=14)[0]
    assert abs(hi - error_norm(space, c, zero, 0.0, "L2")[0]) < 1e-9


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000))
def test_holder_inequality(seed):
    space = _space([5, 4], 3, domain=[(0, 2), (0, 1.5)])
    c = np.random.default_rng(seed).standard_normal(space.shape)
    zero = lambda coords, t: np.zeros(np.broadcast(*coords).shape)
    l1 = error_norm(space, c, zero, 0.0, "L1")[0]
    l2 = error_norm(space, c, zero, 0.0, "L2")[0]
    assert l1 <= l2 * math.sqrt(3.0) * (1 + 1e-12)


# ---- finite-volume oracle -----------------------------------------------------

def test_fv_constant_state_is_preserved():
    case = builtin_case("burgers_riemann_2d")
    sol = reference_fv_solution(case, 16, t_final=0.05,
                                initial=lambda x, y: np.full_like(x, 0.3))
    assert np.allclose(sol.values, 0.3, atol=1e-15)


def test_fv_matches_exact_burgers_riemann():
    case = builtin_case("burgers_riemann_1d")
    sol = reference_fv_solution(case, 100_000)
    exact = case.exact()([sol.centers[0]], sol.t)
    assert cell_average_distance(sol, exact) < 2e-4


@pytest.mark.parametrize("name", ["burgers_riemann_1d", "bl_riemann_1d", "euler_sod"])
def test_fv_and_exact_agree_at_first_order(name):
    case = builtin_case(name)
    exact = case.exact()
    errs = []
    for n in (400, 1600):
        sol = reference_fv_solution(case, n)
        ref = exact([sol.centers[0]], sol.t)
        vals = sol.values if sol.values.ndim == 1 else sol.values[:, 0]
        ref = ref if ref.ndim == 1 else ref[:, 0]
        errs.append(cell_average_distance(type(sol)(sol.centers, vals, sol.t, 0), ref))
    rate = math.log(errs[0] / errs[1]) / math.log(4)
    assert errs[1] < 0.02 and rate > 0.45


def test_coarsen_preserves_mean():
    case = builtin_case("burgers_riemann_2d")
    sol = reference_fv_solution(case, 32, t_final=0.05)
    c = coarsen(sol, 4)
    assert c.values.shape == (8, 8)
    assert c.values.mean() == pytest.approx(sol.values.mean(), rel=1e-14)
    with pytest.raises(ValueError):
        coarsen(sol, 5)


# ---- convergence table ----------------------------------------------------------

def test_observed_rate_and_table():
    assert observed_rate(1.0, 0.0625, 0.1, 0.05) == pytest.approx(4.0)
    assert math.isnan(observed_rate(0.0, 1.0, 0.1, 0.05))
    rows = [ConvergenceRow("c", 3, n, 1.0 / n, "L2", 1.0 / n ** 4) for n in (16, 32, 64)]
    fill_rates(rows)
    table = ConvergenceTable(rows)
    assert np.allclose(table.rates(3, "L2"), 4.0)
    csv_text = table.to_csv().splitlines()
    assert csv_text[0] == "case,k,n_elements,h,norm,error,rate"
    assert csv_text[1].endswith(",") and len(csv_text) == 4
