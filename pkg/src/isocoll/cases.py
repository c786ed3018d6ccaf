"""Built-in test cases: domains, initial data, boundary conditions and constants."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .laws import (Advection, Burgers, BuckleyLeverett, BuckleyLeverettGravity, Euler,
                   ScalarLaw)
from .verification import exact as ex

LAPLACIAN = "laplacian"
GUERMOND_POPOV = "guermond_popov"
REGULARIZATIONS = (LAPLACIAN, GUERMOND_POPOV)

INJECT = "inject"
INTERPOLATE = "interpolate"


@dataclass(frozen=True)
class StabConstants:
    c_rb: float
    c_max: float
    c_lin: float
    prandtl: float | None = None

    def __post_init__(self):
        for name in ("c_rb", "c_max", "c_lin"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.prandtl is not None and self.prandtl < 0:
            raise ValueError("prandtl must be non-negative")


@dataclass(frozen=True)
class Periodic:
    kind = "periodic"


@dataclass(frozen=True)
class Outflow:
    """No condition imposed; the boundary point follows the interior equation."""
    kind = "outflow"


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed boundary values.

    ``value(coords, t)`` returns the state on the boundary points; ``rate``
    its time derivative.  With ``value=None`` the initial data are held fixed.
    """
    value: Callable | None = None
    rate: Callable | None = None
    kind = "dirichlet"


@dataclass(frozen=True)
class CaseDefinition:
    name: str
    law: object
    domain: tuple[tuple[float, float], ...]
    initial: Callable
    bcs: tuple[tuple[object, object], ...]
    t_final: float
    dt: float
    constants: StabConstants
    regularization: str | None = None
    ic_policy: str = INTERPOLATE
    exact: Callable[[], ex.ExactSolution] | None = None
    regularization_constants: Mapping[str, StabConstants] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def n_fields(self) -> int:
        return self.law.n_fields

    @property
    def is_euler(self) -> bool:
        return isinstance(self.law, Euler)

    def topology(self, axis: int) -> str:
        left, right = self.bcs[axis]
        if isinstance(left, Periodic) != isinstance(right, Periodic):
            raise ValueError(f"{self.name}: periodicity must match on both sides of axis {axis}")
        return "periodic" if isinstance(left, Periodic) else "open"

    @property
    def topologies(self) -> tuple[str, ...]:
        return tuple(self.topology(a) for a in range(self.dim))

    def with_regularization(self, regularization: str) -> "CaseDefinition":
        """Switch the Euler regularization and pick up its published constants."""
        if not self.is_euler:
            raise ValueError(f"{self.name} is not an Euler case")
        if regularization not in REGULARIZATIONS:
            raise ValueError(f"unknown regularization {regularization!r}")
        consts = self.regularization_constants.get(regularization, self.constants)
        return replace(self, regularization=regularization, constants=consts)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def _reflect(x, about=1.0):
    """Map ``[0, 2*about]`` onto ``[0, about]`` symmetrically."""
    return np.where(x <= about, x, 2.0 * about - x)


def _adv_smooth_ic(x, y):
    return np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


def _adv_square_ic(x, y):
    inside = (x > 0.3) & (x < 0.7) & (y > 0.3) & (y < 0.7)
    return inside.astype(float)


def _burgers_smooth_ic(x):
    return np.expm1(x)


def _burgers_step_ic(x):
    return np.where(x < 1.0 / 3.0, 1.0, 0.0)


def _burgers_quadrants(x, y):
    left, low = x < 0.5, y < 0.5
    return np.select([left & low, left & ~low, ~left & low], [0.5, -0.2, 0.8], -1.0)


def _burgers_2d_ic(x, y):
    return _burgers_quadrants(_reflect(x), _reflect(y))


def _bl_step_ic(x):
    return np.where(x < 0.0, 1.0, 0.0)


def _bl_gravity_ic(x, y):
    return np.where(x * x + y * y < 0.5, 1.0, 0.0)


GAMMA_AIR = 1.4
GAMMA_ISENTROPIC = 3.0
_EULER1 = Euler(GAMMA_AIR, 1)
_EULER2 = Euler(GAMMA_AIR, 2)
_EULER_ISEN = Euler(GAMMA_ISENTROPIC, 1)


def _isentropic_rho(x):
    return 1.0 + 0.9 * np.sin(np.pi * x)


def _isentropic_drho(x):
    return 0.9 * np.pi * np.cos(np.pi * x)


def _isentropic_ic(x):
    rho = _isentropic_rho(x)
    e = rho ** GAMMA_ISENTROPIC / (GAMMA_ISENTROPIC - 1.0)
    return np.stack([rho, np.zeros_like(rho), e], axis=-1)


SOD_LEFT = (1.0, 0.0, 1.0)
SOD_RIGHT = (0.125, 0.0, 0.1)


def _sod_ic(x):
    lm = x < 0.5
    rho = np.where(lm, SOD_LEFT[0], SOD_RIGHT[0])
    e = np.where(lm, 1.0 / (GAMMA_AIR - 1.0), 0.1 / (GAMMA_AIR - 1.0))
    return np.stack([rho, np.zeros_like(rho), e], axis=-1)


SHU_OSHER_LEFT = (3.857, 2.629, 10.333)


def _shu_osher_ic(x):
    lm = x < 1.0
    rho = np.where(lm, SHU_OSHER_LEFT[0], 1.0 + 0.2 * np.sin(5.0 * x))
    u = np.where(lm, SHU_OSHER_LEFT[1], 0.0)
    p = np.where(lm, SHU_OSHER_LEFT[2], 1.0)
    return _EULER1.conserved(rho, u[..., None], p)


def _case12_ic(x, y):
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    xr, yr = _reflect(x), _reflect(y)
    left, low = xr < 0.5, yr < 0.5
    rho = np.select([left & low, left & ~low, ~left & low], [0.8, 1.0, 1.0], 17.0 / 32.0)
    speed = 3.0 / np.sqrt(17.0)
    ux = np.where(left & ~low, speed, 0.0)
    uy = np.where(~left & low, speed, 0.0)
    # mirrored halves carry mirrored velocity components
    ux = np.where(x > 1.0, -ux, ux)
    uy = np.where(y > 1.0, -uy, uy)
    p = np.where(~left & ~low, 0.4, 1.0)
    return _EULER2.conserved(rho, np.stack([ux, uy], axis=-1), p)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

_ADV_CONST = StabConstants(c_rb=4.0, c_max=0.5, c_lin=0.25)
_BL_CONST = StabConstants(c_rb=4.0, c_max=0.25, c_lin=0.25)
_EULER_LAP = StabConstants(c_rb=4.0, c_max=0.1, c_lin=0.25)
_EULER_GP_1D = StabConstants(c_rb=4.0, c_max=0.2, c_lin=0.25, prandtl=0.5)
_EULER_GP_2D = StabConstants(c_rb=4.0, c_max=0.1, c_lin=0.25, prandtl=1.0)

_PER = (Periodic(), Periodic())


def _burgers_smooth_exact():
    return ex.burgers_characteristics(_burgers_smooth_ic, np.exp)


def _burgers_smooth_left(coords, t):
    sol = _burgers_smooth_exact()
    return sol(coords, t)


def _burgers_smooth_left_rate(coords, t):
    # implicit derivative of phi = phi0(x - phi t) in t
    phi = _burgers_smooth_left(coords, t)
    slope = np.exp(np.asarray(coords[0]) - phi * t)
    return -phi * slope / (1.0 + t * slope)


def _build_catalog() -> dict[str, Callable[[], CaseDefinition]]:
    def adv_smooth():
        law = Advection([1.0, 1.0])
        dom = ((0.0, 1.0), (0.0, 1.0))
        return CaseDefinition(
            "adv_smooth", law, dom, _adv_smooth_ic, (_PER, _PER), t_final=1.0, dt=1e-4,
            constants=_ADV_CONST, ic_policy=INTERPOLATE,
            exact=lambda: ex.translated(_adv_smooth_ic, law.velocity, dom),
            description="2D periodic advection of sin(2 pi x) sin(2 pi y), one period")

    def adv_square():
        law = Advection([1.0, 1.0])
        dom = ((0.0, 1.0), (0.0, 1.0))
        return CaseDefinition(
            "adv_square", law, dom, _adv_square_ic, (_PER, _PER), t_final=1.0, dt=1e-4,
            constants=_ADV_CONST, ic_policy=INJECT,
            exact=lambda: ex.translated(_adv_square_ic, law.velocity, dom),
            description="2D periodic advection of the indicator of (0.3, 0.7)^2")

    def burgers_smooth():
        return CaseDefinition(
            "burgers_smooth", Burgers([1.0]), ((0.0, 1.0),), _burgers_smooth_ic,
            ((Dirichlet(_burgers_smooth_left, _burgers_smooth_left_rate), Outflow()),),
            t_final=0.01, dt=5e-5, constants=_ADV_CONST, ic_policy=INTERPOLATE,
            exact=_burgers_smooth_exact,
            description="1D Burgers, phi0 = exp(x) - 1, exact inflow data at x = 0")

    def burgers_riemann_1d():
        law = Burgers([1.0])
        return CaseDefinition(
            "burgers_riemann_1d", law, ((0.0, 1.0),), _burgers_step_ic,
            ((Dirichlet(), Outflow()),), t_final=0.2, dt=1e-5, constants=_ADV_CONST,
            ic_policy=INJECT,
            exact=lambda: ex.exact_scalar_riemann(law, 1.0, 0.0, x0=1.0 / 3.0),
            description="1D Burgers moving shock from x = 1/3")

    def burgers_riemann_2d():
        return CaseDefinition(
            "burgers_riemann_2d", Burgers([1.0, 1.0]), ((0.0, 2.0), (0.0, 2.0)),
            _burgers_2d_ic, (_PER, _PER), t_final=0.5, dt=2e-4, constants=_ADV_CONST,
            ic_policy=INJECT,
            description="2D Burgers four-state Riemann problem, symmetric periodic extension")

    def bl_riemann_1d():
        law = BuckleyLeverett()
        return CaseDefinition(
            "bl_riemann_1d", law, ((-1.0, 1.0),), _bl_step_ic,
            ((Dirichlet(), Dirichlet()),), t_final=0.25, dt=5e-5, constants=_BL_CONST,
            ic_policy=INJECT, exact=lambda: ex.exact_scalar_riemann(law, 1.0, 0.0, x0=0.0),
            description="1D Buckley-Leverett Riemann problem (rarefaction + shock)")

    def bl_gravity_2d():
        dirichlet = (Dirichlet(), Dirichlet())
        return CaseDefinition(
            "bl_gravity_2d", BuckleyLeverettGravity(), ((-1.5, 1.5), (-1.5, 1.5)),
            _bl_gravity_ic, (dirichlet, dirichlet), t_final=0.5, dt=1e-4,
            constants=_BL_CONST, ic_policy=INJECT,
            description="2D Buckley-Leverett with gravity, disc of radius sqrt(1/2)")

    def euler_isentropic():
        return CaseDefinition(
            "euler_isentropic", _EULER_ISEN, ((-1.0, 1.0),), _isentropic_ic, (_PER,),
            t_final=0.1, dt=5e-5, constants=_EULER_GP_1D, regularization=GUERMOND_POPOV,
            ic_policy=INTERPOLATE,
            exact=lambda: ex.isentropic_gamma3(_isentropic_rho, _isentropic_drho, 2.0, -1.0),
            regularization_constants={LAPLACIAN: _EULER_LAP, GUERMOND_POPOV: _EULER_GP_1D},
            description="periodic isentropic flow, gamma = 3")

    def euler_sod():
        return CaseDefinition(
            "euler_sod", _EULER1, ((0.0, 1.0),), _sod_ic, ((Dirichlet(), Dirichlet()),),
            t_final=0.25, dt=1e-4, constants=_EULER_GP_1D, regularization=GUERMOND_POPOV,
            ic_policy=INJECT,
            exact=lambda: ex.exact_euler_riemann(SOD_LEFT, SOD_RIGHT, GAMMA_AIR, x0=0.5),
            regularization_constants={LAPLACIAN: _EULER_LAP, GUERMOND_POPOV: _EULER_GP_1D},
            description="Sod shock tube")

    def euler_shu_osher():
        return CaseDefinition(
            "euler_shu_osher", _EULER1, ((0.0, 10.0),), _shu_osher_ic,
            ((Dirichlet(), Dirichlet()),), t_final=1.8, dt=2e-5, constants=_EULER_GP_1D,
            regularization=GUERMOND_POPOV, ic_policy=INJECT,
            regularization_constants={LAPLACIAN: _EULER_LAP, GUERMOND_POPOV: _EULER_GP_1D},
            description="Shu-Osher shock / entropy-wave interaction")

    def euler_case12():
        return CaseDefinition(
            "euler_case12", _EULER2, ((0.0, 2.0), (0.0, 2.0)), _case12_ic, (_PER, _PER),
            t_final=0.25, dt=2e-4, constants=_EULER_GP_2D, regularization=GUERMOND_POPOV,
            ic_policy=INJECT,
            regularization_constants={LAPLACIAN: _EULER_LAP, GUERMOND_POPOV: _EULER_GP_2D},
            description="2D Riemann problem, configuration 12, symmetric periodic extension")

    return {f.__name__: f for f in (adv_smooth, adv_square, burgers_smooth, burgers_riemann_1d,
                                    burgers_riemann_2d, bl_riemann_1d, bl_gravity_2d,
                                    euler_isentropic, euler_sod, euler_shu_osher,
                                    euler_case12)}


_CATALOG = _build_catalog()
CASE_NAMES = tuple(_CATALOG)


def builtin_case(name: str) -> CaseDefinition:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown case {name!r}; choose from {', '.join(CASE_NAMES)}") from None


def is_scalar(law) -> bool:
    return isinstance(law, ScalarLaw)
