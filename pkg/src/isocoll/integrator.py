"""Semi-discrete collocation system and explicit RK4 time stepping.

Coefficient arrays carry the spatial axes first and a trailing component
axis (length 1 for scalar laws, ``d + 2`` for Euler).
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .cases import (GUERMOND_POPOV, INJECT, INTERPOLATE, LAPLACIAN, CaseDefinition,
                    Dirichlet, StabConstants)
from .laws import Euler, InadmissibleStateError
from .linalg import TensorMassSolver
from .splines import GridEvaluator, TensorSpace
from . import stabilization as stab

log = logging.getLogger(__name__)

DIAGNOSTICS_HEADER = "step,t,field,min,max,numax,walltime_ms"


class BlowUpError(FloatingPointError):
    """Non-finite coefficients after a time step."""

    def __init__(self, message, step=None, time=None, state=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.state = state


BDF_STARTUPS = ("wait", "ramp")


@dataclass(frozen=True)
class RunOptions:
    """Stabilization switches and overrides for one run."""
    nonlinear: bool = True
    linear: bool = True
    constants: StabConstants | None = None
    regularization: str | None = None
    ic_policy: str | None = None
    bdf_order: int = stab.BDF_MAX_ORDER
    # "ramp": raise the BDF order as history accumulates; "wait": no nonlinear
    # viscosity until the full order is available
    bdf_startup: str = "wait"
    normalization: str = "global"

    def __post_init__(self):
        if self.bdf_startup not in BDF_STARTUPS:
            raise ValueError(f"unknown BDF start-up {self.bdf_startup!r}")


@dataclass
class SimState:
    coeffs: np.ndarray
    t: float = 0.0
    step: int = 0
    history: stab.HistoryBuffer = field(default_factory=stab.HistoryBuffer)
    viscosity: stab.ViscosityState | None = None


@dataclass
class _Face:
    axis: int
    index: int
    bc: Dirichlet
    coords: list
    fixed: np.ndarray | None = None
    fixed_values: np.ndarray | None = None


def component_names(law) -> list[str]:
    if isinstance(law, Euler):
        if law.dim == 1:
            return ["rho", "mom", "E"]
        return ["rho"] + [f"mom_{c}" for c in "xyz"[:law.dim]] + ["E"]
    return ["phi"]


class SemiDiscreteSystem:
    """Collocation right-hand side, viscosity evaluation and boundary data."""

    def __init__(self, case: CaseDefinition, n_elements, degree: int,
                 options: RunOptions | None = None):
        options = options or RunOptions()
        self.case = case
        self.law = case.law
        self.options = options
        self.constants = options.constants or case.constants
        self.is_euler = isinstance(self.law, Euler)
        self.regularization = (options.regularization or case.regularization or LAPLACIAN) \
            if self.is_euler else None
        if self.regularization not in (None, LAPLACIAN, GUERMOND_POPOV):
            raise ValueError(f"unknown regularization {self.regularization!r}")
        if (options.nonlinear or options.linear) and degree < 2:
            raise ValueError("stabilized runs need degree >= 2")
        self.space = TensorSpace.uniform(case.domain, n_elements, degree, list(case.topologies))
        self.dim = self.space.dim
        self.n_fields = self.law.n_fields
        self.periodic = self.space.periodic
        self.solver = TensorMassSolver.for_space(self.space)
        self.at_points = GridEvaluator(self.space, self.space.greville)
        self.at_centroids = GridEvaluator(self.space, self.space.centroids)
        self.h = self.space.mesh_size
        self.coarse = stab.CoarseStabOperator(self.space, self.solver) if options.linear else None
        self.names = component_names(self.law)
        self._faces = self._build_faces()

    # ---- geometry and boundary data -------------------------------------
    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.space.shape

    @property
    def state_shape(self) -> tuple[int, ...]:
        return self.space.shape + (self.n_fields,)

    def _build_faces(self) -> list[_Face]:
        faces = []
        g = self.space.greville
        for axis in range(self.dim):
            if self.periodic[axis]:
                continue
            for side, bc in enumerate(self.case.bcs[axis]):
                if not isinstance(bc, Dirichlet):
                    continue
                index = 0 if side == 0 else self.space.shape[axis] - 1
                coords = [np.array([g[a][index]]) if a == axis else g[a]
                          for a in range(self.dim)]
                faces.append(_Face(axis, index, bc, np.meshgrid(*coords, indexing="ij")))
        return faces

    def _face_slice(self, face: _Face):
        sl = [slice(None)] * (self.dim + 1)
        sl[face.axis] = slice(face.index, face.index + 1)
        return tuple(sl)

    def _face_values(self, func, face: _Face, t: float) -> np.ndarray:
        vals = np.asarray(func(face.coords, t), dtype=float)
        if vals.ndim == self.dim:
            vals = vals[..., None]
        return np.broadcast_to(vals, face.coords[0].shape + (self.n_fields,))

    def _fit_face(self, face: _Face, values: np.ndarray) -> np.ndarray:
        # the face coefficients interpolate the data along the remaining axes
        out = values
        for axis in reversed(range(self.dim)):
            if axis != face.axis:
                out = np.moveaxis(out, axis, 0)
                shape = out.shape
                out = self.solver.factors[axis].solve(out.reshape(shape[0], -1)).reshape(shape)
                out = np.moveaxis(out, 0, axis)
        return out

    def freeze_boundary(self, coeffs: np.ndarray) -> None:
        """Record boundary coefficients for Dirichlet sides held at their initial data."""
        for face in self._faces:
            if face.bc.value is None:
                face.fixed = coeffs[self._face_slice(face)].copy()

    def apply_bcs(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        """Overwrite Dirichlet boundary coefficients (in place) and return the array."""
        for face in self._faces:
            sl = self._face_slice(face)
            if face.bc.value is None:
                if face.fixed is not None:
                    coeffs[sl] = face.fixed
            else:
                coeffs[sl] = self._fit_face(face, self._face_values(face.bc.value, face, t))
        return coeffs

    def _boundary_rates(self, rates: np.ndarray, t: float) -> None:
        for face in self._faces:
            sl = self._face_slice(face)
            if face.bc.rate is None:
                rates[sl] = 0.0
            else:
                rates[sl] = self._face_values(face.bc.rate, face, t)

    # ---- initial data ----------------------------------------------------
    def initial_coeffs(self, policy: str | None = None) -> np.ndarray:
        policy = policy or self.options.ic_policy or self.case.ic_policy
        vals = np.asarray(self.case.initial(*self.space.grid()), dtype=float)
        if vals.ndim == self.dim:
            vals = vals[..., None]
        if vals.shape != self.state_shape:
            raise ValueError(f"initial data shape {vals.shape} != {self.state_shape}")
        if policy == INJECT:
            return vals.copy()
        if policy == INTERPOLATE:
            return self.solver.solve(vals)
        raise ValueError(f"unknown initial-condition policy {policy!r}")

    # ---- building blocks ---------------------------------------------------
    def values(self, coeffs: np.ndarray) -> np.ndarray:
        return self.at_points(coeffs)

    def flux_fit(self, vals: np.ndarray) -> np.ndarray:
        """Coefficients of every flux component, shape ``(*grid, m, d)``."""
        if self.is_euler:
            flux = self.law.flux(vals)
        else:
            flux = np.moveaxis(self.law.flux(vals[..., 0]), 0, -1)[..., None, :]
        flat = flux.reshape(self.grid_shape + (-1,))
        return self.solver.solve(flat).reshape(flux.shape)

    def divergence(self, evaluator: GridEvaluator, flux_coeffs: np.ndarray) -> np.ndarray:
        out = None
        for axis in range(self.dim):
            term = evaluator.partial(flux_coeffs[..., axis], axis, 1)
            out = term if out is None else out + term
        return out

    def laplacian(self, coeffs: np.ndarray) -> np.ndarray:
        out = None
        for axis in range(self.dim):
            term = self.at_points.partial(coeffs, axis, 2)
            out = term if out is None else out + term
        return out

    def wavespeed(self, vals: np.ndarray, t: float | None = None) -> np.ndarray:
        if self.is_euler:
            self.law.check_admissible(vals, t)
            return self.law.wavespeed(vals)
        return self.law.wavespeed(vals[..., 0])

    # ---- viscosity ---------------------------------------------------------
    def compute_viscosity(self, coeffs: np.ndarray, t: float, history: stab.HistoryBuffer,
                          vals: np.ndarray | None = None,
                          flux_coeffs: np.ndarray | None = None) -> stab.ViscosityState:
        """Viscosities from the state at the start of a step."""
        vals = self.values(coeffs) if vals is None else vals
        consts = self.constants
        c9 = stab.stencil_wavespeed(self.wavespeed(vals, t), self.periodic)
        nu_fo = stab.first_order_viscosity(c9, self.h, consts.c_max)
        nu_lin = consts.c_lin * self.h * c9 if self.options.linear else np.zeros_like(nu_fo)
        gp = self.regularization == GUERMOND_POPOV
        n_levels = len(history)
        if not (n_levels and history.latest[0] == t):
            n_levels += 1
        order = stab.bdf_order(n_levels, self.options.bdf_order)
        waiting = self.options.bdf_startup == "wait" and order < self.options.bdf_order
        if not self.options.nonlinear or order == 0 or waiting:
            zero = np.zeros_like(nu_fo)
            return stab.ViscosityState(zero, nu_lin, nu_fo, zero.copy() if gp else None)

        dcdt = stab.bdf_time_derivative(history, coeffs, t, self.options.bdf_order)
        fc = self.flux_fit(vals) if flux_coeffs is None else flux_coeffs
        resid = stab.pde_residual(self.at_centroids(dcdt), self.divergence(self.at_centroids, fc))
        r_tilde = stab.local_residual_max(resid, self.periodic)
        nu_rb = np.empty_like(r_tilde)
        for eq in range(self.n_fields):
            v = vals[..., eq]
            m = stab.normalization(v, self.periodic, self.options.normalization)
            nu_rb[..., eq] = stab.residual_viscosity(r_tilde[..., eq], m, self.h, consts.c_rb,
                                                     stab.normalization_floor(v))
        rb_max = nu_rb.max(axis=-1)
        if not self.is_euler:
            return stab.ViscosityState(stab.artificial_viscosity(nu_rb[..., 0], nu_fo),
                                       nu_lin, nu_fo, nu_rb=rb_max)
        combined = stab.euler_viscosities(nu_rb, nu_fo, self.regularization, consts.c_rb,
                                          consts.prandtl)
        if gp:
            mu, kappa = combined
            return stab.ViscosityState(mu, nu_lin, nu_fo, kappa, nu_rb=rb_max)
        return stab.ViscosityState(combined, nu_lin, nu_fo, nu_rb=rb_max)

    # ---- right-hand side ---------------------------------------------------
    def point_rates(self, coeffs: np.ndarray, t: float, visc: stab.ViscosityState,
                    vals: np.ndarray | None = None,
                    flux_coeffs: np.ndarray | None = None) -> np.ndarray:
        """Time derivatives of the solution at the collocation points."""
        vals = self.values(coeffs) if vals is None else vals
        fc = self.flux_fit(vals) if flux_coeffs is None else flux_coeffs
        rates = -self.divergence(self.at_points, fc)
        lap = None
        if self.options.linear or (self.options.nonlinear
                                   and self.regularization != GUERMOND_POPOV):
            lap = self.laplacian(coeffs)
        if self.options.nonlinear:
            if self.regularization == GUERMOND_POPOV:
                rates += self.gp_terms(coeffs, vals, visc.nu_art, visc.kappa_art)
            else:
                rates += visc.nu_art[..., None] * lap
        if self.options.linear:
            rates += stab.linear_stab_term(self.coarse, coeffs, visc.nu_lin, lap)
        self._boundary_rates(rates, t)
        return rates

    def rhs(self, coeffs: np.ndarray, t: float, visc: stab.ViscosityState,
            vals: np.ndarray | None = None, flux_coeffs: np.ndarray | None = None) -> np.ndarray:
        """Coefficient rates (mass-solved point rates)."""
        return self.solver.solve(self.point_rates(coeffs, t, visc, vals, flux_coeffs))

    def gp_terms(self, coeffs, vals, mu, kappa) -> np.ndarray:
        """Divergence of the Guermond-Popov viscous flux with frozen coefficients."""
        d = self.dim
        ev = self.at_points
        rho = vals[..., 0]
        mom = vals[..., 1:1 + d]
        u = mom / rho[..., None]
        first = [ev.partial(coeffs, b, 1) for b in range(d)]
        second = {}
        for b in range(d):
            for c in range(b, d):
                orders = [0] * d
                orders[b] += 1
                orders[c] += 1
                second[b, c] = second[c, b] = ev(coeffs, orders)
        drho = [first[b][..., 0] for b in range(d)]
        # du[b][..., a] = d_b u_a
        du = [(first[b][..., 1:1 + d] - u * drho[b][..., None]) / rho[..., None]
              for b in range(d)]
        d2rho = {bc: s[..., 0] for bc, s in second.items()}

        def d2u(b, c):
            return (second[b, c][..., 1:1 + d] - drho[b][..., None] * du[c]
                    - drho[c][..., None] * du[b] - u * d2rho[b, c][..., None]) / rho[..., None]

        d2u_cache = {(b, c): d2u(b, c) for b in range(d) for c in range(d)}

        def strain(a, b):
            return 0.5 * (du[b][..., a] + du[a][..., b])

        def d_strain(c, a, b):
            return 0.5 * (d2u_cache[c, b][..., a] + d2u_cache[c, a][..., b])

        lap_rho = sum(d2rho[b, b] for b in range(d))
        lap_e = sum(second[b, b][..., -1] for b in range(d))
        out = np.empty_like(vals)
        out[..., 0] = kappa * lap_rho
        for a in range(d):
            visc = sum(drho[b] * strain(a, b) + rho * d_strain(b, a, b) for b in range(d))
            mass = sum(d2rho[b, b] * u[..., a] + drho[b] * du[b][..., a] for b in range(d))
            out[..., 1 + a] = mu * visc + kappa * mass
        kin = 0.5 * np.sum(u * u, axis=-1)
        e_mass = sum(np.sum(u * du[b], axis=-1) * drho[b] + kin * d2rho[b, b] for b in range(d))
        e_visc = sum(drho[b] * strain(b, a) * u[..., a] + rho * d_strain(b, b, a) * u[..., a]
                     + rho * strain(b, a) * du[b][..., a]
                     for b in range(d) for a in range(d))
        out[..., -1] = kappa * (lap_e + e_mass) + mu * e_visc
        return out

    # ---- time stepping -----------------------------------------------------
    def check_state(self, coeffs: np.ndarray, step: int, t: float) -> np.ndarray:
        if not np.all(np.isfinite(coeffs)):
            raise BlowUpError(f"non-finite solution at step {step}, t={t:.6g}",
                              step=step, time=t)
        vals = self.values(coeffs)
        if self.is_euler:
            self.law.check_admissible(vals, t)
        return vals

    def rk4_step(self, state: SimState, dt: float) -> SimState:
        """Advance one step with the viscosity frozen at the step start."""
        if not dt > 0:
            raise ValueError("dt must be positive")
        c0, t = state.coeffs, state.t
        vals = self.values(c0)
        fc = self.flux_fit(vals)
        visc = self.compute_viscosity(c0, t, state.history, vals, fc)
        k1 = self.rhs(c0, t, visc, vals, fc)
        c1 = self.apply_bcs(c0 + 0.5 * dt * k1, t + 0.5 * dt)
        k2 = self.rhs(c1, t + 0.5 * dt, visc)
        c2 = self.apply_bcs(c0 + 0.5 * dt * k2, t + 0.5 * dt)
        k3 = self.rhs(c2, t + 0.5 * dt, visc)
        c3 = self.apply_bcs(c0 + dt * k3, t + dt)
        k4 = self.rhs(c3, t + dt, visc)
        new = self.apply_bcs(c0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), t + dt)
        return SimState(new, t + dt, state.step + 1, state.history, visc)

    def initial_state(self, policy: str | None = None) -> SimState:
        c = self.initial_coeffs(policy)
        self.freeze_boundary(c)
        c = self.apply_bcs(c, 0.0)
        hist = stab.HistoryBuffer(dt=self.case.dt)
        hist.push(0.0, c)
        return SimState(c, 0.0, 0, hist)


def step_times(t_final: float, dt: float) -> list[float]:
    """End times of every step; the last one is shortened to land on ``t_final``."""
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if t_final == 0:
        return []
    n_full = int(math.floor(t_final / dt * (1 + 1e-12)))
    times = [k * dt for k in range(1, n_full + 1)]
    if not times or t_final - times[-1] > 1e-9 * dt:
        times.append(t_final)
    else:
        times[-1] = t_final
    return times


@dataclass
class RunResult:
    system: SemiDiscreteSystem
    state: SimState
    viscosity: stab.ViscosityState
    diagnostics: list[str]
    wall_time: float


def diagnostics_lines(system: SemiDiscreteSystem, state: SimState,
                      visc: stab.ViscosityState | None, wall_ms: float) -> list[str]:
    vals = system.values(state.coeffs)
    numax = visc.max_nu if visc is not None else 0.0
    return [f"{state.step},{state.t:.17g},{name},{np.min(vals[..., i]):.17g},"
            f"{np.max(vals[..., i]):.17g},{numax:.17g},{wall_ms:.3f}"
            for i, name in enumerate(system.names)]


def run(case: CaseDefinition, n_elements, degree: int, options: RunOptions | None = None,
        dt: float | None = None, t_final: float | None = None, every: int = 0,
        stream: TextIO | None = None,
        callback: Callable[[SemiDiscreteSystem, SimState], None] | None = None) -> RunResult:
    """Integrate a case from its initial data to ``t_final``.

    Diagnostics are collected every ``every`` steps (0 disables all but the
    final line) and, if given, echoed to ``stream``.
    """
    system = SemiDiscreteSystem(case, n_elements, degree, options)
    dt = case.dt if dt is None else dt
    t_final = case.t_final if t_final is None else t_final
    state = system.initial_state()
    diags: list[str] = []
    start = _time.perf_counter()

    def emit(visc):
        lines = diagnostics_lines(system, state, visc, 1e3 * (_time.perf_counter() - start))
        diags.extend(lines)
        if stream is not None:
            stream.write("\n".join(lines) + "\n")

    if stream is not None:
        stream.write(DIAGNOSTICS_HEADER + "\n")
    visc = None
    for t_next in step_times(t_final, dt):
        try:
            new = system.rk4_step(state, t_next - state.t)
            new.t = t_next
            system.check_state(new.coeffs, new.step, t_next)
        except BlowUpError as exc:
            exc.state = state
            emit(visc)
            raise
        except InadmissibleStateError as exc:
            if exc.time is None:
                exc.time = state.t
            emit(visc)
            raise
        state, visc = new, new.viscosity
        state.history.push(state.t, state.coeffs)
        if callback is not None:
            callback(system, state)
        if every and state.step % every == 0:
            emit(visc)
    if visc is None:
        vals = system.values(state.coeffs)
        visc = stab.ViscosityState.zeros(system.grid_shape,
                                         system.regularization == GUERMOND_POPOV)
        visc.nu_fo = stab.first_order_viscosity(
            stab.stencil_wavespeed(system.wavespeed(vals), system.periodic), system.h,
            system.constants.c_max)
    if not every or state.step % every:
        emit(visc)
    return RunResult(system, state, visc, diags, _time.perf_counter() - start)


def final_viscosity(result: RunResult) -> stab.ViscosityState:
    """Viscosity the next step would use, computed from the final state."""
    s = result.state
    return result.system.compute_viscosity(s.coeffs, s.t, s.history)
