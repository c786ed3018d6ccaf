"""Conservation laws: fluxes, flux Jacobians and wavespeeds.

Scalar laws map a state array ``phi`` to a flux of shape ``(d, *phi.shape)``.
The Euler system works on conserved arrays whose last axis holds
``(rho, rho*u_1, ..., rho*u_d, E)``.
"""

from __future__ import annotations

import numpy as np


class InadmissibleStateError(ArithmeticError):
    """Non-positive density or temperature in an Euler state."""

    def __init__(self, message, index=None, state=None, time=None):
        super().__init__(message)
        self.index = index
        self.state = state
        self.time = time


class ScalarLaw:
    """Base class for ``phi_t + div f(phi) = 0``."""

    name = "scalar"
    n_fields = 1

    def __init__(self, dim: int):
        self.dim = dim

    def flux(self, phi):
        raise NotImplementedError

    def flux_derivative(self, phi):
        raise NotImplementedError

    def wavespeed(self, phi):
        """Euclidean norm of ``f'(phi)``."""
        fp = self.flux_derivative(np.asarray(phi, dtype=float))
        return np.sqrt(np.sum(fp * fp, axis=0))

    def godunov_flux(self, left, right, axis: int):
        """Exact Godunov flux in one direction, or ``None`` if not closed-form."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Advection(ScalarLaw):
    """Linear transport ``f(phi) = a phi``."""

    name = "advection"

    def __init__(self, velocity):
        self.velocity = np.atleast_1d(np.asarray(velocity, dtype=float))
        super().__init__(self.velocity.size)

    def _a(self, phi):
        return self.velocity.reshape((-1,) + (1,) * np.ndim(phi))

    def flux(self, phi):
        return self._a(phi) * np.asarray(phi, dtype=float)[None]

    def flux_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        return np.broadcast_to(self._a(phi), (self.dim,) + phi.shape).copy()

    def godunov_flux(self, left, right, axis):
        a = self.velocity[axis]
        return a * (left if a >= 0 else right)


class Burgers(ScalarLaw):
    """``f(phi) = phi^2/2 * v`` with a fixed direction vector ``v``."""

    name = "burgers"

    def __init__(self, direction):
        self.direction = np.atleast_1d(np.asarray(direction, dtype=float))
        super().__init__(self.direction.size)

    def _v(self, phi):
        return self.direction.reshape((-1,) + (1,) * np.ndim(phi))

    def flux(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self._v(phi) * (0.5 * phi * phi)[None]

    def flux_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        return self._v(phi) * phi[None]

    def godunov_flux(self, left, right, axis):
        v = self.direction[axis]
        left, right = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
        # convex case (v > 0): max(f(max(l, 0)), f(min(r, 0))); v < 0 follows by u -> -u
        if v >= 0:
            a, b = np.maximum(left, 0.0), np.minimum(right, 0.0)
        else:
            a, b = np.minimum(left, 0.0), np.maximum(right, 0.0)
        return 0.5 * v * np.maximum(a * a, b * b)


def _bl_frac(phi):
    den = phi * phi + (1.0 - phi) ** 2
    return phi * phi / den, den


class BuckleyLeverett(ScalarLaw):
    """Fractional-flow saturation equation with unit material properties."""

    name = "buckley_leverett"

    def __init__(self):
        super().__init__(1)

    def flux(self, phi):
        phi = np.asarray(phi, dtype=float)
        return _bl_frac(phi)[0][None]

    def flux_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        _, den = _bl_frac(phi)
        return (2.0 * phi * (1.0 - phi) / (den * den))[None]

    def godunov_flux(self, left, right, axis):
        # f is non-decreasing on [0, 1], so the Godunov flux is upwind
        return _bl_frac(left)[0]


class BuckleyLeverettGravity(ScalarLaw):
    """Two-dimensional saturation equation with gravity along ``-y``."""

    name = "buckley_leverett_gravity"

    def __init__(self):
        super().__init__(2)

    def flux(self, phi):
        phi = np.asarray(phi, dtype=float)
        fx, den = _bl_frac(phi)
        fy = fx * (1.0 - 5.0 * (1.0 - phi) ** 2)
        return np.stack([fx, fy])

    def flux_derivative(self, phi):
        phi = np.asarray(phi, dtype=float)
        fx, den = _bl_frac(phi)
        dfx = 2.0 * phi * (1.0 - phi) / (den * den)
        g = 1.0 - 5.0 * (1.0 - phi) ** 2
        dfy = dfx * g + fx * 10.0 * (1.0 - phi)
        return np.stack([dfx, dfy])

    def godunov_flux(self, left, right, axis):
        if axis == 0:
            return _bl_frac(left)[0]
        return None


class Euler:
    """Compressible Euler equations for an ideal gas."""

    name = "euler"

    def __init__(self, gamma: float = 1.4, dim: int = 1):
        if gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        self.gamma = float(gamma)
        self.dim = dim
        self.n_fields = dim + 2

    def __repr__(self):
        return f"Euler(gamma={self.gamma}, dim={self.dim})"

    def split(self, u):
        u = np.asarray(u, dtype=float)
        return u[..., 0], u[..., 1:1 + self.dim], u[..., -1]

    def velocity(self, u):
        rho, mom, _ = self.split(u)
        return mom / rho[..., None]

    def pressure(self, u):
        rho, mom, e = self.split(u)
        if np.any(rho <= 0):
            raise InadmissibleStateError("non-positive density", state=u)
        kinetic = 0.5 * np.sum(mom * mom, axis=-1) / rho
        return (self.gamma - 1.0) * (e - kinetic)

    def temperature(self, u):
        rho = self.split(u)[0]
        return self.pressure(u) / rho

    def conserved(self, rho, vel, p):
        """Conserved variables from density, velocity ``(..., d)`` and pressure."""
        rho = np.asarray(rho, dtype=float)
        vel = np.asarray(vel, dtype=float).reshape(rho.shape + (self.dim,))
        p = np.asarray(p, dtype=float)
        e = p / (self.gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1)
        return np.concatenate([rho[..., None], rho[..., None] * vel, e[..., None]], axis=-1)

    def check_admissible(self, u, time=None):
        rho = self.split(u)[0]
        bad = ~(rho > 0)
        if not np.any(bad):
            bad = ~(self.temperature(u) > 0)
        if np.any(bad):
            idx = tuple(int(i[0]) for i in np.nonzero(bad))
            raise InadmissibleStateError(
                f"inadmissible Euler state at collocation index {idx}, t={time}: "
                f"{np.asarray(u)[idx]}", index=idx, state=np.asarray(u)[idx], time=time)

    def flux(self, u):
        """Flux tensor of shape ``(..., n_fields, d)``."""
        rho, mom, e = self.split(u)
        vel = mom / rho[..., None]
        p = self.pressure(u)
        d = self.dim
        out = np.empty(np.shape(u)[:-1] + (d + 2, d))
        out[..., 0, :] = mom
        out[..., 1:1 + d, :] = mom[..., :, None] * vel[..., None, :]
        for a in range(d):
            out[..., 1 + a, a] += p
        out[..., -1, :] = vel * (e + p)[..., None]
        return out

    def wavespeed(self, u):
        """``|u| + sqrt(gamma T)``; raises on inadmissible states."""
        self.check_admissible(u)
        vel = self.velocity(u)
        temp = self.temperature(u)
        return np.sqrt(np.sum(vel * vel, axis=-1)) + np.sqrt(self.gamma * temp)


def euler_pressure(u, gamma: float) -> np.ndarray:
    """Pressure of conserved state(s) ``(rho, rho*u..., E)``."""
    u = np.asarray(u, dtype=float)
    return Euler(gamma, u.shape[-1] - 2).pressure(u)


def euler_temperature(u, gamma: float) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return Euler(gamma, u.shape[-1] - 2).temperature(u)


def flux_eval(law, state):
    """Flux of a scalar law (shape ``(d, ...)``) or Euler flux (shape ``(..., m, d)``)."""
    return law.flux(state)


def wavespeed(law, state):
    return law.wavespeed(state)
