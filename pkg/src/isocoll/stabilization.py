"""Residual-based artificial viscosity and the coarse-interpolation stabilization.

Viscosities live on the collocation (Greville) grid.  Residuals are sampled at
the centroids of the Greville cells; each collocation point takes the largest
residual magnitude over the cells it touches.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .linalg import TensorMassSolver
from .splines import GridEvaluator, TensorSpace, apply_along_axis

BDF_MAX_ORDER = 4
HISTORY_CAPACITY = 5
WAVESPEED_STENCIL = 9
NORMALIZATION_RTOL = 1e-12
NORMALIZATION_FLOOR = 1e-14


# ---------------------------------------------------------------------------
# time history and BDF
# ---------------------------------------------------------------------------

def fd_weights(nodes, x0: float, deriv: int = 1) -> np.ndarray:
    """Finite-difference weights on arbitrary nodes (Fornberg's recursion).

    Returns ``w`` with ``f^(deriv)(x0) ~ sum_j w[j] f(nodes[j])``.
    """
    z = np.asarray(nodes, dtype=float)
    n = z.size
    if deriv >= n:
        raise ValueError(f"need more than {deriv} nodes for derivative order {deriv}")
    c = np.zeros((n, deriv + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = z[0] - x0
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = 1.0
        c5, c4 = c4, z[i] - x0
        for j in range(i):
            c3 = z[i] - z[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, deriv]


class HistoryBuffer:
    """Ring of the most recent coefficient snapshots, newest last."""

    def __init__(self, capacity: int = HISTORY_CAPACITY, dt: float | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.dt = dt
        self._times: deque[float] = deque(maxlen=capacity)
        self._snaps: deque[np.ndarray] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._times)

    def push(self, t: float, coeffs: np.ndarray) -> None:
        if self._times and not t > self._times[-1]:
            raise ValueError(f"history times must increase ({t} after {self._times[-1]})")
        self._times.append(float(t))
        self._snaps.append(np.array(coeffs, dtype=float, copy=True))

    @property
    def times(self) -> np.ndarray:
        return np.array(self._times)

    @property
    def snapshots(self) -> list[np.ndarray]:
        return list(self._snaps)

    @property
    def latest(self) -> tuple[float, np.ndarray]:
        return self._times[-1], self._snaps[-1]

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        if len(self) < 3:
            return True
        gaps = np.diff(self.times)
        ref = self.dt if self.dt is not None else gaps[-1]
        return bool(np.all(np.abs(gaps - ref) <= rtol * ref))

    def clear(self) -> None:
        self._times.clear()
        self._snaps.clear()


def bdf_order(n_points: int, max_order: int = BDF_MAX_ORDER) -> int:
    """Order usable with ``n_points`` time levels (current one included)."""
    return max(0, min(max_order, n_points - 1))


def bdf_time_derivative(history: HistoryBuffer, current=None, t: float | None = None,
                        max_order: int = BDF_MAX_ORDER) -> np.ndarray:
    """Backward-difference estimate of the coefficient time derivative.

    ``current`` (at time ``t``) is the newest level; when omitted the newest
    history snapshot plays that role.  The order is ``min(max_order, levels-1)``
    and weights are recomputed from the actual times, so an irregular last step
    is handled.  With a single level the derivative is zero.
    """
    times = list(history.times)
    snaps = history.snapshots
    if current is None:
        if not snaps:
            raise ValueError("empty history and no current state")
        t, current = times.pop(), snaps.pop()
    elif t is None:
        raise ValueError("time of the current state is required")
    elif times and abs(times[-1] - t) <= 1e-14 * max(1.0, abs(t)):
        times.pop()
        snaps.pop()
    current = np.asarray(current, dtype=float)
    order = bdf_order(len(times) + 1, max_order)
    if order == 0:
        return np.zeros_like(current)
    nodes = [t] + times[::-1][:order]
    levels = [current] + snaps[::-1][:order]
    w = fd_weights(nodes, t, 1)
    out = w[0] * current
    for wj, lv in zip(w[1:], levels[1:]):
        out = out + wj * lv
    return out


# ---------------------------------------------------------------------------
# residual sampling and viscosities
# ---------------------------------------------------------------------------

def pde_residual(dphi_dt: np.ndarray, flux_divergence: np.ndarray) -> np.ndarray:
    """``R = dphi/dt + div f`` sampled at the same points (any trailing batch)."""
    return np.asarray(dphi_dt, dtype=float) + np.asarray(flux_divergence, dtype=float)


def local_residual_max(residual: np.ndarray, periodic: Sequence[bool]) -> np.ndarray:
    """Largest ``|R|`` over the Greville cells adjacent to each collocation point.

    ``residual`` holds centroid values with the spatial axes first.  Along an
    open axis with ``n`` points there are ``n - 1`` cells; a periodic axis has
    one cell per point, cell ``i`` lying between points ``i`` and ``i + 1``.
    """
    out = np.abs(np.asarray(residual, dtype=float))
    for axis, per in enumerate(periodic):
        a = np.moveaxis(out, axis, 0)
        if per:
            b = np.maximum(a, np.roll(a, 1, axis=0))
        else:
            b = np.empty((a.shape[0] + 1,) + a.shape[1:])
            b[0], b[-1] = a[0], a[-1]
            b[1:-1] = np.maximum(a[:-1], a[1:])
        out = np.moveaxis(b, 0, axis)
    return out


def _modes(periodic, open_mode):
    return ["wrap" if p else open_mode for p in periodic]


NORMALIZATIONS = ("global", "local")


def normalization(values: np.ndarray, periodic: Sequence[bool], mode: str = "global") -> np.ndarray:
    """Normalization of the residual viscosity at every collocation point.

    ``global``: the domain-wide deviation ``max |phi - mean(phi)|``.
    ``local``: ``(max - min) - |phi_i - mean|`` over the 3-wide neighbour
    stencil, where neighbours missing at an open boundary are left out.
    """
    v = np.asarray(values, dtype=float)
    if mode == "global":
        dev = float(np.max(np.abs(v - np.mean(v)))) if v.size else 0.0
        return np.full(v.shape, dev)
    if mode != "local":
        raise ValueError(f"unknown normalization {mode!r}")
    d = len(periodic)
    size = [3] * d
    vmax = ndimage.maximum_filter(v, size=size, mode=_modes(periodic, "nearest"))
    vmin = ndimage.minimum_filter(v, size=size, mode=_modes(periodic, "nearest"))
    modes = _modes(periodic, "constant")
    total = ndimage.uniform_filter(v, size=size, mode=modes, cval=0.0)
    count = ndimage.uniform_filter(np.ones_like(v), size=size, mode=modes, cval=0.0)
    mean = total / count
    return (vmax - vmin) - np.abs(v - mean)


def normalization_floor(values: np.ndarray) -> float:
    v = np.asarray(values)
    spread = float(np.max(v) - np.min(v)) if v.size else 0.0
    return NORMALIZATION_RTOL * max(spread, NORMALIZATION_FLOOR)


def residual_viscosity(r_tilde, m, h, c_rb: float, floor: float) -> np.ndarray:
    """``C_RB h^2 R~ / max(m, floor)``."""
    r_tilde = np.asarray(r_tilde, dtype=float)
    return c_rb * np.square(h) * r_tilde / np.maximum(m, floor)


def stencil_wavespeed(speed: np.ndarray, periodic: Sequence[bool],
                      width: int = WAVESPEED_STENCIL) -> np.ndarray:
    """Max wavespeed over a ``width``-point box per direction (clamped at open ends)."""
    return ndimage.maximum_filter(np.asarray(speed, dtype=float), size=[width] * len(periodic),
                                  mode=_modes(periodic, "nearest"))


def first_order_viscosity(c_stencil, h, c_max: float) -> np.ndarray:
    return c_max * np.asarray(h) * np.asarray(c_stencil)


def artificial_viscosity(nu_rb, nu_fo) -> np.ndarray:
    return np.minimum(nu_rb, nu_fo)


def euler_viscosities(nu_rb_per_eq, nu_fo, regularization: str, c_rb: float,
                      prandtl: float | None = None):
    """Combine per-equation residual viscosities for the Euler system.

    ``nu_rb_per_eq`` has the equation index on its last axis.  Returns
    ``nu_art`` for the Laplacian regularization and ``(mu_art, kappa_art)``
    for the Guermond-Popov one.
    """
    mu = np.minimum(np.max(nu_rb_per_eq, axis=-1), nu_fo)
    if regularization == "laplacian":
        return mu
    if regularization != "guermond_popov":
        raise ValueError(f"unknown regularization {regularization!r}")
    if prandtl is None:
        raise ValueError("the Guermond-Popov regularization needs a Prandtl number")
    ratio = prandtl / c_rb if c_rb > 0 else 0.0
    return mu, ratio * mu


@dataclass
class ViscosityState:
    """Viscosities at the collocation points, frozen for one time step.

    ``nu_art`` is the scalar/Laplacian viscosity, or ``mu_art`` under the
    Guermond-Popov regularization, in which case ``kappa_art`` is also set.
    """
    nu_art: np.ndarray
    nu_lin: np.ndarray
    nu_fo: np.ndarray
    kappa_art: np.ndarray | None = None
    frozen: bool = True
    nu_rb: np.ndarray | None = None  # uncapped residual-based value, max over equations

    @property
    def mu_art(self) -> np.ndarray | None:
        return self.nu_art if self.kappa_art is not None else None

    @property
    def max_nu(self) -> float:
        return float(np.max(self.nu_art)) if self.nu_art.size else 0.0

    @classmethod
    def zeros(cls, shape, guermond_popov: bool = False) -> "ViscosityState":
        z = np.zeros(shape)
        return cls(z, z.copy(), z.copy(), z.copy() if guermond_popov else None)


# ---------------------------------------------------------------------------
# coarse-interpolation linear stabilization
# ---------------------------------------------------------------------------

class CoarseStabOperator:
    """Gradient re-interpolation through the degree ``k-1`` space.

    For each gradient component: evaluate it at the Greville points of the
    solution space and fit there, sample that fit at the Greville points of
    the coarse space and fit again, then differentiate the coarse fit along
    the same direction at the fine Greville points.  Summing gives the
    divergence of the re-interpolated gradient.
    """

    def __init__(self, space: TensorSpace, solver: TensorMassSolver | None = None):
        if min(space.degrees) < 2:
            raise ValueError("linear stabilization needs degree >= 2")
        self.space = space
        self.coarse = TensorSpace([s.with_degree(s.degree - 1) for s in space.spaces])
        self.solver = solver or TensorMassSolver.for_space(space)
        self.coarse_solver = TensorMassSolver.for_space(self.coarse)
        self.fine_at_fine = GridEvaluator(space, space.greville)
        self.fine_at_coarse = GridEvaluator(space, self.coarse.greville)
        self.coarse_at_fine = GridEvaluator(self.coarse, space.greville)

    def projected_divergence(self, coeffs: np.ndarray) -> np.ndarray:
        """``div(Pi grad phi^)`` at the fine Greville points (batched)."""
        out = None
        factors = self.solver.factors
        for axis in range(self.space.dim):
            # along the other axes the fit undoes an evaluation at the same points
            grad = apply_along_axis(self.fine_at_fine.matrix(axis, 1), coeffs, axis)
            grad_fit = apply_along_axis(factors[axis].solve, grad, axis)
            coarse_vals = self.fine_at_coarse(grad_fit)
            coarse_fit = self.coarse_solver.solve(coarse_vals)
            term = self.coarse_at_fine.partial(coarse_fit, axis, 1)
            out = term if out is None else out + term
        return out

    def laplacian(self, coeffs: np.ndarray) -> np.ndarray:
        out = None
        for axis in range(self.space.dim):
            term = self.fine_at_fine.partial(coeffs, axis, 2)
            out = term if out is None else out + term
        return out


def linear_stab_term(op: CoarseStabOperator, coeffs, nu_lin, laplacian=None) -> np.ndarray:
    """``nu_lin (lap phi - div Pi grad phi^)`` at the collocation points."""
    coeffs = np.asarray(getattr(coeffs, "coefficients", coeffs), dtype=float)
    lap = op.laplacian(coeffs) if laplacian is None else laplacian
    diff = lap - op.projected_divergence(coeffs)
    nu = np.asarray(nu_lin, dtype=float)
    extra = diff.ndim - nu.ndim
    return nu.reshape(nu.shape + (1,) * extra) * diff
