"""First-order finite-volume reference solver (1D and 2D, Cartesian cells).

Scalar laws use the exact Godunov flux where the law provides one and the
Rusanov flux otherwise; the Euler system uses HLL.  Time stepping is
forward Euler with a CFL-limited step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cases import CaseDefinition, Dirichlet, Outflow, Periodic
from ..laws import Euler, ScalarLaw

DEFAULT_CFL = 0.4
_RUSANOV_SAMPLES = 9


@dataclass
class FVSolution:
    centers: list[np.ndarray]
    values: np.ndarray
    t: float
    n_steps: int

    @property
    def cell_sizes(self) -> list[float]:
        return [float(c[1] - c[0]) for c in self.centers]

    def sample(self, coords) -> np.ndarray:
        """Piecewise-constant lookup at arbitrary points (``coords[i]`` per axis)."""
        idx = []
        for axis, x in enumerate(coords):
            c = self.centers[axis]
            h = c[1] - c[0]
            i = np.floor((np.asarray(x, dtype=float) - (c[0] - 0.5 * h)) / h).astype(int)
            idx.append(np.clip(i, 0, c.size - 1))
        return self.values[tuple(idx)]


def _scalar_numflux(law: ScalarLaw, left, right, axis):
    god = law.godunov_flux(left, right, axis)
    if god is not None:
        return god
    fl = law.flux(left)[axis]
    fr = law.flux(right)[axis]
    s = np.linspace(0.0, 1.0, _RUSANOV_SAMPLES)
    mid = left[None] + s.reshape((-1,) + (1,) * left.ndim) * (right - left)[None]
    alpha = np.max(np.abs(law.flux_derivative(mid)[axis]), axis=0)
    return 0.5 * (fl + fr) - 0.5 * alpha * (right - left)


def _hll(law: Euler, left, right, axis):
    fl = law.flux(left)[..., axis]
    fr = law.flux(right)[..., axis]
    ul = left[..., 1 + axis] / left[..., 0]
    ur = right[..., 1 + axis] / right[..., 0]
    cl = np.sqrt(law.gamma * law.temperature(left))
    cr = np.sqrt(law.gamma * law.temperature(right))
    sl = np.minimum(ul - cl, ur - cr)[..., None]
    sr = np.maximum(ul + cl, ur + cr)[..., None]
    mid = (sr * fl - sl * fr + sl * sr * (right - left)) / (sr - sl)
    return np.where(sl >= 0, fl, np.where(sr <= 0, fr, mid))


def _max_speed(law, u, axis):
    if isinstance(law, Euler):
        vel = np.abs(u[..., 1 + axis] / u[..., 0])
        return float(np.max(vel + np.sqrt(law.gamma * law.temperature(u))))
    # f' may vanish at the data values themselves, so sample the whole range
    lo, hi = float(np.min(u)), float(np.max(u))
    span = np.linspace(lo, hi, 65)
    return float(np.max(np.abs(law.flux_derivative(np.append(span, [lo, hi]))[axis])))


def _cut(axis, start, stop):
    return (slice(None),) * axis + (slice(start, stop),)


def _pad(u, axis, bcs, ghost_values, t):
    left_bc, right_bc = bcs
    first = u[_cut(axis, 0, 1)]
    last = u[_cut(axis, -1, None)]
    if isinstance(left_bc, Periodic):
        return np.concatenate([last, u, first], axis=axis)
    lo = _ghost(left_bc, first, ghost_values[0], t)
    hi = _ghost(right_bc, last, ghost_values[1], t)
    return np.concatenate([lo, u, hi], axis=axis)


def _ghost(bc, edge, data, t):
    if isinstance(bc, Outflow) or not isinstance(bc, Dirichlet):
        return edge
    if bc.value is None:
        return data
    coords, shape = data
    vals = np.asarray(bc.value(coords, t), dtype=float)
    return vals.reshape(shape)


def reference_fv_solution(case: CaseDefinition, n_cells, t_final: float | None = None,
                          cfl: float = DEFAULT_CFL, initial=None) -> FVSolution:
    """Integrate a case with a first-order finite-volume scheme.

    ``n_cells`` is an integer or one count per direction; initial cell values
    are point samples of the initial data at the cell centres.
    """
    law = case.law
    d = case.dim
    t_final = case.t_final if t_final is None else t_final
    counts = [n_cells] * d if np.isscalar(n_cells) else list(n_cells)
    centers, sizes = [], []
    for (a, b), n in zip(case.domain, counts):
        h = (b - a) / n
        centers.append(a + h * (np.arange(n) + 0.5))
        sizes.append(h)
    mesh = np.meshgrid(*centers, indexing="ij")
    init = case.initial if initial is None else initial
    u = np.asarray(init(*mesh), dtype=float).copy()
    euler = isinstance(law, Euler)

    # boundary data held fixed (initial data) or evaluated per step
    ghosts = []
    for axis in range(d):
        pair = []
        for side in (0, 1):
            bc = case.bcs[axis][side]
            edge = np.take(u, [0 if side == 0 else -1], axis=axis)
            if isinstance(bc, Dirichlet) and bc.value is not None:
                a, b = case.domain[axis]
                coords = [np.take(m, [0], axis=axis) for m in mesh]
                coords[axis] = np.full_like(coords[axis], a if side == 0 else b)
                pair.append((coords, edge.shape))
            else:
                pair.append(edge.copy())
        ghosts.append(pair)

    def numflux(left, right, axis):
        if euler:
            return _hll(law, left, right, axis)
        return _scalar_numflux(law, left, right, axis)

    t, steps = 0.0, 0
    while t < t_final * (1 - 1e-14):
        rate = sum(_max_speed(law, u, a) / sizes[a] for a in range(d))
        dt = cfl / rate if rate > 0 else t_final - t
        dt = min(dt, t_final - t)
        du = np.zeros_like(u)
        for axis in range(d):
            padded = _pad(u, axis, case.bcs[axis], ghosts[axis], t)
            f = numflux(padded[_cut(axis, None, -1)], padded[_cut(axis, 1, None)], axis)
            du -= (f[_cut(axis, 1, None)] - f[_cut(axis, None, -1)]) / sizes[axis]
        u = u + dt * du
        t += dt
        steps += 1
    return FVSolution(centers, u, t, steps)


def cell_average_distance(solution: FVSolution, values_at_centers: np.ndarray) -> float:
    """Discrete L1 distance between a field sampled at the cell centres and the FV data."""
    diff = np.abs(np.asarray(values_at_centers, dtype=float) - solution.values)
    return float(np.sum(diff) * np.prod(solution.cell_sizes))


def coarsen(solution: FVSolution, factor: int) -> FVSolution:
    """Average blocks of ``factor`` cells per direction."""
    vals = solution.values
    d = len(solution.centers)
    shape = []
    for axis in range(d):
        n = vals.shape[axis]
        if n % factor:
            raise ValueError("cell count must be divisible by the coarsening factor")
        shape += [n // factor, factor]
    extra = vals.shape[d:]
    blocks = vals.reshape(tuple(shape) + extra)
    coarse = blocks.mean(axis=tuple(2 * a + 1 for a in range(d)))
    centers = [c.reshape(-1, factor).mean(axis=1) for c in solution.centers]
    return FVSolution(centers, coarse, solution.t, solution.n_steps)
