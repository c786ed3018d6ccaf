"""CSV output: sampled solution fields and collocation-point viscosities."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .laws import Euler
from .splines import GridEvaluator

DEFAULT_RESOLUTION = {1: 1000, 2: 256}


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def sample_grid(domain, resolution) -> list[np.ndarray]:
    """Uniform points per direction, both ends included."""
    d = len(domain)
    res = [resolution] * d if np.isscalar(resolution) else list(resolution)
    if len(res) == 1 and d > 1:
        res = res * d
    if min(res) < 2:
        raise ValueError("resolution must be at least 2 per direction")
    return [np.linspace(a, b, int(n)) for (a, b), n in zip(domain, res)]


def _viscosity_columns(viscosity) -> list[tuple[str, np.ndarray]]:
    cols = [("nu_art", viscosity.nu_art)]
    if viscosity.kappa_art is not None:
        cols += [("mu_art", viscosity.mu_art), ("kappa_art", viscosity.kappa_art)]
    return cols


def _derived_columns(law, vals) -> list[tuple[str, np.ndarray]]:
    if not isinstance(law, Euler):
        return []
    vel = law.velocity(vals)
    if law.dim == 1:
        cols = [("u", vel[..., 0])]
    else:
        cols = [(f"u_{c}", vel[..., a]) for a, c in enumerate("xyz"[:law.dim])]
    return cols + [("p", law.pressure(vals))]


def interpolate_from_points(points, field, targets, periodic, domain) -> np.ndarray:
    """Piecewise-linear interpolation of collocation-point data onto a grid.

    Periodic directions are padded by one wrapped point at each end so the
    whole domain is covered.
    """
    pts, data = [], np.asarray(field, dtype=float)
    for axis, (p, per, (a, b)) in enumerate(zip(points, periodic, domain)):
        p = np.asarray(p, dtype=float)
        if per:
            length = b - a
            p = np.concatenate([[p[-1] - length], p, [p[0] + length]])
            data = np.concatenate([np.take(data, [-1], axis=axis), data,
                                   np.take(data, [0], axis=axis)], axis=axis)
        pts.append(p)
    interp = RegularGridInterpolator(pts, data, bounds_error=False, fill_value=None)
    mesh = np.meshgrid(*targets, indexing="ij")
    query = np.stack([m.ravel() for m in mesh], axis=-1)
    return interp(query).reshape(mesh[0].shape)


def write_rows(path, header, columns) -> None:
    flat = [np.ravel(c) for c in columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*flat):
            writer.writerow([_fmt(v) for v in row])


def dump_fields(system, state, viscosity, resolution, path) -> Path:
    """Sample every component (plus velocity and pressure for Euler) and the
    artificial viscosity on a uniform grid that includes the boundary."""
    space, case = system.space, system.case
    targets = sample_grid(case.domain, resolution)
    vals = GridEvaluator(space, targets)(state.coeffs)
    mesh = np.meshgrid(*targets, indexing="ij")
    coords = ["x", "y", "z"][:system.dim]
    header = list(coords) + list(system.names)
    columns = list(mesh) + [vals[..., i] for i in range(vals.shape[-1])]
    for name, col in _derived_columns(system.law, vals):
        header.append(name)
        columns.append(col)
    for name, field in _viscosity_columns(viscosity):
        header.append(name)
        columns.append(interpolate_from_points(space.greville, field, targets,
                                               system.periodic, case.domain))
    path = Path(path)
    write_rows(path, header, columns)
    return path


def dump_viscosity(system, viscosity, path) -> Path:
    """Viscosity at the collocation points, one row per point."""
    mesh = np.meshgrid(*system.space.greville, indexing="ij")
    header = ["x", "y", "z"][:system.dim]
    columns = list(mesh)
    for name, field in _viscosity_columns(viscosity) + [("nu_lin", viscosity.nu_lin),
                                                          ("nu_fo", viscosity.nu_fo)]:
        header.append(name)
        columns.append(field)
    path = Path(path)
    write_rows(path, header, columns)
    return path
