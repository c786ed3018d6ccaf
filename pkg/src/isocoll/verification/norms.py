"""Quadrature-based error norms of spline solutions."""

from __future__ import annotations

import numpy as np

from ..splines import TensorSpace, evaluate


def element_quadrature(space: TensorSpace, n_points: int | None = None):
    """Per-direction Gauss-Legendre nodes and weights on every element.

    Defaults to ``k + 2`` points per element and direction.
    """
    nodes, weights = [], []
    for s in space.spaces:
        q = s.degree + 2 if n_points is None else n_points
        xg, wg = np.polynomial.legendre.leggauss(q)
        bp = s.breakpoints
        lo, hi = bp[:-1, None], bp[1:, None]
        half = 0.5 * (hi - lo)
        nodes.append((lo + half * (xg[None, :] + 1.0)).ravel())
        weights.append((half * wg[None, :]).ravel())
    return nodes, weights


def error_norm(space: TensorSpace, coeffs: np.ndarray, exact, t: float, norm="L2",
               n_points: int | None = None) -> np.ndarray:
    """``L1`` or ``L2`` norm of ``spline - exact`` per solution component.

    ``coeffs`` has the spatial axes first and a trailing component axis;
    ``exact(coords, t)`` receives ``ij``-indexed coordinate meshes.
    """
    p = {"L1": 1, "L2": 2}.get(str(norm).upper())
    if p is None:
        raise ValueError(f"unsupported norm {norm!r}")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim == space.dim:
        coeffs = coeffs[..., None]
    nodes, weights = element_quadrature(space, n_points)
    approx = evaluate(space, coeffs, nodes)
    mesh = np.meshgrid(*nodes, indexing="ij")
    ref = np.asarray(exact(mesh, t), dtype=float) if callable(exact) else np.asarray(exact)
    if ref.ndim == space.dim:
        ref = ref[..., None]
    err = np.abs(approx - ref) ** p
    for axis in reversed(range(space.dim)):
        err = np.tensordot(weights[axis], err, axes=([0], [axis]))
    return err ** (1.0 / p)
