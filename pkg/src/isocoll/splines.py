"""B-spline spaces on uniform knot vectors.

One-dimensional spaces come in two topologies:

* ``open``: clamped knot vector, end knots repeated ``k+1`` times, so the
  spline interpolates its first and last coefficient.
* ``periodic``: a uniform knot grid extended past both ends; basis functions
  are identified modulo the number of elements.

Tensor-product spaces are plain tuples of 1D spaces wrapped in
:class:`TensorSpace`.  Coefficient arrays are stored with one numpy axis per
parametric direction (axis 0 is ``x``); any trailing axes are treated as a
batch of independent fields.  The flat vector layout used at the public
boundary is x-fastest, i.e. ``array.ravel(order="F")``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

OPEN = "open"
PERIODIC = "periodic"
TOPOLOGIES = (OPEN, PERIODIC)

# relative slack when deciding whether a point lies inside an open domain
_DOMAIN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SplineSpace1D:
    """Maximal-continuity B-spline space with uniform interior knots.

    Attributes
    ----------
    degree : int
        Polynomial degree ``k``.
    knots : ndarray
        Open topology: the clamped knot vector.  Periodic topology: the
        unrolled uniform knots ``a + h*(j - k - 1)``, ``j = 0..n+2k+2``.
    topology : str
        ``"open"`` or ``"periodic"``.
    domain : tuple of float
        Interval ``(a, b)``.
    n_elements : int
        Number of knot spans inside ``[a, b]``.
    """

    degree: int
    knots: np.ndarray
    topology: str
    domain: tuple[float, float]
    n_elements: int

    @property
    def periodic(self) -> bool:
        return self.topology == PERIODIC

    @property
    def n(self) -> int:
        """Number of basis functions."""
        if self.periodic:
            return self.n_elements
        return len(self.knots) - self.degree - 1

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    @property
    def element_size(self) -> float:
        return self.length / self.n_elements

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Element boundaries in ``[a, b]``."""
        a, b = self.domain
        return np.linspace(a, b, self.n_elements + 1)

    @cached_property
    def greville(self) -> np.ndarray:
        return greville_points(self)

    @cached_property
    def centroids(self) -> np.ndarray:
        return greville_centroids(self)

    def with_degree(self, degree: int) -> "SplineSpace1D":
        """Space on the same elements and topology with another degree."""
        return make_space(self.domain, self.n_elements, degree, self.topology)

    def __repr__(self) -> str:
        return (f"SplineSpace1D(k={self.degree}, n_elements={self.n_elements}, "
                f"{self.topology}, domain={self.domain})")


def make_space(domain: Sequence[float], n_elements: int, degree: int,
               topology: str = OPEN) -> SplineSpace1D:
    """Build a uniform maximal-continuity spline space.

    >>> make_space((0.0, 1.0), 3, 2).knots.tolist()  # doctest: +ELLIPSIS
    [0.0, 0.0, 0.0, 0.333..., 0.666..., 1.0, 1.0, 1.0]
    """
    if int(n_elements) != n_elements or n_elements < 1:
        raise ValueError(f"element count must be a positive integer, got {n_elements}")
    if int(degree) != degree or degree < 1:
        raise ValueError(f"degree must be an integer >= 1, got {degree}")
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    a, b = float(domain[0]), float(domain[1])
    if not b > a:
        raise ValueError(f"empty domain [{a}, {b}]")
    n_elements, degree = int(n_elements), int(degree)
    if topology == OPEN:
        interior = np.linspace(a, b, n_elements + 1)
        knots = np.concatenate([np.full(degree, a), interior, np.full(degree, b)])
    else:
        h = (b - a) / n_elements
        pad = degree + 1
        knots = a + h * (np.arange(n_elements + 2 * pad + 1) - pad)
        knots[pad] = a
        knots[pad + n_elements] = b
    knots.setflags(write=False)
    return SplineSpace1D(degree, knots, topology, (a, b), n_elements)


def greville_points(space: SplineSpace1D) -> np.ndarray:
    """Knot averages ``(xi_{i+1} + ... + xi_{i+k}) / k``, one per basis function.

    Periodic spaces use the same average on the unrolled knots; with the
    index shift chosen in :func:`_periodic_shift` the points land in
    ``[a, b)`` in increasing order.
    """
    k = space.degree
    t = space.knots
    csum = np.concatenate([[0.0], np.cumsum(t)])
    if not space.periodic:
        n = space.n
        i = np.arange(n)
        g = (csum[i + k + 1] - csum[i + 1]) / k
        g[0], g[-1] = space.domain
        return g
    n = space.n
    j = np.arange(n) + (k + 1) - _periodic_shift(k)
    g = (csum[j + k + 1] - csum[j + 1]) / k
    return g


def greville_centroids(space: SplineSpace1D) -> np.ndarray:
    """Midpoints of consecutive Greville points (the wrap cell included when periodic)."""
    g = greville_points(space)
    if len(g) < 2:
        raise ValueError("need at least two Greville points to form cells")
    mids = 0.5 * (g[:-1] + g[1:])
    if not space.periodic:
        return mids
    a, _ = space.domain
    last = 0.5 * (g[-1] + g[0] + space.length)
    last = a + np.mod(last - a, space.length)
    return np.concatenate([mids, [last]])


def _periodic_shift(k: int) -> int:
    # unrolled basis j <-> periodic basis (j - (k+1) + shift) mod n, which puts
    # basis i's Greville point at a + h*i (odd k) or a + h*(i + 1/2) (even k)
    return (k + 1) // 2


def find_spans(space: SplineSpace1D, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Knot-span index for each point and the (wrapped) point itself.

    Spans are half-open ``[xi_j, xi_{j+1})`` with the last one closed.
    """
    x = np.asarray(x, dtype=float)
    a, b = space.domain
    k = space.degree
    t = space.knots
    if space.periodic:
        xw = a + np.mod(x - a, b - a)
        xw = np.where(xw >= b, a, xw)
        pad = k + 1
        span = np.searchsorted(t, xw, side="right") - 1
        span = np.clip(span, pad, pad + space.n_elements - 1)
        return span, xw
    tol = _DOMAIN_TOL * (b - a)
    if np.any(x < a - tol) or np.any(x > b + tol):
        bad = x[(x < a - tol) | (x > b + tol)]
        raise ValueError(f"point(s) {bad[:5]} outside the domain [{a}, {b}]")
    xc = np.clip(x, a, b)
    span = np.searchsorted(t, xc, side="right") - 1
    span = np.clip(span, k, space.n - 1)
    return span, xc


def basis_ders(space: SplineSpace1D, x, n_derivs: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero basis functions and derivatives at many points.

    Cox-de Boor recursion for the values and the knot-difference recursion
    for derivatives, vectorised over the points.

    Returns
    -------
    idx : ndarray of int, shape (npts, k+1)
        Global basis indices of the active functions (wrapped for periodic).
    ders : ndarray, shape (npts, n_derivs+1, k+1)
        ``ders[p, r, j]`` is the ``r``-th derivative of basis ``idx[p, j]``.
    """
    k = space.degree
    if n_derivs > k:
        raise ValueError(f"derivative order {n_derivs} exceeds degree {k}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    span, x = find_spans(space, x)
    t = space.knots
    npts = x.size

    left = np.zeros((k + 1, npts))
    right = np.zeros((k + 1, npts))
    ndu = np.zeros((k + 1, k + 1, npts))
    ndu[0, 0] = 1.0
    for j in range(1, k + 1):
        left[j] = x - t[span + 1 - j]
        right[j] = t[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n_derivs + 1, k + 1, npts))
    ders[0] = ndu[:, k]
    if n_derivs:
        a = np.zeros((2, k + 1, npts))
        for r in range(k + 1):
            s1, s2 = 0, 1
            a[:] = 0.0
            a[0, 0] = 1.0
            for m in range(1, n_derivs + 1):
                d = np.zeros(npts)
                rk, pk = r - m, k - m
                if r >= m:
                    a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                    d += a[s2, 0] * ndu[rk, pk]
                j1 = 1 if rk >= -1 else -rk
                j2 = m - 1 if r - 1 <= pk else k - r
                for j in range(j1, j2 + 1):
                    a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                    d += a[s2, j] * ndu[rk + j, pk]
                if r <= pk:
                    a[s2, m] = -a[s1, m - 1] / ndu[pk + 1, r]
                    d += a[s2, m] * ndu[r, pk]
                ders[m, r] = d
                s1, s2 = s2, s1
        fac = k
        for m in range(1, n_derivs + 1):
            ders[m] *= fac
            fac *= k - m

    first = span - k
    if space.periodic:
        first = first - (k + 1) + _periodic_shift(k)
    idx = first[:, None] + np.arange(k + 1)[None, :]
    if space.periodic:
        idx = np.mod(idx, space.n)
    return idx, np.moveaxis(ders, 2, 0)


def eval_basis(space: SplineSpace1D, x: float, n_derivs: int = 0) -> tuple[int, np.ndarray]:
    """Active basis functions at a single point.

    Returns the global index of the first active function (modulo ``n`` for
    periodic spaces) and a ``(n_derivs+1, k+1)`` table whose row ``r`` holds
    the ``r``-th derivatives.

    >>> from isocoll.splines import make_space
    >>> sp2 = make_space((0, 1), 2, 2)
    >>> eval_basis(sp2, 0.25)[1][0].tolist()
    [0.25, 0.625, 0.125]
    """
    idx, ders = basis_ders(space, np.array([x], dtype=float), n_derivs)
    return int(idx[0, 0]), ders[0]


def basis_matrix(space: SplineSpace1D, points, deriv: int = 0) -> sp.csr_matrix:
    """Sparse matrix ``A[p, j] = d^deriv N_j / dx^deriv (points[p])``."""
    points = np.atleast_1d(np.asarray(points, dtype=float))
    idx, ders = basis_ders(space, points, deriv)
    npts, w = idx.shape
    rows = np.repeat(np.arange(npts), w)
    mat = sp.coo_matrix((ders[:, deriv, :].ravel(), (rows, idx.ravel())),
                        shape=(npts, space.n))
    return mat.tocsr()


def apply_along_axis(op, array: np.ndarray, axis: int) -> np.ndarray:
    """Apply a linear operator (matrix or callable on 2D arrays) along one axis.

    The operator acts on the leading axis of a ``(n, m)`` reshaping of the
    array, so every other axis, including trailing batch axes, is carried
    along as independent right-hand sides.
    """
    moved = np.moveaxis(array, axis, 0)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1)
    out = op(flat) if callable(op) else op @ flat
    out = np.asarray(out).reshape((out.shape[0],) + shape[1:])
    return np.moveaxis(out, 0, axis)


def apply_kron(ops: Sequence, array: np.ndarray) -> np.ndarray:
    """Apply one operator per spatial axis (``None`` means identity)."""
    out = array
    for axis, op in enumerate(ops):
        if op is not None:
            out = apply_along_axis(op, out, axis)
    return out


class TensorSpace:
    """Tensor product of 1D spline spaces, ``d`` in {1, 2, 3}."""

    def __init__(self, spaces: Sequence[SplineSpace1D]):
        spaces = tuple(spaces)
        if not 1 <= len(spaces) <= 3:
            raise ValueError("tensor spaces support 1 to 3 directions")
        self.spaces = spaces

    @classmethod
    def uniform(cls, domain: Sequence[Sequence[float]], n_elements, degree: int,
                topology) -> "TensorSpace":
        """Same element count/degree in every direction unless sequences are given."""
        d = len(domain)
        n_el = _per_dir(n_elements, d)
        topo = _per_dir(topology, d)
        return cls([make_space(domain[i], n_el[i], degree, topo[i]) for i in range(d)])

    @property
    def dim(self) -> int:
        return len(self.spaces)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.n for s in self.spaces)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(s.degree for s in self.spaces)

    @property
    def periodic(self) -> tuple[bool, ...]:
        return tuple(s.periodic for s in self.spaces)

    @property
    def greville(self) -> list[np.ndarray]:
        return [s.greville for s in self.spaces]

    @property
    def centroids(self) -> list[np.ndarray]:
        return [s.centroids for s in self.spaces]

    def grid(self) -> list[np.ndarray]:
        """Collocation points as ``ij``-indexed mesh arrays."""
        return np.meshgrid(*self.greville, indexing="ij")

    def with_degree(self, degree: int) -> "TensorSpace":
        return TensorSpace([s.with_degree(degree) for s in self.spaces])

    @cached_property
    def mesh_size(self) -> np.ndarray:
        """Local mesh size ``h`` at each collocation point.

        Per direction the larger of the two neighbouring Greville spacings
        (one-sided at open ends, wrapped when periodic), then the maximum
        over directions.
        """
        per_dir = []
        for s in self.spaces:
            g = s.greville
            if s.periodic:
                gap = np.diff(np.concatenate([g, [g[0] + s.length]]))
                hd = np.maximum(gap, np.roll(gap, 1))
            else:
                gap = np.diff(g)
                hd = np.empty_like(g)
                hd[0], hd[-1] = gap[0], gap[-1]
                hd[1:-1] = np.maximum(gap[:-1], gap[1:])
            per_dir.append(hd)
        mesh = np.meshgrid(*per_dir, indexing="ij")
        return np.maximum.reduce(mesh) if len(mesh) > 1 else mesh[0]

    def __repr__(self) -> str:
        return f"TensorSpace({list(self.spaces)})"


def _per_dir(value, d):
    if isinstance(value, (list, tuple)):
        if len(value) != d:
            raise ValueError(f"expected {d} per-direction values, got {value!r}")
        return list(value)
    return [value] * d


@dataclass
class FieldCoeffs:
    """Control coefficients of one scalar field in a :class:`TensorSpace`."""

    space: TensorSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim == 1 and self.space.dim > 1:
            if c.size != self.space.size:
                raise ValueError(f"expected {self.space.size} coefficients, got {c.size}")
            c = c.reshape(self.space.shape, order="F")
        if c.shape != self.space.shape:
            raise ValueError(f"coefficient shape {c.shape} != space shape {self.space.shape}")
        self.coefficients = c

    @property
    def flat(self) -> np.ndarray:
        """x-fastest flat vector."""
        return self.coefficients.ravel(order="F")


def eval_field(field: FieldCoeffs, point, deriv_orders=None) -> float:
    """Value of a partial derivative of a tensor-product spline at one point."""
    space = field.space
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.size != space.dim:
        raise ValueError(f"point has {point.size} coordinates, space has {space.dim}")
    orders = [0] * space.dim if deriv_orders is None else list(deriv_orders)
    local = field.coefficients
    # contract the last direction first so that axis indices stay valid
    for axis in reversed(range(space.dim)):
        idx, ders = basis_ders(space.spaces[axis], point[axis:axis + 1], orders[axis])
        local = np.tensordot(np.take(local, idx[0], axis=axis), ders[0, orders[axis]],
                             axes=([axis], [0]))
    return float(local)


def evaluate(space: TensorSpace, coeffs: np.ndarray, points: Sequence, orders=None) -> np.ndarray:
    """Evaluate a (batched) spline on the tensor grid spanned by ``points``.

    ``points[i]`` is a 1D array of coordinates in direction ``i``; the result
    has shape ``(len(points[0]), ..., len(points[d-1]), *batch)``.
    """
    orders = [0] * space.dim if orders is None else list(orders)
    ops = [basis_matrix(s, p, o) for s, p, o in zip(space.spaces, points, orders)]
    return apply_kron(ops, coeffs)


class GridEvaluator:
    """Evaluate (batched) splines of one space on a fixed tensor grid of points.

    The 1D basis matrices are built lazily per ``(axis, order)`` and cached,
    so repeated evaluation inside a time loop costs only sparse products.
    """

    def __init__(self, space: TensorSpace, points: Sequence):
        if len(points) != space.dim:
            raise ValueError("one point array per direction is required")
        self.space = space
        self.points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
        self._mats: dict[tuple[int, int], sp.csr_matrix] = {}

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(p.size for p in self.points)

    def matrix(self, axis: int, order: int = 0) -> sp.csr_matrix:
        key = (axis, order)
        if key not in self._mats:
            self._mats[key] = basis_matrix(self.space.spaces[axis], self.points[axis], order)
        return self._mats[key]

    def __call__(self, coeffs: np.ndarray, orders=None) -> np.ndarray:
        orders = [0] * self.space.dim if orders is None else list(orders)
        return apply_kron([self.matrix(a, o) for a, o in enumerate(orders)], coeffs)

    def partial(self, coeffs: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
        """Derivative of the given order along one axis."""
        orders = [0] * self.space.dim
        orders[axis] = order
        return self(coeffs, orders)
