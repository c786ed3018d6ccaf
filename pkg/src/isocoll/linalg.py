"""Collocation matrices, banded LU factors and the tensor-product mass solve.

The collocation ("mass") matrix of a 1D space has entries ``N_j(g_i)`` at the
Greville points ``g_i``.  It is banded for open spaces and cyclically banded
for periodic ones.  A d-dimensional mass matrix is the Kronecker product of
the 1D matrices, so its inverse is applied as a sequence of batched 1D
solves, one direction at a time.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg import lapack

from .splines import (FieldCoeffs, SplineSpace1D, TensorSpace, apply_along_axis,
                      basis_matrix)

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-12


class SingularInterpolationError(np.linalg.LinAlgError):
    """Collocation matrix is numerically singular."""


def collocation_matrix(space: SplineSpace1D) -> sp.csr_matrix:
    """``A[i, j] = N_j(g_i)`` at the Greville points of ``space``."""
    return basis_matrix(space, space.greville, 0)


def _bandwidths(rows, cols):
    if rows.size == 0:
        return 0, 0
    return int(max(0, np.max(rows - cols))), int(max(0, np.max(cols - rows)))


class BandedFactor:
    """LU factorisation of a banded (optionally cyclic) square matrix.

    The unpivoted path keeps ``L`` and ``U`` inside the original band; when
    a pivot falls below ``PIVOT_RTOL * max|A|`` the LAPACK partial-pivoting
    banded LU is used instead, whose ``U`` carries up to ``lower + upper``
    superdiagonals.  Entries outside the band (corner blocks of a cyclic
    matrix) are handled with a Woodbury correction of rank at most
    ``2 * bandwidth``.

    Attributes
    ----------
    n : int
    lower, upper : int
        Sub- and superdiagonal counts of the banded core.
    pivoted : bool
    """

    def __init__(self, matrix, bandwidth: int | None = None, name: str = "matrix"):
        a = sp.coo_matrix(matrix)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"{name}: collocation matrix must be square, got {a.shape}")
        self.name = name
        self.n = n = a.shape[0]
        a.sum_duplicates()
        rows, cols, vals = a.row, a.col, a.data
        keep = vals != 0.0
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
        self.scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        if self.scale == 0.0:
            raise SingularInterpolationError(f"{name}: zero matrix")

        if bandwidth is None or n <= 2 * bandwidth + 2:
            core = np.ones(rows.shape, dtype=bool)
        else:
            core = np.abs(rows - cols) <= bandwidth
        self.lower, self.upper = _bandwidths(rows[core], cols[core])
        self._factor_core(rows[core], cols[core], vals[core])

        self._corner = None
        if not np.all(core):
            self._setup_woodbury(rows[~core], cols[~core], vals[~core])

    # ---- core banded LU -------------------------------------------------
    def _factor_core(self, rows, cols, vals):
        n, p, q = self.n, self.lower, self.upper
        work = np.zeros((n, p + q + 1))
        work[rows, cols - rows + p] = vals
        tol = PIVOT_RTOL * self.scale
        ok = True
        for i in range(n):
            piv = work[i, p]
            if abs(piv) <= tol:
                ok = False
                break
            for r in range(1, min(p, n - 1 - i) + 1):
                lr = work[i + r, p - r] / piv
                if lr != 0.0:
                    work[i + r, p - r] = lr
                    work[i + r, p - r + 1:p - r + 1 + q] -= lr * work[i, p + 1:p + 1 + q]
        self.pivoted = not ok
        if ok:
            self._store_lu(work)
            return
        log.info("%s: small pivot, falling back to partial pivoting", self.name)
        ab = np.zeros((2 * p + q + 1, n))
        ab[p + q + rows - cols, cols] = vals
        lu, ipiv, info = lapack.dgbtrf(ab, p, q)
        if info != 0:
            raise SingularInterpolationError(
                f"{self.name}: singular collocation matrix (zero pivot at row {info})")
        self._gb = (lu, ipiv)

    def _store_lu(self, work):
        n, p, q = self.n, self.lower, self.upper
        i = np.arange(n)[:, None]
        c = np.arange(p + q + 1)[None, :]
        j = i - p + c
        valid = (j >= 0) & (j < n)
        lab = np.zeros((p + 1, n))
        uab = np.zeros((q + 1, n))
        lmask = valid & (c < p)
        umask = valid & (c >= p)
        ii, jj = np.broadcast_to(i, j.shape), j
        lab[(ii - jj)[lmask], jj[lmask]] = work[lmask]
        lab[0, :] = 1.0
        uab[(q + ii - jj)[umask], jj[umask]] = work[umask]
        self._lab = np.asfortranarray(lab)
        self._uab = np.asfortranarray(uab)

    def _solve_core(self, b: np.ndarray) -> np.ndarray:
        if self.pivoted:
            lu, ipiv = self._gb
            x, info = lapack.dgbtrs(lu, self.lower, self.upper, b, ipiv)
        else:
            y, info = lapack.dtbtrs(self._lab, b, uplo="L", diag="U")
            x, info = lapack.dtbtrs(self._uab, y, uplo="U", overwrite_b=1)
        if info != 0:
            raise SingularInterpolationError(f"{self.name}: banded solve failed (info={info})")
        return x

    # ---- cyclic corners ---------------------------------------------------
    def _setup_woodbury(self, rows, cols, vals):
        sel = np.unique(rows)
        r = sel.size
        local = np.searchsorted(sel, rows)
        v = sp.csr_matrix((vals, (local, cols)), shape=(r, self.n))
        u = np.zeros((self.n, r))
        u[sel, np.arange(r)] = 1.0
        z = self._solve_core(np.asfortranarray(u))
        cap = np.eye(r) + v @ z
        self._corner = (v, z, sla.lu_factor(cap))
        self.rank = r

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A x = b`` for a vector or a ``(n, m)`` block of right-hand sides."""
        b = np.asarray(b, dtype=float)
        vec = b.ndim == 1
        b2 = np.asfortranarray(b[:, None] if vec else b)
        x = self._solve_core(b2.copy(order="F"))
        if self._corner is not None:
            v, z, cap = self._corner
            x = x - z @ sla.lu_solve(cap, v @ x)
        return x[:, 0] if vec else x

    __call__ = solve

    def band_storage_width(self) -> int:
        """Number of stored diagonals in the upper factor."""
        if self.pivoted:
            return self.lower + self.upper + 1
        return self.upper + 1


def factorize(matrix, bandwidth: int | None = None, name: str = "matrix") -> BandedFactor:
    """Factor a banded matrix; ``bandwidth`` marks a cyclic matrix's half band."""
    return BandedFactor(matrix, bandwidth=bandwidth, name=name)


def factorize_space(space: SplineSpace1D) -> BandedFactor:
    """Factor the collocation matrix of ``space``."""
    mat = collocation_matrix(space)
    bw = space.degree if space.periodic else None
    try:
        fac = BandedFactor(mat, bandwidth=bw, name=repr(space))
    except SingularInterpolationError as exc:
        raise SingularInterpolationError(f"singular interpolation for {space!r}: {exc}") from exc
    if log.isEnabledFor(logging.DEBUG):
        log.debug("cond(%r) ~ %.3e", space, np.linalg.cond(mat.toarray()))
    return fac


class TensorMassSolver:
    """Inverse of a Kronecker-product collocation matrix.

    ``M^{-1} = M_x^{-1} (x) M_y^{-1} (x) M_z^{-1}`` applied as batched 1D
    solves, the last direction first, on arrays whose leading ``d`` axes are
    the spatial ones.
    """

    def __init__(self, factors: Sequence[BandedFactor]):
        self.factors = tuple(factors)

    @classmethod
    def for_space(cls, space: TensorSpace) -> "TensorMassSolver":
        return cls([factorize_space(s) for s in space.spaces])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.n for f in self.factors)

    def solve(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        d = len(self.factors)
        if values.shape[:d] != self.shape:
            raise ValueError(f"grid shape {values.shape[:d]} does not match {self.shape}")
        out = values
        for axis in reversed(range(d)):
            out = apply_along_axis(self.factors[axis].solve, out, axis)
        return out


def tensor_mass_solve(solver: TensorMassSolver, values) -> np.ndarray:
    """Coefficients whose collocation values are ``values``.

    A flat input is read x-fastest and the result is returned flat in the
    same order; grid-shaped input gives grid-shaped output.
    """
    values = np.asarray(values, dtype=float)
    shape = solver.shape
    if values.ndim == 1 and len(shape) > 1:
        if values.size != int(np.prod(shape)):
            raise ValueError(f"expected {int(np.prod(shape))} values, got {values.size}")
        grid = values.reshape(shape, order="F")
        return solver.solve(grid).ravel(order="F")
    return solver.solve(values)


def fit_field(space: TensorSpace, samples, solver: TensorMassSolver | None = None) -> FieldCoeffs:
    """Interpolate samples given on the full Greville grid of ``space``."""
    solver = solver or TensorMassSolver.for_space(space)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1 and space.dim > 1:
        samples = samples.reshape(space.shape, order="F")
    if samples.shape != space.shape:
        raise ValueError(f"samples shape {samples.shape} does not match {space.shape}")
    return FieldCoeffs(space, solver.solve(samples))
