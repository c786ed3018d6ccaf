import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from isocoll.linalg import (BandedFactor, SingularInterpolationError, TensorMassSolver,
                            collocation_matrix, factorize, factorize_space, fit_field,
                            tensor_mass_solve)
from isocoll.splines import TensorSpace, evaluate, make_space


def _dense_kron(space: TensorSpace) -> np.ndarray:
    # x-fastest flat ordering: kron(M_z, M_y, M_x)
    mats = [collocation_matrix(s).toarray() for s in space.spaces]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(m, out)
    return out


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 14), k=st.integers(1, 6), periodic=st.booleans(), seed=st.integers(0, 99))
def test_1d_solve_matches_dense(n, k, periodic, seed):
    if periodic:
        n = max(n, k + 1)
    s = make_space((0, 1), n, k, "periodic" if periodic else "open")
    a = collocation_matrix(s).toarray()
    b = np.random.default_rng(seed).standard_normal((s.n, 3))
    x = factorize_space(s).solve(b)
    assert np.allclose(x, np.linalg.solve(a, b), rtol=1e-10, atol=1e-10)
    assert np.allclose(a @ x, b, atol=1e-10)


@pytest.mark.parametrize("dims,topos", [
    ([5, 7], ["open", "open"]),
    ([6, 5], ["periodic", "open"]),
    ([4, 6], ["periodic", "periodic"]),
    ([4, 5, 4], ["open", "periodic", "open"]),
])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_tensor_solve_against_dense_kronecker(dims, topos, k):
    dims = [max(d, k + 1) if t == "periodic" else d for d, t in zip(dims, topos)]
    space = TensorSpace.uniform([(0, 1)] * len(dims), dims, k, topos)
    big = _dense_kron(space)
    rhs = np.random.default_rng(7).standard_normal(space.size)
    ref = np.linalg.solve(big, rhs)
    got = tensor_mass_solve(TensorMassSolver.for_space(space), rhs)
    assert np.max(np.abs(got - ref)) <= 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_fit_field_interpolates():
    space = TensorSpace.uniform([(0, 1), (0, 2)], [6, 5], 3, ["open", "periodic"])
    gx, gy = np.meshgrid(*space.greville, indexing="ij")
    samples = np.sin(3 * gx) * np.cos(np.pi * gy)
    f = fit_field(space, samples)
    assert np.allclose(evaluate(space, f.coefficients, space.greville), samples, atol=1e-12)


def test_batched_solve():
    space = TensorSpace.uniform([(0, 1), (0, 1)], [5, 6], 3, "open")
    solver = TensorMassSolver.for_space(space)
    vals = np.random.default_rng(1).standard_normal(space.shape + (4,))
    out = solver.solve(vals)
    for i in range(4):
        assert np.allclose(out[..., i], solver.solve(vals[..., i]))


def test_shape_mismatch():
    space = TensorSpace.uniform([(0, 1), (0, 1)], 4, 2, "open")
    with pytest.raises(ValueError):
        TensorMassSolver.for_space(space).solve(np.zeros((3, 3)))


def test_pivoting_fallback():
    # zero leading pivot forces the partial-pivoting path
    a = np.array([[0.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 2.0]])
    f = BandedFactor(sp.csr_matrix(a))
    assert f.pivoted
    b = np.array([1.0, 2.0, 3.0])
    assert np.allclose(f.solve(b), np.linalg.solve(a, b))


def test_singular_matrix_raises():
    a = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularInterpolationError):
        factorize(sp.csr_matrix(a)).solve(np.ones(2))
    with pytest.raises(SingularInterpolationError):
        BandedFactor(sp.csr_matrix((3, 3)))


def test_cyclic_corner_correction():
    n = 12
    a = np.diag(np.full(n, 4.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    a[0, -1] = a[-1, 0] = 1.0
    f = factorize(sp.csr_matrix(a), bandwidth=1)
    assert f.rank > 0
    b = np.arange(n, dtype=float)
    assert np.allclose(f.solve(b), np.linalg.solve(a, b))
