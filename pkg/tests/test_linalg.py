import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vaasec.linalg import (DegenerateInputError, InvalidInputError, dominant_rank_one,
                           eig_ratio, gsvd, kernel_basis, numerical_rank, project_out)


def cmat(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_kernel_basis_is_orthonormal_null_space(m, n, seed):
    a = cmat(np.random.default_rng(seed), m, n)
    z = kernel_basis(a)
    assert z.shape == (m, max(m - n, 0)) if n else z.shape == (m, m)
    assert np.allclose(z.conj().T @ z, np.eye(z.shape[1]), atol=1e-10)
    if n and z.shape[1]:
        assert np.abs(a.conj().T @ z).max() <= 1e-10


@given(st.integers(2, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_project_out_removes_the_column_space(m, n, seed):
    rng = np.random.default_rng(seed)
    a, x = cmat(rng, m, n), cmat(rng, m, 1)[:, 0]
    y = project_out(a, x)
    assert np.abs(a.conj().T @ y).max() <= 1e-9 * max(1.0, np.linalg.norm(x))
    assert np.allclose(project_out(a, y), y, atol=1e-10)


@given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_gsvd_reconstructs_and_pairs(p, m, n, seed):
    if m + n < p:
        return
    rng = np.random.default_rng(seed)
    fh, eh = cmat(rng, m, p), cmat(rng, n, p)
    g = gsvd(fh, eh)
    assert np.abs(g.U @ g.C @ g.X.conj().T - fh).max() <= 1e-9
    assert np.abs(g.V @ g.S @ g.X.conj().T - eh).max() <= 1e-9
    assert np.allclose(g.U.conj().T @ g.U, np.eye(m), atol=1e-10)
    assert np.allclose(g.V.conj().T @ g.V, np.eye(n), atol=1e-10)
    k = len(g.lambda2)
    assert np.allclose(g.lambda1[:k] ** 2 + g.lambda2 ** 2, 1.0, atol=1e-10)
    assert np.all(np.diff(g.lambda2) <= 1e-12)


def test_gsvd_rejects_bad_shapes():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidInputError):
        gsvd(cmat(rng, 2, 3), cmat(rng, 2, 2))
    with pytest.raises(DegenerateInputError):
        gsvd(cmat(rng, 1, 3), cmat(rng, 1, 3))


def test_dominant_rank_one_recovers_a_vector():
    rng = np.random.default_rng(1)
    v = cmat(rng, 4, 1)[:, 0]
    x, one = dominant_rank_one(np.outer(v, v.conj()))
    assert one
    assert np.allclose(np.outer(x, x.conj()), np.outer(v, v.conj()), atol=1e-9)
    a = cmat(rng, 4, 2)
    _, one = dominant_rank_one(a @ a.conj().T)
    assert not one
    assert eig_ratio(a @ a.conj().T) > 1e-6


def test_dominant_rank_one_rejects_indefinite():
    with pytest.raises(InvalidInputError):
        dominant_rank_one(np.diag([1.0, -1.0]))


def test_numerical_rank():
    rng = np.random.default_rng(2)
    a = cmat(rng, 5, 2) @ cmat(rng, 2, 5)
    assert numerical_rank(a) == 2
