import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncshilov.errors import InvalidInput
from ncshilov.opspace import (
    LevelElement,
    OperatorSpace,
    assemble,
    column_amplification,
    direct_sum,
    level_norm,
    paulsen_system,
    random_space,
    row_space,
    upper_triangular,
)

SCALARS = OperatorSpace(np.ones((1, 1, 1)), label="C")


def test_level_norm_examples():
    assert level_norm(SCALARS, LevelElement([[[5.0]]])) == pytest.approx(5)
    ident = np.eye(2)[:, :, None]
    assert level_norm(SCALARS, LevelElement(ident)) == pytest.approx(1)
    # the row [b_1, b_2] of the two basis rows of R_2 is a 1 x 4 matrix of norm sqrt 2
    x = LevelElement.from_rect(np.array([[[1.0, 0.0], [0.0, 1.0]]]))
    assert level_norm(row_space(2), x) == pytest.approx(np.sqrt(2))


def test_level_norm_dimension_mismatch():
    with pytest.raises(InvalidInput):
        level_norm(SCALARS, LevelElement(np.ones((1, 1, 2))))


def test_dependent_basis_rejected():
    with pytest.raises(InvalidInput):
        OperatorSpace(np.stack([np.eye(2), 2 * np.eye(2)]))
    X = OperatorSpace.from_spanning([np.eye(2), 2 * np.eye(2), np.diag([1.0, 0])])
    assert X.dim == 2


def test_paulsen_system_dimensions():
    # two independent scalar corners: dim = 2 dim X + 2
    S = paulsen_system(SCALARS)
    assert S.dim == 4 and S.r == 2
    S2 = paulsen_system(OperatorSpace(2 * np.ones((1, 1, 1))))
    q1, q2 = S.orthonormal().reshape(4, -1), S2.orthonormal().reshape(4, -1)
    assert np.allclose(q1 @ q1.conj().T, np.eye(4))
    assert np.allclose(q1.conj().T @ q1, q2.conj().T @ q2)
    assert paulsen_system(upper_triangular(2)).dim == 8


def test_paulsen_self_adjoint_and_unital():
    S = paulsen_system(upper_triangular(2))
    q = S.orthonormal().reshape(S.dim, -1)
    proj = q.conj().T @ q
    for b in S.basis:
        v = b.conj().T.reshape(-1)
        assert np.allclose(proj.T @ v, v)
    v = np.eye(4).reshape(-1)
    assert np.allclose(proj.T @ v, v)


def test_direct_sum_and_columns():
    D = direct_sum(SCALARS, SCALARS)
    assert D.dim == 2 and D.r == D.c == 2
    T = direct_sum(upper_triangular(2), SCALARS)
    assert T.dim == 4 and T.r == T.c == 3
    assert column_amplification(SCALARS, 1) is SCALARS
    C3 = column_amplification(SCALARS, 3)
    assert C3.dim == 3 and (C3.r, C3.c) == (3, 1)
    C = column_amplification(upper_triangular(2), 2)
    assert C.dim == 6 and (C.r, C.c) == (4, 2)


def _level(rng, n, d):
    return LevelElement(rng.standard_normal((n, n, d)) + 1j * rng.standard_normal((n, n, d)))


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_direct_sum_max_formula(seed, m, n):
    rng = np.random.default_rng(seed)
    X, Y = random_space(rng, 2, 3, 2), random_space(rng, 3, 2, 3)
    x, y = _level(rng, n, X.dim), _level(rng, n, Y.dim)
    Z = direct_sum(X, Y)
    z = LevelElement(np.concatenate([x.coeffs, y.coeffs], axis=2))
    assert level_norm(Z, z) == pytest.approx(max(level_norm(X, x), level_norm(Y, y)), rel=1e-10)


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_ruan_axioms(seed, m, n):
    rng = np.random.default_rng(seed)
    X = random_space(rng, 2, 2, 3)
    x, y = _level(rng, m, X.dim), _level(rng, n, X.dim)
    xy = np.zeros((m + n, m + n, X.dim), dtype=complex)
    xy[:m, :m], xy[m:, m:] = x.coeffs, y.coeffs
    assert level_norm(X, LevelElement(xy)) == pytest.approx(max(level_norm(X, x), level_norm(X, y)), rel=1e-10)
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    b = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    axb = LevelElement(np.einsum("ij,jkd,kl->ild", a, x.coeffs, b))
    bound = np.linalg.norm(a, 2) * level_norm(X, x) * np.linalg.norm(b, 2)
    assert level_norm(X, axb) <= bound * (1 + 1e-10)


def test_assemble_layout():
    basis = np.stack([np.eye(2), np.array([[0, 1], [0, 0]])]).astype(complex)
    C = np.zeros((2, 2, 2), dtype=complex)
    C[0, 1, 1] = 1
    M = assemble(C, basis)
    assert M.shape == (4, 4) and M[0, 3] == 1 and np.count_nonzero(M) == 1
