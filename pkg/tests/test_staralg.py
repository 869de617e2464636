import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncshilov.errors import InvalidInput
from ncshilov.gallery import ex4_4
from ncshilov.opspace import corner
from ncshilov.staralg import BlockIdeal, generate, quotient_by, wedderburn


def _unit(n, i, j):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1
    return m


def _m2_plus_c(rng=None):
    # M_2 + C inside M_3, given by generic generators
    a = np.zeros((3, 3), dtype=complex)
    a[:2, :2] = [[1, 2], [0, 3]]
    b = np.zeros((3, 3), dtype=complex)
    b[:2, :2] = [[0, 0], [1, 0]]
    b[2, 2] = 5
    return generate(3, [a, b])


def test_generate_examples():
    A = generate(2, [_unit(2, 0, 0)])
    assert A.dim == 1 and np.allclose(A.unit, _unit(2, 0, 0)) and not A.has_unit_of_ambient
    A = generate(2, [_unit(2, 0, 1)])
    assert A.dim == 4 and A.has_unit_of_ambient
    X = ex4_4()
    assert generate(6, [corner(b) for b in X.basis]).dim == 36


def test_generate_guard():
    with pytest.raises(InvalidInput):
        generate(3, [np.eye(3)], max_ambient=2)


def test_generate_idempotent(rng):
    gens = rng.standard_normal((2, 4, 4))
    gens[:, 2:, :] = 0
    gens[:, :, 2:] = 0
    A = generate(4, gens)
    B = generate(4, A.spanning_basis)
    assert A.dim == B.dim == 4


def test_wedderburn_examples():
    D = generate(2, [np.diag([1.0, 2.0])])
    assert wedderburn(D).sizes == [1, 1]
    assert wedderburn(generate(2, [_unit(2, 0, 1)])).sizes == [2]
    assert wedderburn(_m2_plus_c()).sizes == [2, 1]


def test_multiplicity_is_recorded():
    # e12 + 1 inside M_4 acts as M_2 with multiplicity 2
    g = np.kron(np.eye(2), _unit(2, 0, 1))
    D = wedderburn(generate(4, [g]))
    assert D.sizes == [2] and D.blocks[0].multiplicity == 2


def _check_blocks(A, D):
    P = [b.central_projection for b in D.blocks]
    assert sum(b.block_dim ** 2 for b in D.blocks) == A.dim
    for i, p in enumerate(P):
        assert np.linalg.norm(p @ p - p) <= 1e-8
        for j in range(i):
            assert np.linalg.norm(p @ P[j]) <= 1e-8
    assert np.linalg.norm(sum(P) - A.unit) <= 1e-8


@given(st.integers(0, 10_000))
def test_wedderburn_invariants_on_random_block_algebras(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 3, size=rng.integers(1, 4))
    N = int(sizes.sum())
    gens = np.zeros((2, N, N), dtype=complex)
    o = 0
    for n in sizes:
        gens[:, o:o + n, o:o + n] = rng.standard_normal((2, n, n)) + 1j * rng.standard_normal((2, n, n))
        o += n
    u = np.linalg.qr(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)))[0]
    A = generate(N, u @ gens @ u.conj().T)
    D = wedderburn(A, seed=seed)
    _check_blocks(A, D)
    assert sorted(D.sizes, reverse=True) == D.sizes


def test_wedderburn_deterministic():
    A = _m2_plus_c()
    d1, d2 = wedderburn(A, seed=5), wedderburn(A, seed=5)
    for b1, b2 in zip(d1.blocks, d2.blocks):
        assert np.array_equal(b1.isometry, b2.isometry)
        assert np.array_equal(b1.central_projection, b2.central_projection)


def test_quotient_examples():
    D2 = generate(2, [np.diag([1.0, 2.0])])
    dec = wedderburn(D2)
    B, q = quotient_by(D2, dec, BlockIdeal.of([0]))
    assert B.dim == 1 and B.ambient == 1
    B, q = quotient_by(D2, dec, BlockIdeal.of([]))
    assert B.dim == 2 and np.linalg.matrix_rank(q.matrix(B)) == 2
    A = _m2_plus_c()
    B, q = quotient_by(A, wedderburn(A), BlockIdeal.of([1]))
    assert B.dim == 4 and B.has_unit_of_ambient
    assert np.allclose(q(A.unit), B.unit)


def test_quotient_everything_warns():
    A = _m2_plus_c()
    B, q = quotient_by(A, wedderburn(A), BlockIdeal.of([0, 1]))
    assert B.dim == 0 and q.warnings


def test_quotient_bad_ideal():
    A = _m2_plus_c()
    with pytest.raises(InvalidInput):
        quotient_by(A, wedderburn(A), BlockIdeal.of([7]))


@given(st.integers(0, 10_000))
def test_quotient_is_star_homomorphism(seed):
    rng = np.random.default_rng(seed)
    A = _m2_plus_c()
    D = wedderburn(A)
    _, q = quotient_by(A, D, BlockIdeal.of([int(rng.integers(2))]))
    a = A.element(rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim))
    b = A.element(rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim))
    assert np.linalg.norm(q(a @ b) - q(a) @ q(b)) <= 1e-8 * (1 + np.linalg.norm(a) * np.linalg.norm(b))
    assert np.linalg.norm(q(a.conj().T) - q(a).conj().T) <= 1e-8 * (1 + np.linalg.norm(a))
