"""Finite-dimensional *-subalgebras of ``M_N``: generation, central blocks, quotients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NumericalDegeneracy
from .matcore import (
    DEFAULT_TOL,
    Tolerances,
    cluster_eigenvalues,
    extend_orthonormal,
    fix_phase,
    operator_norm,
    range_basis,
)

MAX_AMBIENT = 64
_FINGERPRINT_SEED = 20240917


@dataclass(frozen=True, eq=False)
class StarAlgebra:
    """Span of ``spanning_basis`` (orthonormal for the trace inner product) inside ``M_N``."""

    ambient: int
    spanning_basis: np.ndarray
    unit: np.ndarray
    generators: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.spanning_basis.shape[0]

    @property
    def has_unit_of_ambient(self) -> bool:
        return self.ambient > 0 and np.allclose(self.unit, np.eye(self.ambient), atol=1e-9)

    def coords(self, mats) -> np.ndarray:
        """Coordinates (orthonormal basis) of a stack of elements."""
        mats = np.asarray(mats, dtype=np.complex128)
        flat = mats.reshape(mats.shape[0], -1)
        return flat @ self.spanning_basis.reshape(self.dim, -1).conj().T

    def element(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.spanning_basis, axes=(0, 0))

    def contains(self, m, tol: Tolerances = DEFAULT_TOL) -> bool:
        m = np.asarray(m, dtype=np.complex128)
        if self.dim == 0:
            return operator_norm(m) <= tol.rank_eps
        rec = self.element(self.coords(m[None])[0])
        return np.linalg.norm(rec - m) <= tol.rank_eps * (1 + np.linalg.norm(m))


@dataclass(frozen=True, eq=False)
class Block:
    central_projection: np.ndarray
    block_dim: int
    multiplicity: int
    isometry: np.ndarray  # N x n_i; psi(a) = V^* a V is the block as full n_i x n_i matrices

    def image(self, a) -> np.ndarray:
        return self.isometry.conj().T @ a @ self.isometry


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    blocks: tuple
    seed: int

    @property
    def sizes(self) -> list[int]:
        return [b.block_dim for b in self.blocks]

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class BlockIdeal:
    block_indices: frozenset

    @classmethod
    def of(cls, indices):
        return cls(frozenset(int(i) for i in indices))

    def __iter__(self):
        return iter(sorted(self.block_indices))

    def __len__(self):
        return len(self.block_indices)


def _unit_of(basis: np.ndarray, N: int) -> np.ndarray:
    if basis.shape[0] == 0:
        return np.zeros((N, N), dtype=np.complex128)
    flat = np.transpose(basis, (1, 0, 2)).reshape(N, -1)
    h = flat @ flat.conj().T
    w, u = np.linalg.eigh((h + h.conj().T) / 2)
    # on the support of the algebra the frame operator has eigenvalues n_i/m_i >= 1/N
    keep = w > 0.5 / N
    uk = u[:, keep]
    return uk @ uk.conj().T


def generate(ambient: int, generators, tol: Tolerances = DEFAULT_TOL, max_ambient: int = MAX_AMBIENT) -> StarAlgebra:
    """Smallest *-subalgebra of ``M_ambient`` containing ``generators``.

    Breadth-first: each round multiplies the newly found basis elements on the
    right by the generators and their adjoints.
    """
    N = int(ambient)
    if N > max_ambient:
        raise InvalidInput(f"ambient dimension {N} exceeds the desk-scale guard {max_ambient}")
    gens = np.asarray(generators, dtype=np.complex128).reshape(-1, N, N)
    if not np.all(np.isfinite(gens)):
        raise InvalidInput("generators have non-finite entries")
    letters = np.concatenate([gens, np.conj(np.transpose(gens, (0, 2, 1)))])
    q, _ = extend_orthonormal(None, letters, tol.rank_eps)
    if q is None:
        z = np.zeros((0, N, N), dtype=np.complex128)
        return StarAlgebra(N, z, np.zeros((N, N), dtype=np.complex128), letters)
    frontier = q.reshape(-1, N, N)
    while frontier.shape[0]:
        prods = (frontier[:, None] @ letters[None]).reshape(-1, N, N)
        before = q.shape[0]
        q, added = extend_orthonormal(q, prods, tol.rank_eps)
        if q.shape[0] > N * N:
            raise RuntimeError("generated algebra exceeds N^2 dimensions")
        frontier = q[before:].reshape(-1, N, N)
    basis = q.reshape(-1, N, N)
    basis.setflags(write=False)
    return StarAlgebra(N, basis, _unit_of(basis, N), letters)


def center(A: StarAlgebra, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Basis (stack of matrices) of the center of ``A``."""
    k = A.dim
    rows = []
    for g in A.generators:
        comm = A.spanning_basis @ g - g @ A.spanning_basis
        rows.append(A.coords(comm).T)  # column k = coords of [B_k, g]
    K = np.vstack(rows)
    _, s, vh = np.linalg.svd(K, full_matrices=True)
    scale = max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > np.sqrt(tol.rank_eps) * scale))
    ns = vh[rank:].conj().T
    return np.tensordot(ns.T, A.spanning_basis, axes=(1, 0))


def _random_hermitian(A: StarAlgebra, rng) -> np.ndarray:
    c = rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim)
    h = A.element(c)
    return (h + h.conj().T) / 2


def _try_wedderburn(A: StarAlgebra, rng, tol: Tolerances):
    N = A.ambient
    Z = center(A, tol)
    nblocks = Z.shape[0]
    c = np.tensordot(rng.standard_normal(nblocks) + 1j * rng.standard_normal(nblocks), Z, axes=(0, 0))
    c = (c + c.conj().T) / 2
    c = c / max(operator_norm(c), 1e-300)
    w, u = np.linalg.eigh(c)
    order = np.argsort(-w)
    w, u = w[order], u[:, order]
    projs = []
    for grp in cluster_eigenvalues(w, tol.gap_eps):
        P = u[:, grp] @ u[:, grp].conj().T
        z = P @ A.unit
        z = (z + z.conj().T) / 2
        if np.linalg.norm(z) > 0.5:
            projs.append(z)
    if len(projs) != nblocks:
        raise NumericalDegeneracy(f"found {len(projs)} spectral clusters for a center of dim {nblocks}")
    blocks = []
    h = _random_hermitian(A, rng)
    hn = operator_norm(h) + 1.0
    for z in projs:
        hz = z @ (h + 2 * hn * np.eye(N)) @ z
        hw, hu = np.linalg.eigh((hz + hz.conj().T) / 2)
        f = fix_phase(hu[:, -1])
        V = range_basis(np.einsum("kab,b->ak", A.spanning_basis, f), np.sqrt(tol.rank_eps))
        n = V.shape[1]
        # the compression a -> V^* a V must be onto M_n
        comp = (V.conj().T @ A.spanning_basis @ V).reshape(A.dim, -1)
        s = np.sqrt(np.maximum(np.linalg.eigvalsh(comp.conj().T @ comp)[::-1], 0))
        if int(np.sum(s > np.sqrt(tol.rank_eps) * s[0])) != n * n:
            raise NumericalDegeneracy("minimal projection vector does not generate an irreducible block")
        V = np.column_stack([fix_phase(V[:, j]) for j in range(n)])
        rank_z = int(round(np.real(np.trace(z))))
        if rank_z % n:
            raise NumericalDegeneracy("block rank is not a multiple of its matrix size")
        blocks.append(Block(z, n, rank_z // n, V))
    return blocks


def _fingerprint(A: StarAlgebra, block: Block):
    rng = np.random.default_rng(_FINGERPRINT_SEED)
    h = _random_hermitian(A, rng)
    ev = np.linalg.eigvalsh(block.image(h))
    return tuple(np.round(np.sort(ev)[::-1], 6))


def wedderburn(A: StarAlgebra, seed: int = 0, tol: Tolerances = DEFAULT_TOL, retries: int = 8) -> BlockDecomposition:
    """Minimal central projections and block isomorphisms ``a -> V_i^* a V_i``.

    Blocks are ordered by descending size, ties broken by a spectral fingerprint.
    """
    if A.dim == 0:
        return BlockDecomposition((), seed)
    last = None
    for attempt in range(retries + 1):
        rng = np.random.default_rng([seed, attempt])
        try:
            blocks = _try_wedderburn(A, rng, tol)
            break
        except NumericalDegeneracy as exc:
            last = exc
    else:
        raise NumericalDegeneracy(f"Wedderburn decomposition failed after {retries} retries: {last}")
    keyed = sorted(
        ((-b.block_dim, _fingerprint(A, b), i) for i, b in enumerate(blocks)),
    )
    return BlockDecomposition(tuple(blocks[k[2]] for k in keyed), seed)


@dataclass(frozen=True, eq=False)
class QuotientMap:
    """Kill-the-ideal *-homomorphism ``a -> diag(V_i^* a V_i : i kept)``."""

    isometries: tuple
    kept: tuple
    source: StarAlgebra
    warnings: tuple = ()

    @property
    def target_ambient(self) -> int:
        return sum(V.shape[1] for V in self.isometries)

    def __call__(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.complex128)
        K = self.target_ambient
        out = np.zeros((K, K), dtype=np.complex128)
        o = 0
        for V in self.isometries:
            n = V.shape[1]
            out[o:o + n, o:o + n] = V.conj().T @ a @ V
            o += n
        return out

    def matrix(self, target: StarAlgebra) -> np.ndarray:
        """Coefficient matrix from source-basis coordinates to target-basis coordinates."""
        if target.dim == 0:
            return np.zeros((0, self.source.dim), dtype=np.complex128)
        imgs = np.asarray([self(b) for b in self.source.spanning_basis])
        return target.coords(imgs).T


def quotient_by(A: StarAlgebra, D: BlockDecomposition, ideal: BlockIdeal, tol: Tolerances = DEFAULT_TOL):
    """Direct sum of the blocks outside ``ideal`` and the quotient map onto it."""
    if not ideal.block_indices <= set(range(len(D))):
        raise InvalidInput("ideal refers to blocks outside the decomposition")
    kept = tuple(i for i in range(len(D)) if i not in ideal.block_indices)
    warnings = ()
    if not kept and A.dim:
        warnings = ("ideal is the whole algebra; quotient is zero",)
    q = QuotientMap(tuple(D.blocks[i].isometry for i in kept), kept, A, warnings)
    K = q.target_ambient
    if K == 0:
        z = np.zeros((0, 0, 0), dtype=np.complex128)
        return StarAlgebra(0, z, np.zeros((0, 0), dtype=np.complex128), z), q
    imgs = np.asarray([q(b) for b in A.spanning_basis])
    qq, _ = extend_orthonormal(None, imgs, tol.rank_eps)
    basis = qq.reshape(-1, K, K)
    gens = np.asarray([q(g) for g in A.generators])
    return StarAlgebra(K, basis, q(A.unit), gens), q
