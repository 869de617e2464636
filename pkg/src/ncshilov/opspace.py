"""Concrete finite-dimensional operator spaces and their matrix levels."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .matcore import DEFAULT_TOL, Tolerances, operator_norm, orthonormal_basis


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OperatorSpace:
    """A subspace of ``M_{r x c}`` given by a linearly independent basis.

    ``basis`` has shape ``(dim, r, c)``.
    """

    basis: np.ndarray
    label: str = ""
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=np.complex128)
        if b.ndim != 3 or b.shape[0] < 1:
            raise InvalidInput(f"basis must be a non-empty stack of matrices, got shape {b.shape}")
        if not np.all(np.isfinite(b)):
            raise InvalidInput("basis has non-finite entries")
        s = np.linalg.svd(b.reshape(b.shape[0], -1), compute_uv=False)
        if s[-1] <= self.tol.rank_eps * max(1.0, s[0]):
            raise InvalidInput("basis is linearly dependent at rank_eps")
        object.__setattr__(self, "basis", _freeze(b))

    @classmethod
    def from_spanning(cls, mats, label="", tol: Tolerances = DEFAULT_TOL):
        """Build from a possibly dependent spanning set, keeping a maximal independent subfamily.

        Keeps original matrices (not an orthonormalized version) so
        coefficient maps stay meaningful to the caller.
        """
        mats = np.asarray(mats, dtype=np.complex128)
        kept = []
        for m in mats:
            trial = kept + [m]
            a = np.asarray(trial).reshape(len(trial), -1)
            s = np.linalg.svd(a, compute_uv=False)
            if s[-1] > tol.rank_eps * max(1.0, s[0]):
                kept.append(m)
        if not kept:
            raise InvalidInput("spanning set is zero")
        return cls(np.asarray(kept), label=label, tol=tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def c(self) -> int:
        return self.basis.shape[2]

    def element(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        return np.tensordot(coeffs, self.basis, axes=(0, 0))

    def coords(self, mat) -> np.ndarray:
        """Coordinates of a matrix lying in the space (least squares)."""
        a = self.basis.reshape(self.dim, -1).T
        coef, *_ = np.linalg.lstsq(a, np.asarray(mat, dtype=np.complex128).reshape(-1), rcond=None)
        return coef

    def orthonormal(self) -> np.ndarray:
        return orthonormal_basis(self.basis, self.tol.rank_eps)


@dataclass(frozen=True)
class LevelElement:
    """An element of ``M_n(X)``: ``coeffs[i, j, k]`` is the k-th coordinate of entry (i, j)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] != c.shape[1]:
            raise InvalidInput(f"level element must have shape (n, n, dim), got {c.shape}")
        object.__setattr__(self, "coeffs", _freeze(c))

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_rect(cls, coeffs):
        """Pad an ``(p, q, dim)`` rectangular array of coordinates with zeros to square."""
        c = np.asarray(coeffs, dtype=np.complex128)
        n = max(c.shape[0], c.shape[1])
        out = np.zeros((n, n, c.shape[2]), dtype=np.complex128)
        out[: c.shape[0], : c.shape[1]] = c
        return cls(out)


def assemble(coeffs: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Concrete ``nr x nc`` matrix of ``[sum_k coeffs[i,j,k] basis[k]]``."""
    n = coeffs.shape[0]
    _, r, c = basis.shape
    return np.einsum("ijk,kab->iajb", coeffs, basis).reshape(n * r, coeffs.shape[1] * c)


def level_norm(X: OperatorSpace, x: LevelElement) -> float:
    if x.coeffs.shape[2] != X.dim:
        raise InvalidInput(f"level element has {x.coeffs.shape[2]} coordinates, space has dim {X.dim}")
    return operator_norm(assemble(x.coeffs, X.basis))


def corner(b: np.ndarray) -> np.ndarray:
    """Place an ``r x c`` matrix in the 1-2 corner of ``M_{r+c}``."""
    r, c = b.shape
    out = np.zeros((r + c, r + c), dtype=np.complex128)
    out[:r, r:] = b
    return out


def paulsen_system(X: OperatorSpace) -> OperatorSpace:
    """``[[C I_r, X], [X^*, C I_c]]`` inside ``M_{r+c}``.

    The two diagonal scalar corners are independent, so the dimension is
    ``2 dim X + 2``.
    """
    r, c = X.r, X.c
    n = r + c
    p = np.zeros((n, n), dtype=np.complex128)
    p[:r, :r] = np.eye(r)
    q = np.zeros((n, n), dtype=np.complex128)
    q[r:, r:] = np.eye(c)
    mats = [p, q]
    mats += [corner(b) for b in X.basis]
    mats += [corner(b).conj().T for b in X.basis]
    return OperatorSpace.from_spanning(mats, label=f"S({X.label})", tol=X.tol)


def direct_sum(X: OperatorSpace, Y: OperatorSpace) -> OperatorSpace:
    """The l-infinity direct sum, block diagonally inside ``M_{(rX+rY) x (cX+cY)}``."""
    r, c = X.r + Y.r, X.c + Y.c
    mats = []
    for b in X.basis:
        m = np.zeros((r, c), dtype=np.complex128)
        m[: X.r, : X.c] = b
        mats.append(m)
    for b in Y.basis:
        m = np.zeros((r, c), dtype=np.complex128)
        m[X.r :, X.c :] = b
        mats.append(m)
    return OperatorSpace(np.asarray(mats), label=f"{X.label}+{Y.label}", tol=X.tol)


def column_amplification(X: OperatorSpace, n: int) -> OperatorSpace:
    """``C_n(X)``: columns of ``n`` elements of ``X``, basis ``e_i (x) b``."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if n == 1:
        return X
    mats = []
    for i in range(n):
        e = np.zeros((n, 1))
        e[i, 0] = 1.0
        for b in X.basis:
            mats.append(np.kron(e, b))
    return OperatorSpace(np.asarray(mats), label=f"C_{n}({X.label})", tol=X.tol)


def matrix_units(r: int, c: int) -> np.ndarray:
    out = np.zeros((r * c, r, c), dtype=np.complex128)
    for k in range(r * c):
        out[k, k // c, k % c] = 1.0
    return out


def full_matrices(r: int, c: int | None = None, label=None) -> OperatorSpace:
    c = r if c is None else c
    return OperatorSpace(matrix_units(r, c), label=label or f"M_{r}x{c}")


def diagonal_algebra(n: int) -> OperatorSpace:
    mats = np.zeros((n, n, n), dtype=np.complex128)
    for i in range(n):
        mats[i, i, i] = 1.0
    return OperatorSpace(mats, label=f"D_{n}")


def upper_triangular(n: int) -> OperatorSpace:
    mats = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n), dtype=np.complex128)
            m[i, j] = 1.0
            mats.append(m)
    return OperatorSpace(np.asarray(mats), label=f"T_{n}")


def column_space(n: int) -> OperatorSpace:
    return OperatorSpace(matrix_units(n, 1), label=f"C_{n}")


def row_space(n: int) -> OperatorSpace:
    return OperatorSpace(matrix_units(1, n), label=f"R_{n}")


def random_space(rng: np.random.Generator, r: int, c: int, dim: int, label="random") -> OperatorSpace:
    mats = rng.standard_normal((dim, r, c)) + 1j * rng.standard_normal((dim, r, c))
    return OperatorSpace(mats, label=label)
