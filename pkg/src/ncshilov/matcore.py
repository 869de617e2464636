"""Dense complex linear algebra substrate.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Every verdict
threshold comes from a :class:`Tolerances` record that callers pass explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotHermitian


@dataclass(frozen=True)
class Tolerances:
    rank_eps: float = 1e-9
    norm_eps: float = 1e-6
    gap_eps: float = 1e-7

    def __post_init__(self):
        for name in ("rank_eps", "norm_eps", "gap_eps"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInput(f"tolerance {name} must be strictly positive, got {v!r}")
        if not self.rank_eps < self.norm_eps:
            raise InvalidInput("rank_eps must be smaller than norm_eps")

    def as_dict(self):
        return {"rank_eps": self.rank_eps, "norm_eps": self.norm_eps, "gap_eps": self.gap_eps}


DEFAULT_TOL = Tolerances()


def as_cmatrix(m, name="matrix") -> np.ndarray:
    """Validate and convert to a 2-d complex128 array (read-only copy)."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


def operator_norm(m) -> float:
    """Largest singular value."""
    a = np.asarray(m, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise InvalidInput("non-finite entries")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def herm_eig(m, tol: Tolerances = DEFAULT_TOL):
    """Spectral decomposition of a Hermitian matrix, eigenvalues descending.

    Returns ``(eigenvalues, U)`` with ``m = U @ diag(eigenvalues) @ U^*``.
    """
    a = as_cmatrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"herm_eig needs a square matrix, got {a.shape}")
    scale = max(1.0, operator_norm(a))
    if np.linalg.norm(a - a.conj().T, 2) > tol.rank_eps * scale:
        raise NotHermitian("matrix is not Hermitian within rank_eps")
    w, u = np.linalg.eigh((a + a.conj().T) / 2)
    order = np.argsort(-w, kind="stable")
    return w[order], u[:, order]


def cluster_eigenvalues(values, gap: float):
    """Group sorted (descending) values whose consecutive gaps are <= ``gap``.

    Returns a list of index arrays.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    groups = [[0]]
    for i in range(1, values.size):
        if abs(values[i - 1] - values[i]) <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def psd_sqrt(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    w, u = herm_eig(m, tol)
    w = np.clip(w, 0.0, None)
    return (u * np.sqrt(w)) @ u.conj().T


def _vec(mats) -> np.ndarray:
    mats = np.asarray(mats, dtype=np.complex128)
    return mats.reshape(mats.shape[0], -1)


def null_space(a, rel_tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical kernel of ``a``."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[1]
    if a.shape[0] == 0 or n == 0:
        return np.eye(n, dtype=np.complex128)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    scale = max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > rel_tol * scale))
    return vh[rank:].conj().T


def extend_orthonormal(q: np.ndarray | None, candidates, rel_tol: float):
    """Grow an orthonormal family (rows of ``q``) by the span of ``candidates``.

    ``candidates`` is a stack of arrays (flattened internally).  Returns
    ``(q_new, n_added)``.  Uses two passes of projection (Gram-Schmidt with
    reorthogonalization) followed by an SVD of the residuals.
    """
    c = _vec(candidates)
    if c.shape[0] == 0:
        return q, 0
    norms = np.linalg.norm(c, axis=1)
    scale = np.maximum(norms, 1.0)
    qh = q.conj().T if q is not None and q.shape[0] else None
    if qh is not None:
        for _ in range(2):
            c = c - (c @ qh) @ q
    res = np.linalg.norm(c, axis=1)
    keep = res > rel_tol * scale
    if not np.any(keep):
        return q, 0
    c = c[keep]
    u, s, vh = np.linalg.svd(c, full_matrices=False)
    thresh = rel_tol * max(1.0, float(np.max(norms)))
    new = vh[s > thresh]
    if new.shape[0] == 0:
        return q, 0
    if qh is not None:
        for _ in range(2):
            new = new - (new @ qh) @ q
        new, _ = np.linalg.qr(new.T)
        new = new.T
        qn = np.vstack([q, new])
    else:
        qn = new
    return qn, new.shape[0]


def orthonormal_basis(mats, rel_tol: float) -> np.ndarray:
    """Orthonormal basis (trace inner product) of the span of ``mats``.

    Returns an array of shape ``(k, *mats[0].shape)``.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    shape = mats.shape[1:]
    q, _ = extend_orthonormal(None, mats, rel_tol)
    if q is None:
        return np.zeros((0,) + shape, dtype=np.complex128)
    return q.reshape((q.shape[0],) + shape)


def span_membership(basis, candidate, tol: Tolerances = DEFAULT_TOL):
    """Least-squares membership test of ``candidate`` in ``span(basis)``.

    Returns ``(member, coefficients)``; coefficients is ``None`` when not a member.
    """
    cand = np.asarray(candidate, dtype=np.complex128)
    if not np.all(np.isfinite(cand)):
        raise InvalidInput("candidate has non-finite entries")
    basis = list(basis)
    cnorm = operator_norm(cand)
    if not basis:
        member = cnorm <= tol.rank_eps
        return member, (np.zeros(0, dtype=np.complex128) if member else None)
    b = np.asarray(basis, dtype=np.complex128)
    if b.shape[1:] != cand.shape:
        raise InvalidInput(f"shape mismatch: basis {b.shape[1:]} vs candidate {cand.shape}")
    a = _vec(b).T
    coef, *_ = np.linalg.lstsq(a, cand.reshape(-1), rcond=None)
    resid = np.linalg.norm(a @ coef - cand.reshape(-1))
    if resid <= tol.rank_eps * (1.0 + cnorm):
        return True, coef
    return False, None


def coordinates(basis, mats) -> tuple[np.ndarray, float]:
    """Least-squares coordinates of a stack of matrices in ``basis``.

    Returns ``(coeffs, max_residual)`` where ``coeffs[i]`` expands ``mats[i]``.
    """
    a = _vec(basis).T
    rhs = _vec(mats).T
    coef, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    resid = np.linalg.norm(a @ coef - rhs, axis=0)
    return coef.T, float(resid.max()) if resid.size else 0.0


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def range_projection(m, rel_tol: float) -> np.ndarray:
    """Orthogonal projection onto the range of ``m``."""
    u, s, _ = np.linalg.svd(np.asarray(m, dtype=np.complex128))
    if s.size == 0:
        return np.zeros((m.shape[0], m.shape[0]), dtype=np.complex128)
    k = int(np.sum(s > rel_tol * max(1.0, s[0])))
    uk = u[:, :k]
    return uk @ uk.conj().T


def range_basis(m, rel_tol: float) -> np.ndarray:
    """Orthonormal columns spanning the range of ``m``."""
    u, s, _ = np.linalg.svd(np.asarray(m, dtype=np.complex128))
    if s.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.complex128)
    k = int(np.sum(s > rel_tol * max(1.0, s[0])))
    return u[:, :k]


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-magnitude entry is real positive."""
    i = int(np.argmax(np.abs(v)))
    if abs(v[i]) == 0:
        return v
    return v * (abs(v[i]) / v[i])
