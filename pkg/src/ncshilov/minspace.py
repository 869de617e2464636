"""MIN operator spaces of finite-dimensional Banach spaces and their multipliers.

A Banach space embeds isometrically into continuous functions on the extreme
points of its dual ball; sampling those points gives a diagonal-matrix
realization.  Banach multipliers are the operators whose adjoint has every
extreme functional as an eigenvector.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .envelope import triple_envelope
from .errors import InvalidInput, SampledOnlyWarning
from .levelopt import sphere_points
from .matcore import DEFAULT_TOL, Tolerances, null_space, operator_norm
from .multiplier import left_multipliers, right_multipliers
from .opspace import OperatorSpace

NAMED = ("l1", "linf", "l2")


@dataclass(frozen=True, eq=False)
class BanachSpace:
    """``ball`` is ``"l1"``, ``"linf"``, ``"l2"`` or a real vertex array ``(k, dim)`` (symmetric hull)."""

    dim: int
    ball: object

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInput("dimension must be positive")
        if isinstance(self.ball, str):
            if self.ball not in NAMED:
                raise InvalidInput(f"unknown ball {self.ball!r}")
        else:
            v = np.asarray(self.ball, dtype=float)
            if v.ndim != 2 or v.shape[1] != self.dim:
                raise InvalidInput("polytope vertices must have shape (k, dim)")
            object.__setattr__(self, "ball", v)

    @property
    def exact(self) -> bool:
        """Whether the dual extreme set is finite up to the circle action."""
        return not isinstance(self.ball, str) or self.ball == "linf"

    def polar_vertices(self) -> np.ndarray:
        """Extreme points of the dual ball of a polytope, one per antipodal pair."""
        v = np.vstack([self.ball, -self.ball])
        if self.dim == 1:
            return np.array([[1.0 / np.abs(v).max()]])
        hull = ConvexHull(v)
        eq = hull.equations  # a.x + b <= 0 on the hull, with b < 0 for a ball around 0
        f = eq[:, :-1] / (-eq[:, -1:])
        out = []
        for row in f:
            if not any(np.allclose(row, s) or np.allclose(row, -s) for s in out):
                out.append(row)
        return np.asarray(out)

    def extreme_functionals(self, count: int = 64, seed: int = 0) -> np.ndarray:
        """Norm-one dual vectors (rows); exact orbit representatives plus, for continuous sets, a grid."""
        d = self.dim
        if isinstance(self.ball, np.ndarray):
            return self.polar_vertices().astype(np.complex128)
        if self.ball == "linf":
            return np.eye(d, dtype=np.complex128)
        if self.ball == "l1":
            if d == 1:
                return np.ones((1, 1), dtype=np.complex128)
            if d == 2:
                t = 2 * np.pi * np.arange(count) / count
                return np.column_stack([np.ones(count), np.exp(1j * t)])
            rng = np.random.default_rng(seed)
            ph = np.exp(2j * np.pi * rng.random((count, d - 1)))
            return np.column_stack([np.ones(count), ph])
        z = sphere_points(d, count, seed)
        return np.conj(z)

    def norm(self, x, count: int = 4096) -> float:
        """The Banach norm (exact for named balls and polytopes)."""
        x = np.asarray(x, dtype=np.complex128)
        if isinstance(self.ball, np.ndarray):
            return float(np.abs(self.polar_vertices() @ x).max())
        return float({"l1": np.abs(x).sum(), "linf": np.abs(x).max(), "l2": np.linalg.norm(x)}[self.ball])


@dataclass(frozen=True, eq=False)
class MinRealization:
    space: OperatorSpace
    sample: np.ndarray  # functionals as rows
    exact: bool


def realize_min(B: BanachSpace, sample_size: int = 64, seed: int = 0, retries: int = 8) -> MinRealization:
    """Diagonal realization ``x -> diag(psi_j(x))`` over sampled extreme functionals."""
    if sample_size < B.dim:
        raise InvalidInput("sample_size must be at least the dimension")
    last = None
    for attempt in range(retries + 1):
        psi = B.extreme_functionals(sample_size, seed + attempt)
        mats = np.zeros((B.dim, psi.shape[0], psi.shape[0]), dtype=np.complex128)
        for k in range(B.dim):
            mats[k] = np.diag(psi[:, k])
        try:
            X = OperatorSpace(mats, label=f"MIN({B.ball if isinstance(B.ball, str) else 'polytope'})")
            return MinRealization(X, psi, B.exact)
        except InvalidInput as exc:
            last = exc
    raise InvalidInput(f"sampled realization is not injective after {retries} retries: {last}")


def banach_multiplier_check(B: BanachSpace, R: MinRealization, op, tol: Tolerances = DEFAULT_TOL):
    """``(is_multiplier, M_bound)``: every sampled functional must be an eigenvector of ``op^*``."""
    op = np.asarray(op, dtype=np.complex128)
    psi = R.sample
    lam = np.einsum("jk,kl,jl->j", psi, op, psi.conj()) / np.einsum("jk,jk->j", psi, psi.conj())
    res = np.linalg.norm(psi @ op - lam[:, None] * psi, axis=1)
    if np.all(res <= tol.norm_eps):
        return True, float(np.abs(lam).max())
    return False, None


def banach_multipliers(R: MinRealization, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Basis ``(k, d, d)`` of all operators whose adjoint fixes every sampled functional's line."""
    d = R.sample.shape[1]
    rows = []
    for p in R.sample:
        p = p / np.linalg.norm(p)
        proj = np.eye(d) - np.outer(p.conj(), p)
        # vec(op) -> p op proj, linear in op
        rows.append(np.kron(p[None, :], proj.T))
    K = np.vstack(rows)
    ns = null_space(K, np.sqrt(tol.rank_eps))
    return ns.T.reshape(-1, d, d)


@dataclass(frozen=True, eq=False)
class CrossValidation:
    dim_left: int
    dim_right: int
    dim_banach: int
    left_in_banach: bool
    banach_in_left: bool
    norm_gap: float
    exact: bool

    @property
    def agree(self) -> bool:
        return self.dim_left == self.dim_right == self.dim_banach and self.left_in_banach and self.banach_in_left

    def as_dict(self):
        return {"dim_left": self.dim_left, "dim_right": self.dim_right, "dim_banach": self.dim_banach,
                "left_in_banach": self.left_in_banach, "banach_in_left": self.banach_in_left,
                "norm_gap": self.norm_gap, "exact": self.exact, "agree": self.agree}


def cross_validate_multipliers(B: BanachSpace, R: MinRealization, seed: int = 0,
                               tol: Tolerances = DEFAULT_TOL) -> CrossValidation:
    """Compare ``M_l`` and ``M_r`` of the MIN realization with the Banach multiplier algebra."""
    if not R.exact:
        warnings.warn("realization is sampled; the comparison holds at the sampled resolution only",
                      SampledOnlyWarning, stacklevel=2)
    X = R.space
    n = X.r
    T = triple_envelope(X, seed=seed, tol=tol, max_ambient=max(64, 2 * n))
    L = left_multipliers(T, tol)
    Rm = right_multipliers(T, tol)
    Bm = banach_multipliers(R, tol)
    left_in = True
    gap = 0.0
    for a, op in zip(L.element_basis, L.actions):
        ok, bound = banach_multiplier_check(B, R, op, tol)
        left_in &= ok
        if ok:
            gap = max(gap, abs(bound - operator_norm(a)))
    banach_in = True
    if Bm.shape[0] and L.dim:
        A = L.actions.reshape(L.dim, -1).T
        for op in Bm:
            c, *_ = np.linalg.lstsq(A, op.reshape(-1), rcond=None)
            banach_in &= bool(np.linalg.norm(A @ c - op.reshape(-1)) <= 1e-7)
    elif Bm.shape[0]:
        banach_in = False
    return CrossValidation(L.dim, Rm.dim, Bm.shape[0], bool(left_in), bool(banach_in), float(gap), R.exact)


def env_banach_check(B: BanachSpace, sample_size: int = 64, seed: int = 0):
    """``(True, m)`` with ``m`` the least dual norm over sampled extreme functionals (1 in finite dimensions)."""
    psi = B.extreme_functionals(sample_size, seed)
    if isinstance(B.ball, np.ndarray):
        dual = np.abs(psi @ np.vstack([B.ball, -B.ball]).T).max(axis=1)
    elif B.ball == "l1":
        dual = np.abs(psi).max(axis=1)
    elif B.ball == "linf":
        dual = np.abs(psi).sum(axis=1)
    else:
        dual = np.linalg.norm(psi, axis=1)
    m = float(dual.min())
    return bool(m > 1 - 1e-9), m
