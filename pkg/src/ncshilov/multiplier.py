"""Left/right multiplier algebras computed inside the corners of the triple envelope.

Because ``E(X)`` and ``F(X)`` are unital here, a left multiplier is just an
``a`` in ``E(X)`` with ``a J(X) in J(X)``; that is a linear condition, solved
exactly.  Only cb-norm comparisons use optimization.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import DEFAULT_RESTARTS, TripleEnvelope, complete_isometry_defect, extend_to_triple_map, triple_envelope, triple_iso_check
from .errors import (
    InconsistentNumerics,
    InvalidInput,
    NotAMultiplier,
    NotIsometric,
    StructureViolation,
    ThmViolationAlarm,
)
from .levelopt import cb_norm_sdp, level1_grid_ratio, optimize_ratio
from .matcore import DEFAULT_TOL, Tolerances, coordinates, extend_orthonormal, null_space, operator_norm, psd_sqrt
from .opspace import OperatorSpace

KINDS = ("left", "right", "adjointable_left", "adjointable_right", "imprimitivity_left")


@dataclass(frozen=True, eq=False)
class MultiplierAlgebra:
    kind: str
    element_basis: np.ndarray  # (k, s, s) inside E(X) (left kinds) or F(X) (right kinds)
    actions: np.ndarray  # (k, d, d); column j = coordinates of the image of b_j
    unit_included: bool
    envelope: TripleEnvelope = field(repr=False)

    @property
    def dim(self) -> int:
        return self.element_basis.shape[0]

    @property
    def side(self) -> str:
        return "right" if self.kind.endswith("right") else "left"

    def action(self, a) -> np.ndarray:
        return action_matrix(self.envelope, a, self.side)

    def element(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.element_basis, axes=(0, 0))

    def coords(self, a):
        """Coordinates of ``a`` in ``element_basis``; returns ``(coeffs, residual)``."""
        c, res = coordinates(self.element_basis, np.asarray(a)[None])
        return c[0], res

    def contains(self, a, tol: Tolerances = DEFAULT_TOL) -> bool:
        if self.dim == 0:
            return operator_norm(a) <= tol.rank_eps
        _, res = self.coords(a)
        return res <= 1e-8 * (1 + np.linalg.norm(a))


@dataclass(frozen=True, eq=False)
class MultiplierNormResult:
    multiplier_norm: float
    cb_norm_lower: float
    realizing_element: np.ndarray
    cb_norm_upper: float | None = None

    def as_dict(self):
        return {"multiplier_norm": self.multiplier_norm, "cb_norm_lower": self.cb_norm_lower,
                "cb_norm_upper": self.cb_norm_upper}


def action_matrix(T: TripleEnvelope, a, side: str = "left") -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    imgs = np.einsum("ab,kbc->kac", a, T.J) if side == "left" else np.einsum("kab,bc->kac", T.J, a)
    coef, res = T.J_coords(imgs)
    if res > 1e-7 * (1 + np.abs(imgs).max()):
        raise NotAMultiplier(f"element does not preserve J(X) (residual {res:.2e})")
    return coef.T


def _solve_multipliers(T: TripleEnvelope, side: str, tol: Tolerances):
    alg = T.E if side == "left" else T.F
    Jv = T.J.reshape(T.J.shape[0], -1)
    q, _ = extend_orthonormal(None, Jv, tol.rank_eps)
    cols = []
    for m in alg.spanning_basis:
        imgs = np.einsum("ab,kbc->kac", m, T.J) if side == "left" else np.einsum("kab,bc->kac", T.J, m)
        v = imgs.reshape(imgs.shape[0], -1)
        v = v - (v @ q.conj().T) @ q
        cols.append(v.reshape(-1))
    K = np.asarray(cols).T
    ns = null_space(K, np.sqrt(tol.rank_eps))
    elems = np.tensordot(ns.T, alg.spanning_basis, axes=(1, 0))
    return alg, elems


def _check_product_closed(elems, tol: Tolerances, star=False):
    if elems.shape[0] == 0:
        return
    prods = np.einsum("iab,jbc->ijac", elems, elems).reshape(-1, *elems.shape[1:])
    _, res = coordinates(elems, prods)
    if res > 1e-7 * (1 + np.abs(prods).max()):
        raise InconsistentNumerics(f"multiplier space is not closed under products (residual {res:.2e})")
    if star:
        _, res = coordinates(elems, np.conj(np.transpose(elems, (0, 2, 1))))
        if res > 1e-7:
            raise InconsistentNumerics("adjointable multipliers are not closed under adjoints")


def _build(T, kind, elems, alg, tol):
    side = "right" if kind.endswith("right") else "left"
    q, _ = extend_orthonormal(None, elems, tol.rank_eps)
    s = alg.spanning_basis.shape[1]
    basis = q.reshape(-1, s, s) if q is not None else np.zeros((0, s, s), dtype=np.complex128)
    actions = np.asarray([action_matrix(T, a, side) for a in basis]) if basis.shape[0] else np.zeros((0, T.J.shape[0], T.J.shape[0]))
    M = MultiplierAlgebra(kind, basis, actions, False, T)
    return MultiplierAlgebra(kind, basis, actions, M.contains(alg.unit, tol), T)


def left_multipliers(T: TripleEnvelope, tol: Tolerances | None = None) -> MultiplierAlgebra:
    """``M_l(X) = {a in E(X) : a J(X) in J(X)}``."""
    tol = tol or T.tol
    alg, elems = _solve_multipliers(T, "left", tol)
    _check_product_closed(elems, tol)
    return _build(T, "left", elems, alg, tol)


def right_multipliers(T: TripleEnvelope, tol: Tolerances | None = None) -> MultiplierAlgebra:
    tol = tol or T.tol
    alg, elems = _solve_multipliers(T, "right", tol)
    _check_product_closed(elems, tol)
    return _build(T, "right", elems, alg, tol)


def imprimitivity_left(T: TripleEnvelope, tol: Tolerances | None = None) -> MultiplierAlgebra:
    """``K_l(X)``; here compact and bounded module maps coincide, so it equals ``M_l(X)``."""
    M = left_multipliers(T, tol)
    return MultiplierAlgebra("imprimitivity_left", M.element_basis, M.actions, M.unit_included, T)


def _star_part(M: MultiplierAlgebra, tol: Tolerances):
    if M.dim == 0:
        return M.element_basis
    U = M.element_basis.reshape(M.dim, -1).T
    V = np.conj(np.transpose(M.element_basis, (0, 2, 1))).reshape(M.dim, -1).T
    ns = null_space(np.hstack([U, -V]), np.sqrt(tol.rank_eps))
    return np.tensordot(ns[: M.dim].T, M.element_basis, axes=(1, 0))


def adjointable_left(T: TripleEnvelope, tol: Tolerances | None = None) -> MultiplierAlgebra:
    """``A_l(X)``: left multipliers whose adjoint in ``E(X)`` is again a left multiplier."""
    tol = tol or T.tol
    M = left_multipliers(T, tol)
    elems = _star_part(M, tol)
    _check_product_closed(elems, tol, star=True)
    return _build(T, "adjointable_left", elems, T.E, tol)


def adjointable_right(T: TripleEnvelope, tol: Tolerances | None = None) -> MultiplierAlgebra:
    tol = tol or T.tol
    M = right_multipliers(T, tol)
    elems = _star_part(M, tol)
    _check_product_closed(elems, tol, star=True)
    return _build(T, "adjointable_right", elems, T.F, tol)


def realize(M: MultiplierAlgebra, op) -> np.ndarray:
    """The unique element of ``M`` whose action on ``X`` is the coefficient matrix ``op``."""
    op = np.asarray(op, dtype=np.complex128)
    d = M.envelope.J.shape[0]
    if op.shape != (d, d):
        raise InvalidInput(f"op must be {d}x{d}")
    if M.dim == 0:
        raise NotAMultiplier("multiplier algebra is zero")
    A = M.actions.reshape(M.dim, -1).T
    coef, *_ = np.linalg.lstsq(A, op.reshape(-1), rcond=None)
    res = np.linalg.norm(A @ coef - op.reshape(-1))
    if res > 1e-7 * (1 + np.linalg.norm(op)):
        raise NotAMultiplier(f"operator is not in the image of the action (residual {res:.2e})")
    return M.element(coef)


def op_images(X: OperatorSpace, op) -> np.ndarray:
    """Concrete images ``op(b_j) = sum_k op[k, j] b_k``."""
    return np.tensordot(np.asarray(op, dtype=np.complex128).T, X.basis, axes=(1, 0))


def cb_norm_lower(X: OperatorSpace, op, seed: int = 0, restarts: int = DEFAULT_RESTARTS,
                  level_cap: int | None = None) -> float:
    """Best witness found for ``||op||_cb`` (multistart ascent plus level-1 search)."""
    imgs = op_images(X, op)
    cap = level_cap or max(X.r, X.c)
    rng = np.random.default_rng(seed)
    best = 0.0
    if X.dim <= 3:
        best, _ = level1_grid_ratio([imgs], [X.basis], seed=seed, maximize=True)
    for n in range(1, cap + 1):
        res = optimize_ratio([imgs], [X.basis], n, rng, restarts=restarts, maximize=True)
        best = max(best, res.ratio)
    return float(best)


def cb_norm_upper(X: OperatorSpace, op) -> float:
    """``||op||_cb`` from the semidefinite program (an upper bound up to solver accuracy)."""
    return cb_norm_sdp(X.basis, op_images(X, op))


def multiplier_norm(T: TripleEnvelope, M: MultiplierAlgebra, op, seed: int = 0,
                    restarts: int = 16, level_cap: int | None = None, sdp: bool = False) -> MultiplierNormResult:
    a = realize(M, op)
    lower = cb_norm_lower(T.source, op, seed, restarts, level_cap)
    upper = cb_norm_upper(T.source, op) if sdp else None
    return MultiplierNormResult(operator_norm(a), lower, a, upper)


@dataclass(frozen=True, eq=False)
class LobResult:
    passed: bool
    min_eigenvalue: float
    witness: np.ndarray | None  # (k, dim X) coefficient tuple

    def __bool__(self):
        return bool(self.passed)


def lob_verify(T: TripleEnvelope, op, M_bound: float, sample_count: int = 200, seed: int = 0,
               tol: Tolerances | None = None) -> LobResult:
    """Sampled check of ``[<S x_i | S x_j>] <= M^2 [<x_i | x_j>]``.

    Tuples have length ``dim X``; the first one is the basis itself, the rest
    are seeded Gaussian tuples.
    """
    tol = tol or T.tol
    op = np.asarray(op, dtype=np.complex128)
    d = T.J.shape[0]
    rng = np.random.default_rng(seed)
    worst, witness = np.inf, None
    for s in range(sample_count):
        xs = np.eye(d, dtype=np.complex128) if s == 0 else rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        Z = np.hstack([T.J_of(x) for x in xs])
        ZS = np.hstack([T.J_of(op @ x) for x in xs])
        G = Z.conj().T @ Z
        H = ZS.conj().T @ ZS
        D = M_bound ** 2 * G - H
        lam = float(np.linalg.eigvalsh((D + D.conj().T) / 2)[0])
        scale = 1 + M_bound ** 2 * np.linalg.norm(G, 2)
        if lam / scale < worst:
            worst = lam / scale
            if lam < -tol.norm_eps * scale:
                witness = xs
    passed = bool(worst >= -tol.norm_eps)
    return LobResult(passed, worst, None if passed else witness)


@dataclass(frozen=True, eq=False)
class PolarResult:
    V: np.ndarray
    absT: np.ndarray
    checks: dict


def _kernel(mat, tol=1e-8):
    return null_space(mat, tol)


def _same_subspace(a, b, tol=1e-7) -> bool:
    if a.shape[1] != b.shape[1]:
        return False
    if a.shape[1] == 0:
        return True
    return bool(np.linalg.norm(a @ a.conj().T - b @ b.conj().T) <= tol)


def _range(mat, tol=1e-8):
    u, s, _ = np.linalg.svd(mat)
    k = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0)))
    return u[:, :k]


def polar_decompose(Al: MultiplierAlgebra, t, tol: Tolerances = DEFAULT_TOL) -> PolarResult:
    """``t = V |t|`` with ``|t| = (t^* t)^{1/2}`` and ``V`` a partial isometry in ``A_l(X)``."""
    if not Al.kind.startswith("adjointable"):
        raise InvalidInput("polar decomposition needs an adjointable multiplier algebra")
    t = np.asarray(t, dtype=np.complex128)
    if not Al.contains(t, tol):
        raise InvalidInput("t is not in the algebra")
    absT = psd_sqrt(t.conj().T @ t, tol)
    w, u = np.linalg.eigh(absT)
    cut = 1e-10 * max(1.0, w.max())
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    V = t @ (u * inv) @ u.conj().T
    Tt, Vv = Al.action(t), Al.action(V)
    Ts, Vs = Al.action(t.conj().T), Al.action(V.conj().T)
    checks = {
        "reconstruction": float(np.linalg.norm(t - V @ absT, 2)),
        "partial_isometry": float(np.linalg.norm(V @ V.conj().T @ V - V, 2)),
        "V_in_algebra": bool(Al.contains(V, tol)),
        "absT_in_algebra": bool(Al.contains(absT, tol)),
        "ker_V_eq_ker_T": _same_subspace(_kernel(Vv), _kernel(Tt)),
        "ker_Vstar_eq_ker_Tstar": _same_subspace(_kernel(Vs), _kernel(Ts)),
        "range_V_eq_range_T": _same_subspace(_range(Vv), _range(Tt)),
        "range_Vstar_eq_range_Tstar": _same_subspace(_range(Vs), _range(Ts)),
    }
    return PolarResult(V, absT, checks)


def _check_unital_algebra(S: OperatorSpace, unit, name: str, tol: Tolerances):
    unit = np.asarray(unit, dtype=np.complex128)
    e = S.element(unit)
    for b in S.basis:
        if np.linalg.norm(e @ b - b) > 1e-8 or np.linalg.norm(b @ e - b) > 1e-8:
            raise StructureViolation(f"{name}: supplied unit does not act as identity")
    prods = np.einsum("iab,jbc->ijac", S.basis, S.basis).reshape(-1, S.r, S.c)
    _, res = coordinates(S.basis, prods)
    if res > 1e-8 * (1 + np.abs(prods).max()):
        raise StructureViolation(f"{name}: basis products leave the span (not an algebra)")
    if abs(operator_norm(e) - 1) > tol.norm_eps:
        raise StructureViolation(f"{name}: unit does not have norm 1")
    return e


@dataclass(frozen=True, eq=False)
class BanachStoneResult:
    u: np.ndarray  # coefficients in B of T(1); T(a) = u pi(a)
    u_inverse: np.ndarray  # coefficients of u^{-1}; statement form T(a) = (u^{-1})^{-1} pi(a)
    pi: np.ndarray  # coefficient matrix of the homomorphism A -> B
    theta: np.ndarray  # triple isomorphism T(A) -> T(B) on envelope bases
    checks: dict


def banach_stone(A: OperatorSpace, B: OperatorSpace, Tmap, unit_A, unit_B, seed: int = 0,
                 tol: Tolerances = DEFAULT_TOL, restarts: int = 16, check_isometry: bool = True) -> BanachStoneResult:
    """Factor a complete isometry between unital operator algebras as ``T(a) = u pi(a)``.

    ``u = T(1)`` is unitary in the C*-envelope of ``B`` and ``pi = u^{-1} T`` is
    a completely isometric homomorphism.  Both the ``u pi`` form and the
    ``u^{-1} pi`` form (with ``u`` replaced by its inverse) are reported.
    """
    Tmap = np.asarray(Tmap, dtype=np.complex128)
    if Tmap.shape != (B.dim, A.dim) or A.dim != B.dim:
        raise InvalidInput("Tmap must be a square coefficient matrix between equal-dimensional spaces")
    _check_unital_algebra(A, unit_A, "A", tol)
    eB = _check_unital_algebra(B, unit_B, "B", tol)
    imgs = op_images_between(B, Tmap)
    checks = {}
    if check_isometry:
        rep = complete_isometry_defect(A, imgs, seed=seed, tol=tol, restarts=restarts)
        checks["isometry_defect"] = rep.defect
        checks["isometry_expansion"] = rep.expansion
        if not rep.is_complete_isometry:
            raise NotIsometric(f"Tmap is not completely isometric (verdict {rep.verdict}, defect {rep.defect:.2e})")
    TA = triple_envelope(A, seed=seed, tol=tol)
    TB = triple_envelope(B, seed=seed, tol=tol)
    theta, resid = extend_to_triple_map(TA, np.tensordot(Tmap.T, TB.J, axes=(1, 0)), TB.T_basis, tol)
    checks["triple_extension_residual"] = resid
    if resid > 1e-6:
        raise ThmViolationAlarm(f"complete isometry does not extend to a triple isomorphism (residual {resid:.2e})")
    checks["triple_iso"] = triple_iso_check(TA.T_basis, TB.T_basis, theta, tol)
    J1 = TB.J_of(unit_B)
    uJ = TB.J_of(Tmap @ np.asarray(unit_A, dtype=np.complex128))
    uF = J1.conj().T @ uJ
    oneF = J1.conj().T @ J1
    unit_err = max(np.linalg.norm(uF.conj().T @ uF - oneF, 2), np.linalg.norm(uF @ uF.conj().T - oneF, 2))
    checks["unitary_error"] = float(unit_err)
    if unit_err > tol.norm_eps:
        raise StructureViolation(f"T(1) is not unitary (error {unit_err:.2e})")
    Jpi = np.asarray([J1 @ uF.conj().T @ J1.conj().T @ TB.J_of(Tmap[:, k]) for k in range(A.dim)])
    pi_c, res = TB.J_coords(Jpi)
    if res > 1e-7:
        raise StructureViolation("u^{-1} T(A) is not inside B")
    uinv_c, res2 = TB.J_coords((J1 @ uF.conj().T)[None])
    pi = pi_c.T
    u = Tmap @ np.asarray(unit_A, dtype=np.complex128)
    u_mat, uinv_mat = B.element(u), B.element(uinv_c[0])
    pi_imgs = op_images_between(B, pi)
    checks["factorization_error"] = float(max(np.linalg.norm(imgs[k] - u_mat @ pi_imgs[k], 2) for k in range(A.dim)))
    checks["statement_form_error"] = float(max(
        np.linalg.norm(imgs[k] - np.linalg.pinv(uinv_mat) @ pi_imgs[k], 2) for k in range(A.dim)))
    prods = np.einsum("iab,jbc->ijac", A.basis, A.basis).reshape(-1, A.r, A.c)
    pc, _ = coordinates(A.basis, prods)
    lhs = np.tensordot(pc @ pi.T, B.basis, axes=(1, 0))
    rhs = np.einsum("iab,jbc->ijac", pi_imgs, pi_imgs).reshape(-1, B.r, B.c)
    checks["homomorphism_error"] = float(np.max(np.linalg.norm(lhs - rhs, axis=(1, 2))))
    checks["unital_error"] = float(np.linalg.norm(pi @ unit_A - unit_B))
    if check_isometry:
        rep = complete_isometry_defect(A, pi_imgs, seed=seed + 1, tol=tol, restarts=restarts)
        checks["pi_completely_isometric"] = rep.is_complete_isometry
    return BanachStoneResult(u, uinv_c[0], pi, theta, checks)


def op_images_between(B: OperatorSpace, coeff_map) -> np.ndarray:
    """Concrete images in ``B`` of the source basis under a coefficient matrix."""
    return np.tensordot(np.asarray(coeff_map, dtype=np.complex128).T, B.basis, axes=(1, 0))
