"""Completely contractive bilinear actions and the multiplier map they induce.

A bilinear action ``m: Y x X -> X`` that is completely contractive and has an
identity of norm at most one factors as ``m(y, x) = theta(y) x`` with ``theta``
a completely contractive map into the left multipliers of ``X``.  This module
checks the hypotheses numerically, solves for ``theta`` exactly, and uses it to
certify operator-algebra structure of an abstract product.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import TripleEnvelope, complete_isometry_defect, triple_envelope
from .errors import InvalidInput, NotAMultiplier, NotApplicable, ThmViolationAlarm
from .levelopt import optimize_bilinear_ratio
from .matcore import DEFAULT_TOL, Tolerances, coordinates, null_space, operator_norm
from .multiplier import MultiplierAlgebra, adjointable_left, left_multipliers, realize, right_multipliers
from .opspace import LevelElement, OperatorSpace, level_norm

DEFAULT_BILINEAR_RESTARTS = 8


@dataclass(frozen=True, eq=False)
class BilinearAction:
    """``m[a, b, :]`` are the ``X``-coordinates of ``m(y_a, x_b)``.

    ``y_product[a, b, :]``, when given, are the ``Y``-coordinates of ``y_a y_b``.
    """

    Y: OperatorSpace
    X: OperatorSpace
    m: np.ndarray
    identity_coeffs: np.ndarray | None = None
    y_product: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.complex128)
        if m.shape != (self.Y.dim, self.X.dim, self.X.dim):
            raise InvalidInput(f"action tensor must have shape {(self.Y.dim, self.X.dim, self.X.dim)}, got {m.shape}")
        object.__setattr__(self, "m", m)
        if self.identity_coeffs is not None:
            e = np.asarray(self.identity_coeffs, dtype=np.complex128)
            if e.shape != (self.Y.dim,):
                raise InvalidInput("identity coefficients have the wrong length")
            object.__setattr__(self, "identity_coeffs", e)
        if self.y_product is not None:
            object.__setattr__(self, "y_product", np.asarray(self.y_product, dtype=np.complex128))

    def left_operator(self, y) -> np.ndarray:
        """Coefficient matrix of ``x -> m(y, x)``."""
        return np.tensordot(np.asarray(y, dtype=np.complex128), self.m, axes=(0, 0)).T

    def identity_defect(self) -> float:
        if self.identity_coeffs is None:
            return np.inf
        return float(np.linalg.norm(self.left_operator(self.identity_coeffs) - np.eye(self.X.dim)))

    def identity_norm(self) -> float:
        return level_norm(self.Y, LevelElement(self.identity_coeffs[None, None, :]))


@dataclass(frozen=True, eq=False)
class CCVerdict:
    verdict: str  # pass | fail | inconclusive
    max_ratio: float
    level: int
    witness: tuple | None = None  # (y coefficients, x coefficients) at the witnessing level

    def as_dict(self):
        return {"verdict": self.verdict, "max_ratio": self.max_ratio, "level": self.level}


def verify_cc(a: BilinearAction, level_cap: int | None = None, seed: int = 0,
              tol: Tolerances = DEFAULT_TOL, restarts: int = DEFAULT_BILINEAR_RESTARTS) -> CCVerdict:
    """Search for ``||[sum_k m(y_ik, x_kj)]|| > ||y|| ||x||`` over levels up to ``level_cap``."""
    cap = level_cap or max(a.X.dim, a.Y.dim)
    rng = np.random.default_rng(seed)
    fail_at = 1 + 10 * tol.norm_eps
    best = None
    for n in range(1, cap + 1):
        res = optimize_bilinear_ratio(a.m, a.Y.basis, a.X.basis, n, rng, restarts,
                                      stop=lambda v: v > fail_at)
        if best is None or res.ratio > best.ratio:
            best = res
        if best.ratio > fail_at:
            break
    if best.ratio > fail_at:
        return CCVerdict("fail", best.ratio, best.level, (best.y_coeffs, best.x_coeffs))
    if best.ratio > 1 + tol.norm_eps:
        return CCVerdict("inconclusive", best.ratio, best.level, (best.y_coeffs, best.x_coeffs))
    return CCVerdict("pass", best.ratio, best.level)


@dataclass(frozen=True, eq=False)
class OplicationCertificate:
    cc_verdict: CCVerdict
    theta: np.ndarray  # (dim Y, s, s): theta(y_a) inside E(X)
    theta_unital: bool
    theta_homomorphism: bool | None
    module_action: bool | None
    theta_completely_isometric: bool
    adjointable_range: bool
    star_linear: bool | None
    uniqueness_residual: float
    action_residual: float
    multipliers: MultiplierAlgebra = field(repr=False)

    def as_dict(self):
        return {
            "cc_verdict": self.cc_verdict.as_dict(),
            "theta_unital": self.theta_unital,
            "theta_homomorphism": self.theta_homomorphism,
            "module_action": self.module_action,
            "theta_completely_isometric": self.theta_completely_isometric,
            "adjointable_range": self.adjointable_range,
            "star_linear": self.star_linear,
            "uniqueness_residual": self.uniqueness_residual,
            "action_residual": self.action_residual,
        }


def _solve_theta(a: BilinearAction, M: MultiplierAlgebra) -> np.ndarray:
    out = []
    for k in range(a.Y.dim):
        try:
            out.append(realize(M, a.left_operator(np.eye(a.Y.dim)[k])))
        except NotAMultiplier as exc:
            raise ThmViolationAlarm(f"x -> m(y_{k}, x) is not a left multiplier although the action is cc: {exc}")
    return np.asarray(out)


def _rebased(M: MultiplierAlgebra, seed: int) -> MultiplierAlgebra:
    """The same algebra in a reversed, randomly mixed basis (for an independent solve)."""
    rng = np.random.default_rng(seed)
    G = np.eye(M.dim)[::-1] + 0.5 * rng.standard_normal((M.dim, M.dim))
    elems = np.tensordot(G, M.element_basis, axes=(1, 0))
    acts = np.tensordot(G, M.actions, axes=(1, 0))
    return MultiplierAlgebra(M.kind, elems, acts, M.unit_included, M.envelope)


def _y_product(Y: OperatorSpace, tol: Tolerances):
    """Structure constants of ``Y`` if it is concretely closed under products."""
    if Y.r != Y.c:
        return None
    prods = np.einsum("iab,jbc->ijac", Y.basis, Y.basis).reshape(-1, Y.r, Y.c)
    c, res = coordinates(Y.basis, prods)
    if res > 1e-8 * (1 + np.abs(prods).max()):
        return None
    return c.reshape(Y.dim, Y.dim, Y.dim)


def _is_star_closed(Y: OperatorSpace) -> bool:
    if Y.r != Y.c:
        return False
    _, res = coordinates(Y.basis, np.conj(np.transpose(Y.basis, (0, 2, 1))))
    return res <= 1e-8


def derive_theta(a: BilinearAction, T: TripleEnvelope | None = None, seed: int = 0,
                 tol: Tolerances = DEFAULT_TOL, level_cap: int | None = None,
                 restarts: int = DEFAULT_BILINEAR_RESTARTS, cc: CCVerdict | None = None) -> OplicationCertificate:
    """Solve ``m(y, x) = theta(y) x`` for ``theta: Y -> M_l(X)`` and certify its properties."""
    if a.identity_coeffs is None:
        raise InvalidInput("derive_theta needs an identity element in Y")
    if a.identity_defect() > 1e-8 or a.identity_norm() > 1 + tol.rank_eps:
        raise InvalidInput("supplied identity does not act as the identity or has norm > 1")
    cc = cc or verify_cc(a, level_cap, seed, tol, restarts)
    if cc.verdict != "pass":
        raise NotApplicable(f"bilinear action is not certified completely contractive ({cc.verdict})",
                            diagnostics=cc.as_dict())
    T = T or triple_envelope(a.X, seed=seed, tol=tol)
    M = left_multipliers(T, tol)
    theta = _solve_theta(a, M)
    theta2 = _solve_theta(a, _rebased(M, seed))
    uniq = float(np.max(np.abs(theta - theta2)))
    act = max(np.abs(M.action(theta[k]) - a.left_operator(np.eye(a.Y.dim)[k])).max() for k in range(a.Y.dim))

    unit_E = T.E.unit
    t_e = np.tensordot(a.identity_coeffs, theta, axes=(0, 0))
    unital = bool(np.linalg.norm(t_e - unit_E) <= 1e-8)

    yp = a.y_product if a.y_product is not None else _y_product(a.Y, tol)
    hom = mod = None
    if yp is not None:
        lhs = np.einsum("abk,kst->abst", yp, theta)
        rhs = np.einsum("ast,btu->absu", theta, theta)
        hom = bool(np.max(np.abs(lhs - rhs)) <= 1e-8)
        # m(y_a y_b, x) against m(y_a, m(y_b, x))
        m1 = np.einsum("abk,kcz->abcz", yp, a.m)
        m2 = np.einsum("bcw,awz->abcz", a.m, a.m)
        mod = bool(np.max(np.abs(m1 - m2)) <= 1e-8)
        if hom != mod:
            raise ThmViolationAlarm("theta is a homomorphism exactly when m is a module action; numerics disagree")

    rep = complete_isometry_defect(a.Y, theta, seed=seed, tol=tol, check_expansion=True)
    Al = adjointable_left(T, tol)
    adj = all(Al.contains(t, tol) for t in theta)
    star = None
    if _is_star_closed(a.Y):
        ystar, _ = coordinates(a.Y.basis, np.conj(np.transpose(a.Y.basis, (0, 2, 1))))
        lhs = np.tensordot(ystar, theta, axes=(1, 0))
        star = bool(np.max(np.abs(lhs - np.conj(np.transpose(theta, (0, 2, 1))))) <= 1e-8)
    return OplicationCertificate(cc, theta, unital, hom, mod, rep.is_complete_isometry, adj, star, uniq, float(act), M)


def associativity_residual(m) -> float:
    """``max |m(a, m(b, c)) - m(m(a, b), c)|`` over basis triples of an algebra product tensor."""
    m = np.asarray(m, dtype=np.complex128)
    left = np.einsum("bcw,awz->abcz", m, m)
    right = np.einsum("abw,wcz->abcz", m, m)
    return float(np.max(np.abs(left - right)))


@dataclass(frozen=True, eq=False)
class BRSResult:
    certified: bool
    cc_verdict: CCVerdict
    certificate: OplicationCertificate | None
    associative: bool | None
    associativity_residual: float

    def as_dict(self):
        return {
            "certified": self.certified,
            "verdict": "certified operator algebra" if self.certified else "not certified",
            "cc_verdict": self.cc_verdict.as_dict(),
            "associative": self.associative,
            "associativity_residual": self.associativity_residual,
            "theta": None if self.certificate is None else self.certificate.as_dict(),
        }


def _check_two_sided_unit(A: OperatorSpace, m, e):
    L = np.tensordot(e, m, axes=(0, 0)).T
    R = np.tensordot(e, m, axes=(0, 1)).T
    if np.linalg.norm(L - np.eye(A.dim)) > 1e-8 or np.linalg.norm(R - np.eye(A.dim)) > 1e-8:
        raise InvalidInput("e is not a two-sided identity for m")


def brs_certify(A: OperatorSpace, m, e, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                level_cap: int | None = None, restarts: int = DEFAULT_BILINEAR_RESTARTS) -> BRSResult:
    """Certify that ``(A, m, e)`` is an operator algebra: cc product, unit of norm 1, isometric ``theta``."""
    m = np.asarray(m, dtype=np.complex128)
    e = np.asarray(e, dtype=np.complex128)
    _check_two_sided_unit(A, m, e)
    a = BilinearAction(A, A, m, e, y_product=m)
    cc = verify_cc(a, level_cap, seed, tol, restarts)
    resid = associativity_residual(m)
    if cc.verdict != "pass" or a.identity_norm() > 1 + tol.rank_eps:
        return BRSResult(False, cc, None, None, resid)
    cert = derive_theta(a, seed=seed, tol=tol, cc=cc)
    ok = bool(cert.theta_completely_isometric and cert.theta_homomorphism)
    return BRSResult(ok, cc, cert, cert.theta_homomorphism, resid)


@dataclass(frozen=True, eq=False)
class NonassocResult:
    condition_id: int
    steps: list
    associative: bool
    associativity_residual: float
    theta_onto_multipliers: bool

    def as_dict(self):
        return {"condition_id": self.condition_id, "steps": self.steps, "associative": self.associative,
                "associativity_residual": self.associativity_residual,
                "theta_onto_multipliers": self.theta_onto_multipliers}


def _condition(T: TripleEnvelope, g_coeffs, cid: int, tol: Tolerances):
    Jg = T.J_of(g_coeffs)
    if cid == 1:
        M = left_multipliers(T, tol)
        imgs = np.einsum("kab,bc->kac", M.element_basis, Jg).reshape(M.dim, -1)
        ker = null_space(imgs.T, np.sqrt(tol.rank_eps))
        return ker.shape[1] == 0, {"kernel_dim": int(ker.shape[1])}
    if cid == 2:
        u = T.E.unit
        w, v = np.linalg.eigh((u + u.conj().T) / 2)
        V = v[:, w > 0.5]
        lam = float(np.linalg.eigvalsh(V.conj().T @ Jg @ Jg.conj().T @ V)[0])
        return lam > tol.norm_eps, {"min_eigenvalue": lam}
    if cid in (3, 4):
        R = right_multipliers(T, tol)
        imgs = np.einsum("ab,kbc->kac", Jg, R.element_basis)
        s = np.linalg.svd(imgs.reshape(R.dim, -1), compute_uv=False)
        rank = int(np.sum(s > np.sqrt(tol.rank_eps) * max(1.0, s[0])))
        _, res = T.J_coords(imgs)
        return rank == T.J.shape[0] and res <= 1e-7, {"span_dim": rank, "dim": int(T.J.shape[0])}
    raise InvalidInput("condition_id must be 1, 2, 3 or 4")


def nonassoc_brs(A: OperatorSpace, A_alt: OperatorSpace, m, e, condition_id: int = 2, seed: int = 0,
                 tol: Tolerances = DEFAULT_TOL, level_cap: int | None = None,
                 restarts: int = DEFAULT_BILINEAR_RESTARTS) -> NonassocResult:
    """Associativity from a unit, a cc product ``A' x A -> A`` and a nondegeneracy condition on ``e``.

    ``A_alt`` carries the (possibly different) norms of the left factor; its
    basis is indexed like that of ``A``.  Condition 4 is evaluated through the
    equivalent span condition 3.
    """
    m = np.asarray(m, dtype=np.complex128)
    e = np.asarray(e, dtype=np.complex128)
    if A_alt.dim != A.dim:
        raise InvalidInput("A and A' must have the same dimension")
    steps = []
    _check_two_sided_unit(A, m, e)
    steps.append({"step": "unit", "ok": True})
    a = BilinearAction(A_alt, A, m, e)
    cc = verify_cc(a, level_cap, seed, tol, restarts)
    steps.append({"step": "cc", "ok": cc.verdict == "pass", **cc.as_dict()})
    if cc.verdict != "pass":
        raise NotApplicable("the product is not certified completely contractive on A' x A", diagnostics={"steps": steps})
    T = triple_envelope(A, seed=seed, tol=tol)
    ok, diag = _condition(T, e, condition_id, tol)
    steps.append({"step": f"condition {condition_id}", "ok": bool(ok), **diag})
    if not ok:
        raise NotApplicable(f"condition {condition_id} fails for g = e", diagnostics={"steps": steps})
    M = left_multipliers(T, tol)
    theta = _solve_theta(a, M)
    lhs = np.einsum("abk,kst->abst", m, theta)
    rhs = np.einsum("ast,btu->absu", theta, theta)
    hom_res = float(np.max(np.abs(lhs - rhs)))
    resid = associativity_residual(m)
    s = np.linalg.svd(theta.reshape(A.dim, -1), compute_uv=False)
    onto = int(np.sum(s > np.sqrt(tol.rank_eps) * s[0])) == M.dim
    assoc = hom_res <= 1e-8 and resid <= 1e-8
    if not assoc and ok:
        raise ThmViolationAlarm(f"hypotheses hold but m is not associative (residual {max(hom_res, resid):.2e})")
    return NonassocResult(condition_id, steps, assoc, resid, bool(onto))
