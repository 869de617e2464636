"""Triple envelope (noncommutative Shilov boundary) of a concrete operator space.

Pipeline: the C*-algebra ``L`` generated by the 1-2 corner copy of ``X`` in
``M_{r+c}`` is split into central blocks; a block belongs to the Shilov ideal
when killing it keeps the corner embedding completely isometric.  The envelope
is realized as the surviving central summand ``z L`` inside ``M_{r+c}``, so
``J(x) = z_p x z_q`` is written in the original coordinates of ``X``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GreedyBoundaryWarning, InconclusiveVerdict, InvalidInput, ThmViolationAlarm
from .levelopt import level1_grid_ratio, optimize_ratio
from .matcore import DEFAULT_TOL, Tolerances, coordinates, extend_orthonormal, range_basis
from .opspace import LevelElement, OperatorSpace, column_amplification, corner, direct_sum
from .staralg import (
    MAX_AMBIENT,
    BlockDecomposition,
    BlockIdeal,
    StarAlgebra,
    generate,
    quotient_by,
    wedderburn,
)

DEFAULT_RESTARTS = 64
GRID_MAX_DIM = 3


@dataclass(frozen=True, eq=False)
class LinkingAlgebra:
    L: StarAlgebra
    D: BlockDecomposition
    p: np.ndarray
    q: np.ndarray
    r: int
    c: int
    corner_images: np.ndarray  # (dim X, r+c, r+c)
    block_images: tuple  # per block: (dim X, r_i, c_i) compact corner realization

    def corner_embed(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.corner_images, axes=(0, 0))

    @property
    def block_corner_shapes(self):
        return [b.shape[1:] for b in self.block_images]


@dataclass(frozen=True, eq=False)
class IsometryReport:
    is_complete_isometry: bool
    defect: float
    witness: LevelElement | None
    levels_checked: int
    verdict: str  # "isometric" | "not" | "inconclusive"
    expansion: float | None = None

    def as_dict(self):
        return {
            "is_complete_isometry": self.is_complete_isometry,
            "defect": self.defect,
            "verdict": self.verdict,
            "levels_checked": self.levels_checked,
            "expansion": self.expansion,
            "witness_level": None if self.witness is None else self.witness.n,
        }


def linking_algebra(X: OperatorSpace, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                    max_ambient: int = MAX_AMBIENT) -> LinkingAlgebra:
    r, c = X.r, X.c
    N = r + c
    corners = np.asarray([corner(b) for b in X.basis])
    L = generate(N, corners, tol, max_ambient=max_ambient)
    D = wedderburn(L, seed=seed, tol=tol)
    P11 = np.zeros((N, N), dtype=np.complex128)
    P11[:r, :r] = np.eye(r)
    p = P11 @ L.unit
    q = L.unit - p
    blocks = []
    for blk in D.blocks:
        Wp = range_basis(blk.image(p), 1e-6)
        Wq = range_basis(blk.image(q), 1e-6)
        imgs = np.asarray([Wp.conj().T @ blk.image(cb) @ Wq for cb in corners])
        blocks.append(imgs)
    return LinkingAlgebra(L, D, p, q, r, c, corners, tuple(blocks))


def _classify(defect: float, tol: Tolerances) -> str:
    if defect <= tol.norm_eps:
        return "isometric"
    if defect > 10 * tol.norm_eps:
        return "not"
    return "inconclusive"


def _min_ratio_search(num, den, cap, rng, restarts, tol, grid=True):
    """Min of ``|num_n(x)|/|den_n(x)|`` over levels ``1..cap``; stops early at a decisive witness."""
    d = num[0].shape[0]
    decisive = 1 - 10 * tol.norm_eps
    best_ratio, best_C, levels = np.inf, None, 0
    if grid and d <= GRID_MAX_DIM:
        g, z = level1_grid_ratio(num, den, seed=int(rng.integers(1 << 31)))
        if g < best_ratio:
            best_ratio, best_C = g, z.reshape(1, 1, d)
    for n in range(1, cap + 1):
        levels = n
        if best_ratio < decisive:
            break
        starts = []
        if best_C is not None:
            pad = np.zeros((n, n, d), dtype=np.complex128)
            m = best_C.shape[0]
            pad[:m, :m] = best_C
            starts.append(pad)
        res = optimize_ratio(num, den, n, rng, restarts=restarts, starts=starts,
                             stop=lambda v: v < decisive)
        if res.ratio < best_ratio:
            best_ratio, best_C = res.ratio, res.coeffs
    return best_ratio, best_C, levels


def complete_isometry_defect(X: OperatorSpace, map_images, level_cap: int | None = None, seed: int = 0,
                             tol: Tolerances = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS,
                             check_expansion: bool = True) -> IsometryReport:
    """Estimate how far ``phi: b_k -> map_images[k]`` is from a complete isometry.

    ``defect = 1 - min ||phi_n(x)||`` over unit-norm ``x`` in ``M_n(X)``.  The
    default level cap is ``max(r, c, r', c')``, which suffices because norms of
    maps into ``M_{p x q}`` are attained at level ``max(p, q)``.
    """
    imgs = np.asarray(map_images, dtype=np.complex128)
    if imgs.ndim != 3 or imgs.shape[0] != X.dim:
        raise InvalidInput("map_images must be a stack with one image per basis element")
    if level_cap is None:
        level_cap = max(X.r, X.c, imgs.shape[1], imgs.shape[2])
    if level_cap < 1:
        raise InvalidInput("level_cap must be >= 1")
    rng = np.random.default_rng(seed)
    if np.allclose(imgs, 0, atol=tol.rank_eps):
        w = np.zeros((1, 1, X.dim), dtype=np.complex128)
        w[0, 0, 0] = 1 / np.linalg.norm(X.basis[0], 2)
        return IsometryReport(False, 1.0, LevelElement(w), 1, "not", 0.0 if check_expansion else None)
    num, den = [imgs], [np.asarray(X.basis)]
    ratio, C, levels = _min_ratio_search(num, den, level_cap, rng, restarts, tol)
    defect = float(1 - ratio)
    expansion = None
    if check_expansion:
        emax = -np.inf
        if X.dim <= GRID_MAX_DIM:
            emax, _ = level1_grid_ratio(num, den, seed=seed, maximize=True)
        for n in range(1, level_cap + 1):
            res = optimize_ratio(num, den, n, rng, restarts=max(4, restarts // 4), maximize=True,
                                 stop=lambda v: v > 1 + 10 * tol.norm_eps)
            emax = max(emax, res.ratio)
            if emax > 1 + 10 * tol.norm_eps:
                break
        expansion = float(emax - 1)
    verdict = _classify(defect, tol)
    if expansion is not None and verdict == "isometric":
        verdict = _classify(max(expansion, 0.0), tol)
    ok = verdict == "isometric"
    witness = None if ok else _witness(C, X.dim)
    return IsometryReport(ok, defect, witness, levels, verdict, expansion)


def _witness(C, d):
    if C is None:
        w = np.zeros((1, 1, d), dtype=np.complex128)
        w[0, 0, 0] = 1
        return LevelElement(w)
    return LevelElement(np.asarray(C))


def quotient_defect(Lk: LinkingAlgebra, ideal, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                    restarts: int = DEFAULT_RESTARTS, level_cap: int | None = None) -> IsometryReport:
    """Complete-isometry test of ``X -> L -> L/I`` for the block ideal ``I``.

    Only the killed blocks can carry extra norm, so the test minimizes
    ``max_kept ||x_i||_n / max_killed ||x_j||_n``; the level cap defaults to the
    largest corner size among killed blocks.
    """
    killed = sorted(ideal)
    if not killed:
        return IsometryReport(True, 0.0, None, 0, "isometric", 0.0)
    kept = [i for i in range(len(Lk.D)) if i not in set(killed)]
    d = Lk.corner_images.shape[0]
    if not kept:
        return IsometryReport(False, 1.0, _witness(None, d), 0, "not", 0.0)
    num = [Lk.block_images[i] for i in kept]
    den = [Lk.block_images[j] for j in killed]
    cap = max(max(Lk.block_images[j].shape[1:]) for j in killed)
    if level_cap is not None:
        cap = min(cap, level_cap) if level_cap > 0 else cap
    rng = np.random.default_rng([seed] + killed)
    ratio, C, levels = _min_ratio_search(num, den, cap, rng, restarts, tol)
    defect = float(max(0.0, 1 - ratio))
    verdict = _classify(defect, tol)
    ok = verdict == "isometric"
    return IsometryReport(ok, defect, None if ok else _witness(C, d), levels, verdict, 0.0)


@dataclass(frozen=True, eq=False)
class BoundarySearch:
    ideal: BlockIdeal
    per_block: dict
    union_report: IsometryReport
    greedy: bool
    warnings: tuple = ()


def _require_decisive(rep: IsometryReport, what: str):
    if rep.verdict == "inconclusive":
        raise InconclusiveVerdict(f"{what}: defect {rep.defect:.3e} is within the inconclusive band")


def boundary_search(Lk: LinkingAlgebra, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                    restarts: int = DEFAULT_RESTARTS, level_cap: int | None = None) -> BoundarySearch:
    nb = len(Lk.D)
    per_block = {}
    chosen = []
    for b in range(nb):
        rep = quotient_defect(Lk, [b], seed, tol, restarts, level_cap)
        _require_decisive(rep, f"block {b}")
        per_block[b] = rep
        if rep.is_complete_isometry:
            chosen.append(b)
    union = quotient_defect(Lk, chosen, seed, tol, restarts, level_cap)
    _require_decisive(union, "union of boundary blocks")
    if union.is_complete_isometry:
        return BoundarySearch(BlockIdeal.of(chosen), per_block, union, False)
    # numerically marginal case: move blocks back to the kept side in canonical order
    killed = list(chosen)
    for b in sorted(chosen):
        killed.remove(b)
        union = quotient_defect(Lk, killed, seed, tol, restarts, level_cap)
        _require_decisive(union, "greedy boundary ideal")
        if union.is_complete_isometry:
            break
    msg = "per-block union was not a boundary ideal; returning a maximal boundary ideal found greedily"
    warnings.warn(msg, GreedyBoundaryWarning, stacklevel=2)
    return BoundarySearch(BlockIdeal.of(killed), per_block, union, True, (msg,))


def boundary_blocks(Lk: LinkingAlgebra, X: OperatorSpace | None = None, seed: int = 0,
                    tol: Tolerances = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS,
                    level_cap: int | None = None) -> BlockIdeal:
    return boundary_search(Lk, seed, tol, restarts, level_cap).ideal


def exhaustive_boundary_ideal(Lk: LinkingAlgebra, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                              restarts: int = DEFAULT_RESTARTS):
    """Largest block subset whose quotient is completely isometric on ``X`` (all subsets tried).

    Returns ``(ideal, table)`` where ``table`` maps each subset to its verdict.
    """
    nb = len(Lk.D)
    table = {}
    for k in range(nb + 1):
        for sub in itertools.combinations(range(nb), k):
            rep = quotient_defect(Lk, list(sub), seed, tol, restarts)
            _require_decisive(rep, f"subset {sub}")
            table[sub] = rep.is_complete_isometry
    good = [s for s, ok in table.items() if ok]
    top = max(len(s) for s in good)
    largest = [s for s in good if len(s) == top]
    if len(largest) != 1:
        raise ThmViolationAlarm(f"no unique largest boundary ideal: {largest}")
    return BlockIdeal.of(largest[0]), table


def _corner_algebra(mats, tol) -> StarAlgebra:
    mats = np.asarray(mats, dtype=np.complex128)
    n = mats.shape[1]
    q, _ = extend_orthonormal(None, mats, tol.rank_eps)
    basis = q.reshape(-1, n, n) if q is not None else np.zeros((0, n, n), dtype=np.complex128)
    basis.setflags(write=False)
    return basis


@dataclass(frozen=True, eq=False)
class TripleEnvelope:
    source: OperatorSpace
    linking: LinkingAlgebra
    shilov_ideal: BlockIdeal
    kept_blocks: tuple
    central_support: np.ndarray  # z: sum of kept central projections in M_{r+c}
    quotient: StarAlgebra  # z L, a faithful copy of C*(boundary of X)
    J: np.ndarray  # (dim X, r, c)
    E: StarAlgebra  # 1-1 corner, inside M_r
    F: StarAlgebra  # 2-2 corner, inside M_c
    T_basis: np.ndarray  # orthonormal basis of the 1-2 corner
    search: BoundarySearch = field(repr=False)
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    @property
    def dim(self) -> int:
        return self.T_basis.shape[0]

    @property
    def block_sizes(self):
        return [self.linking.D.blocks[i].block_dim for i in self.kept_blocks]

    def J_of(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.J, axes=(0, 0))

    def J_coords(self, mats):
        """Coordinates in the ``J``-image of the basis of ``X``; returns ``(coeffs, residual)``."""
        return coordinates(self.J, mats)

    def T_coords(self, mats):
        return coordinates(self.T_basis, mats)

    def inner(self, x, y) -> np.ndarray:
        """``F``-valued inner product ``J(x)^* J(y)`` of coefficient vectors."""
        return self.J_of(x).conj().T @ self.J_of(y)


def _star_algebra_from(basis, N, unit) -> StarAlgebra:
    return StarAlgebra(N, basis, unit, basis)


def triple_envelope(X: OperatorSpace, seed: int = 0, tol: Tolerances = DEFAULT_TOL,
                    restarts: int = DEFAULT_RESTARTS, level_cap: int | None = None,
                    max_ambient: int = MAX_AMBIENT, check: bool = True) -> TripleEnvelope:
    Lk = linking_algebra(X, seed, tol, max_ambient)
    search = boundary_search(Lk, seed, tol, restarts, level_cap)
    ideal = search.ideal
    kept = tuple(i for i in range(len(Lk.D)) if i not in ideal.block_indices)
    N, r = Lk.L.ambient, X.r
    z = sum((Lk.D.blocks[i].central_projection for i in kept), np.zeros((N, N), dtype=np.complex128))
    zL = z @ Lk.L.spanning_basis
    qbasis = _corner_algebra(zL, tol)
    quotient = StarAlgebra(N, qbasis, z @ Lk.L.unit, z @ Lk.L.generators)
    J = (z @ Lk.corner_images)[:, :r, r:]
    T_basis = _rect_span(zL[:, :r, r:], tol)
    Eb = _corner_algebra(zL[:, :r, :r], tol)
    Fb = _corner_algebra(zL[:, r:, r:], tol)
    unit = z @ Lk.L.unit
    E = _star_algebra_from(Eb, r, unit[:r, :r])
    F = _star_algebra_from(Fb, X.c, unit[r:, r:])
    T = TripleEnvelope(X, Lk, ideal, kept, z, quotient, J, E, F, T_basis, search, tol)
    if check:
        _check_envelope(T, tol)
    return T


def _rect_span(mats, tol):
    mats = np.asarray(mats, dtype=np.complex128)
    q, _ = extend_orthonormal(None, mats, tol.rank_eps)
    out = q.reshape((-1,) + mats.shape[1:])
    out.setflags(write=False)
    return out


_EXHAUSTIVE_CHECK_DIM = 16


def _check_envelope(T: TripleEnvelope, tol: Tolerances):
    tb = T.T_basis
    if tb.shape[0] <= _EXHAUSTIVE_CHECK_DIM:
        prods = np.einsum("iab,jcb,kcd->ijkad", tb, tb.conj(), tb).reshape(-1, *tb.shape[1:])
    else:
        # large spans: seeded random triples, since all basis triples do not fit in memory
        rng = np.random.default_rng(0)
        w = rng.standard_normal((3, 16, tb.shape[0])) + 1j * rng.standard_normal((3, 16, tb.shape[0]))
        x, y, z = (np.tensordot(wi, tb, axes=(1, 0)) for wi in w)
        prods = x @ np.conj(np.transpose(y, (0, 2, 1))) @ z
    _, res = T.T_coords(prods)
    if res > 1e-7 * (1 + np.max(np.abs(prods))):
        raise ThmViolationAlarm(f"T(X) is not closed under the triple product (residual {res:.2e})")
    if tb.shape[0] > _EXHAUSTIVE_CHECK_DIM:
        # z C*(S) = C*(zS) for central z, so regeneration only guards small cases against drift
        return
    regen = generate(T.linking.L.ambient, np.asarray([corner(j) for j in T.J]), tol,
                     max_ambient=max(T.linking.L.ambient, MAX_AMBIENT))
    if regen.dim != T.quotient.dim:
        raise ThmViolationAlarm(f"J(X) generates dim {regen.dim}, quotient has dim {T.quotient.dim}")


def abstract_quotient(T: TripleEnvelope, tol: Tolerances = DEFAULT_TOL):
    """``L / I`` as the direct sum of the kept abstract blocks, with the quotient map."""
    return quotient_by(T.linking.L, T.linking.D, T.shilov_ideal, tol)


def env_check(T: TripleEnvelope, tol: Tolerances | None = None):
    """Does the unit of ``E`` (resp. ``F``) act as the identity on ``T(X)`` from the left (right)?"""
    tol = tol or T.tol
    eu, fu = T.E.unit, T.F.unit
    left = all(np.linalg.norm(eu @ t - t) <= tol.rank_eps * (1 + np.linalg.norm(t)) * 10 for t in T.T_basis)
    right = all(np.linalg.norm(t @ fu - t) <= tol.rank_eps * (1 + np.linalg.norm(t)) * 10 for t in T.T_basis)
    return left, right


def triple_iso_check(T_basis1, T_basis2, phi, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Does the coefficient map ``phi`` (column i = coordinates of phi(t_i)) preserve ``x y^* z``?"""
    t1 = np.asarray(T_basis1, dtype=np.complex128)
    t2 = np.asarray(T_basis2, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    if phi.shape != (t2.shape[0], t1.shape[0]):
        raise InvalidInput(f"phi has shape {phi.shape}, expected {(t2.shape[0], t1.shape[0])}")
    s = np.linalg.svd(phi, compute_uv=False)
    if phi.shape[0] != phi.shape[1] or s[-1] <= tol.rank_eps * max(1.0, s[0]):
        raise InvalidInput("phi is not a bijection between the spans")
    img = np.tensordot(phi.T, t2, axes=(1, 0))  # img[i] = phi(t_i)
    lhs_src = np.einsum("iab,jcb,kcd->ijkad", t1, t1.conj(), t1).reshape(-1, *t1.shape[1:])
    coef, res = coordinates(t1, lhs_src)
    if res > tol.norm_eps:
        return False
    lhs = np.tensordot(coef, img, axes=(1, 0))
    rhs = np.einsum("iab,jcb,kcd->ijkad", img, img.conj(), img).reshape(-1, *t2.shape[1:])
    n1 = np.linalg.norm(t1, ord=2, axis=(1, 2))
    scale = 1 + np.einsum("i,j,k->ijk", n1, n1, n1).reshape(-1)
    err = np.linalg.norm(lhs - rhs, ord=2, axis=(1, 2))
    return bool(np.all(err <= tol.norm_eps * scale))


def extend_to_triple_map(T: TripleEnvelope, target_images, target_basis, tol: Tolerances = DEFAULT_TOL):
    """Extend ``J(b_k) -> target_images[k]`` to the ternary ring generated by ``J(X)``.

    Returns ``(phi, residual)``: ``phi`` is the coefficient matrix from
    ``T.T_basis`` to ``target_basis`` and ``residual`` the worst inconsistency
    over all generated words (large when no triple morphism extends the map).
    """
    src_gen = np.asarray(T.J)
    tgt_gen = np.asarray(target_images, dtype=np.complex128)
    acc_s, acc_t = [], []
    all_s, all_t = [], []
    q = None

    def consider(s, t):
        nonlocal q
        all_s.append(s)
        all_t.append(t)
        q2, added = extend_orthonormal(q, s[None], tol.rank_eps * 100)
        if added:
            q = q2
            acc_s.append(s)
            acc_t.append(t)
            return True
        return False

    frontier = [(s, t) for s, t in zip(src_gen, tgt_gen) if consider(s, t)]
    # right factors J(b_i)^* J(b_j) turn odd words into longer odd words
    cs, ct = src_gen.shape[2], tgt_gen.shape[2]
    pair_s = np.einsum("iab,jac->ijbc", src_gen.conj(), src_gen).reshape(-1, cs, cs)
    pair_t = np.einsum("iab,jac->ijbc", tgt_gen.conj(), tgt_gen).reshape(-1, ct, ct)
    while frontier:
        new = []
        for s, t in frontier:
            for ps, pt in zip(pair_s, pair_t):
                if consider(s @ ps, t @ pt):
                    new.append((s @ ps, t @ pt))
        frontier = new
    S, _ = T.T_coords(np.asarray(acc_s))
    Tt, res_t = coordinates(target_basis, np.asarray(acc_t))
    if S.shape[0] != T.dim:
        raise ThmViolationAlarm("words in J(X) do not span T(X)")
    phi = np.linalg.solve(S, Tt).T
    allS, _ = T.T_coords(np.asarray(all_s))
    pred = np.tensordot(allS @ phi.T, np.asarray(target_basis), axes=(1, 0))
    resid = float(np.max(np.linalg.norm(pred - np.asarray(all_t), axis=(1, 2))))
    return phi, max(resid, res_t)


def _block_diag(a, b):
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=np.complex128)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def _iso_to(T: TripleEnvelope, targets, target_basis, tol):
    target_basis = np.asarray(target_basis)
    if target_basis.shape[0] != T.dim:
        return False, np.inf
    phi, resid = extend_to_triple_map(T, targets, target_basis, tol)
    try:
        ok = triple_iso_check(T.T_basis, target_basis, phi, tol)
    except InvalidInput:
        return False, resid
    return bool(ok and resid <= tol.norm_eps), resid


def direct_sum_envelope_check(X: OperatorSpace, Y: OperatorSpace, seed: int = 0,
                              tol: Tolerances = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS):
    """Is ``T(X + Y)`` triple-isomorphic to ``T(X) + T(Y)`` via the natural map?  Returns ``(flag, residual)``."""
    TS = triple_envelope(direct_sum(X, Y), seed, tol, restarts)
    TX = triple_envelope(X, seed, tol, restarts)
    TY = triple_envelope(Y, seed, tol, restarts)
    zx = np.zeros(TX.J.shape[1:], dtype=np.complex128)
    zy = np.zeros(TY.J.shape[1:], dtype=np.complex128)
    targets = [_block_diag(j, zy) for j in TX.J] + [_block_diag(zx, j) for j in TY.J]
    basis = [_block_diag(t, zy) for t in TX.T_basis] + [_block_diag(zx, t) for t in TY.T_basis]
    return _iso_to(TS, np.asarray(targets), basis, tol)


def column_envelope_check(X: OperatorSpace, n: int = 2, seed: int = 0,
                          tol: Tolerances = DEFAULT_TOL, restarts: int = DEFAULT_RESTARTS):
    """Is ``T(C_n(X))`` triple-isomorphic to ``C_n(T(X))``?  Returns ``(flag, residual)``."""
    TC = triple_envelope(column_amplification(X, n), seed, tol, restarts)
    TX = triple_envelope(X, seed, tol, restarts)
    E = np.eye(n)[:, :, None]
    targets = [np.kron(E[i], j) for i in range(n) for j in TX.J]
    basis = [np.kron(E[i], t) for i in range(n) for t in TX.T_basis]
    return _iso_to(TC, np.asarray(targets), basis, tol)
