"""Optimization over matrix levels of an operator space.

A *family* is a list of blocks, each a stack ``(dim, r_i, c_i)`` of images of
the basis; its level-n norm at coefficients ``C`` (shape ``(n, n, dim)``) is
the max over blocks of the operator norm of the assembled matrix.  Ratios of
two families are optimized by seeded multistart L-BFGS, first on a smoothed
(Schatten-p) surrogate with increasing p, then on the exact objective.

Also here: a quasi-uniform level-1 sphere search and an exact SDP for the
completely bounded norm of a map into a matrix space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

_P_SCHEDULE = (4, 16, 64, None)


def _assemble(C, B):
    n, m = C.shape[0], C.shape[1]
    _, r, c = B.shape
    return np.einsum("ijk,kab->iajb", C, B).reshape(n * r, m * c)


def _weights(M, p):
    """Value and gradient weight matrix ``W`` (``d value = Re <W, dM>``) of one block."""
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    if p is None:
        return s[0], np.outer(u[:, 0], vh[0])
    return s, (u, vh)


def family_value_grad(C, blocks, p=None):
    """Norm (exact for ``p=None``, else Schatten-p smoothed) and its complex gradient in ``C``."""
    n = C.shape[0]
    if p is None:
        best, best_i, best_w = -1.0, 0, None
        for i, B in enumerate(blocks):
            v, w = _weights(_assemble(C, B), None)
            if v > best:
                best, best_i, best_w = v, i, w
        B = blocks[best_i]
        _, r, c = B.shape
        G = np.einsum("iajb,kab->ijk", best_w.reshape(n, r, n, c), B.conj())
        return best, G
    svds = []
    smax = 0.0
    for B in blocks:
        s, uv = _weights(_assemble(C, B), p)
        svds.append((s, uv))
        if s.size:
            smax = max(smax, s[0])
    if smax == 0.0:
        return 0.0, np.zeros_like(C)
    total = sum(np.sum((s / smax) ** (2 * p)) for s, _ in svds)
    value = smax * total ** (1.0 / (2 * p))
    G = np.zeros_like(C)
    scale = total ** ((1.0 - 2 * p) / (2 * p))
    for (s, (u, vh)), B in zip(svds, blocks):
        _, r, c = B.shape
        w = (u * ((s / smax) ** (2 * p - 1))) @ vh * scale
        G += np.einsum("iajb,kab->ijk", w.reshape(n, r, n, c), B.conj())
    return value, G


def family_norm(C, blocks) -> float:
    return max(np.linalg.norm(_assemble(C, B), 2) for B in blocks)


def _pack(C):
    return np.concatenate([C.real.ravel(), C.imag.ravel()])


def _unpack(x, shape):
    k = x.size // 2
    return (x[:k] + 1j * x[k:]).reshape(shape)


@dataclass
class RatioResult:
    ratio: float
    coeffs: np.ndarray | None
    level: int
    restart: int


def _log_ratio_objective(num, den, shape, sign, p):
    def f(x):
        C = _unpack(x, shape)
        vn, gn = family_value_grad(C, num, p)
        vd, gd = family_value_grad(C, den, p)
        if vn <= 0 or vd <= 0:
            tiny = 1e-300
            vn, vd = max(vn, tiny), max(vd, tiny)
        val = sign * (np.log(vn) - np.log(vd))
        G = sign * (gn / vn - gd / vd)
        return val, np.concatenate([G.real.ravel(), G.imag.ravel()])

    return f


def exact_ratio(C, num, den) -> float:
    d = family_norm(C, den)
    if d == 0:
        return np.inf
    return family_norm(C, num) / d


def optimize_ratio(
    num,
    den,
    level: int,
    rng: np.random.Generator,
    restarts: int = 64,
    maximize: bool = False,
    starts=(),
    stop=None,
    maxiter: int = 300,
):
    """Multistart search for the min (or max) of ``|num_n(x)| / |den_n(x)|`` at level ``n``.

    ``stop(ratio) -> bool`` ends the search early once a decisive value is found.
    Restart results are reduced by (value, restart index) so the outcome does
    not depend on evaluation order.
    """
    d = num[0].shape[0]
    shape = (level, level, d)
    sign = -1.0 if maximize else 1.0
    best = RatioResult(np.inf if not maximize else -np.inf, None, level, -1)

    def better(a, b):
        return a < b if not maximize else a > b

    start_list = [np.asarray(s, dtype=np.complex128) for s in starts]
    for k in range(restarts + len(start_list)):
        if k < len(start_list):
            C0 = start_list[k]
            C0 = C0 + 1e-3 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        else:
            C0 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        x = _pack(C0)
        local_best = (exact_ratio(C0, num, den), C0)
        for p in _P_SCHEDULE:
            fun = _log_ratio_objective(num, den, shape, sign, p)
            try:
                res = minimize(fun, x, jac=True, method="L-BFGS-B",
                               options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
                x = res.x
            except (FloatingPointError, np.linalg.LinAlgError):
                break
            nrm = np.linalg.norm(x)
            if nrm > 0:
                x = x / nrm
            C = _unpack(x, shape)
            val = exact_ratio(C, num, den)
            if np.isfinite(val) and better(val, local_best[0]):
                local_best = (val, C)
        if better(local_best[0], best.ratio):
            best = RatioResult(float(local_best[0]), local_best[1], level, k)
        if stop is not None and stop(best.ratio):
            break
    return best


def sphere_points(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors in ``C^dim`` (scrambled Sobol mapped through Gaussians)."""
    m = int(np.ceil(np.log2(max(count, 2))))
    sob = qmc.Sobol(d=2 * dim, scramble=True, seed=seed).random_base2(m)
    sob = np.clip(sob, 1e-12, 1 - 1e-12)
    from scipy.special import ndtri

    g = ndtri(sob)
    z = g[:, :dim] + 1j * g[:, dim:]
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z


def level1_grid_ratio(num, den, count: int = 1 << 14, seed: int = 0, maximize: bool = False):
    """Dense level-1 search; returns ``(best_ratio, best_coefficients)``."""
    d = num[0].shape[0]
    z = sphere_points(d, count, seed)

    def norms(blocks):
        out = np.zeros(z.shape[0])
        groups = {}
        for B in blocks:
            groups.setdefault(B.shape[1:], []).append(B)
        for shape, bs in groups.items():
            mats = np.tensordot(z, np.stack(bs, axis=1), axes=(1, 0))  # (points, blocks, r, c)
            if shape == (1, 1):
                vals = np.abs(mats[..., 0, 0])
            else:
                vals = np.linalg.svd(mats, compute_uv=False)[..., 0]
            out = np.maximum(out, vals.max(axis=1))
        return out

    nn, dd = norms(num), norms(den)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dd > 0, nn / dd, np.inf if not maximize else -np.inf)
    i = int(np.argmax(ratio) if maximize else np.argmin(ratio))
    return float(ratio[i]), z[i]


def cb_norm_sdp(src_basis, images, solver: str = "CLARABEL") -> float:
    """Exact completely bounded norm of ``src_basis[k] -> images[k]`` by semidefinite programming.

    Writes ``||phi||_cb <= 1/s`` as existence of a completely positive map on
    ``M_{r+c}`` that sends the two diagonal projections to the corresponding
    target projections and ``corner(b_k)`` to ``s corner(phi(b_k))``; by the
    off-diagonal (Paulsen) trick and Arveson extension this is exact.
    """
    import cvxpy as cp

    src = np.asarray(src_basis, dtype=np.complex128)
    img = np.asarray(images, dtype=np.complex128)
    if np.allclose(img, 0):
        return 0.0
    _, r, c = src.shape
    _, rp, cp_ = img.shape
    N, m = r + c, rp + cp_
    C = cp.Variable((N * m, N * m), hermitian=True)
    s = cp.Variable()

    def blk(i, j):
        return C[i * m:(i + 1) * m, j * m:(j + 1) * m]

    ph = np.zeros((m, m))
    ph[:rp, :rp] = np.eye(rp)
    pk = np.zeros((m, m))
    pk[rp:, rp:] = np.eye(cp_)
    cons = [C >> 0,
            sum(blk(i, i) for i in range(r)) == ph,
            sum(blk(i, i) for i in range(r, N)) == pk]
    for b, phib in zip(src, img):
        expr = 0
        for i in range(r):
            for j in range(c):
                if b[i, j] != 0:
                    expr = expr + b[i, j] * blk(i, r + j)
        target = np.zeros((m, m), dtype=np.complex128)
        target[:rp, rp:] = phib
        cons.append(expr == s * target)
    prob = cp.Problem(cp.Maximize(s), cons)
    prob.solve(solver=solver)
    if s.value is None or s.value <= 0:
        raise RuntimeError(f"cb-norm SDP failed: {prob.status}")
    return float(1.0 / s.value)


def _bilinear_coeffs(Yc, Xc, m):
    return np.einsum("ika,kjb,abz->ijz", Yc, Xc, m)


def bilinear_value_grad(Yc, Xc, m, Yb, Xb, p=None):
    """Log of ``||[sum_k m(y_ik, x_kj)]|| / (||y|| ||x||)`` and its gradients in ``Yc``, ``Xc``."""
    K = _bilinear_coeffs(Yc, Xc, m)
    vk, gk = family_value_grad(K, [Xb], p)
    vy, gy = family_value_grad(Yc, [Yb], p)
    vx, gx = family_value_grad(Xc, [Xb], p)
    tiny = 1e-300
    vk, vy, vx = max(vk, tiny), max(vy, tiny), max(vx, tiny)
    GY = np.einsum("ijz,kjb,abz->ika", gk, Xc.conj(), m.conj())
    GX = np.einsum("ijz,ika,abz->kjb", gk, Yc.conj(), m.conj())
    val = np.log(vk) - np.log(vy) - np.log(vx)
    return val, GY / vk - gy / vy, GX / vk - gx / vx


def bilinear_ratio(Yc, Xc, m, Yb, Xb) -> float:
    ny, nx = family_norm(Yc, [Yb]), family_norm(Xc, [Xb])
    if ny == 0 or nx == 0:
        return 0.0
    return family_norm(_bilinear_coeffs(Yc, Xc, m), [Xb]) / (ny * nx)


@dataclass
class BilinearResult:
    ratio: float
    y_coeffs: np.ndarray | None
    x_coeffs: np.ndarray | None
    level: int


def optimize_bilinear_ratio(m, Yb, Xb, level: int, rng: np.random.Generator, restarts: int = 16,
                            stop=None, maxiter: int = 300) -> BilinearResult:
    """Multistart maximization of the bilinear ratio at level ``n``.

    ``m[a, b, :]`` holds the ``Xb``-coordinates of ``m(y_a, x_b)``.
    """
    m = np.asarray(m, dtype=np.complex128)
    dy, dx = Yb.shape[0], Xb.shape[0]
    sy, sx = (level, level, dy), (level, level, dx)
    ny = level * level * dy
    best = BilinearResult(-np.inf, None, None, level)

    def split(x):
        C = _unpack(x, (ny + level * level * dx,))
        return C[:ny].reshape(sy), C[ny:].reshape(sx)

    for k in range(restarts):
        Y0 = rng.standard_normal(sy) + 1j * rng.standard_normal(sy)
        X0 = rng.standard_normal(sx) + 1j * rng.standard_normal(sx)
        x = _pack(np.concatenate([Y0.ravel(), X0.ravel()]))
        local = (bilinear_ratio(Y0, X0, m, Yb, Xb), Y0, X0)
        for p in _P_SCHEDULE:
            def f(v, p=p):
                Yc, Xc = split(v)
                val, GY, GX = bilinear_value_grad(Yc, Xc, m, Yb, Xb, p)
                G = np.concatenate([GY.ravel(), GX.ravel()])
                return -val, -np.concatenate([G.real, G.imag])
            try:
                res = minimize(f, x, jac=True, method="L-BFGS-B",
                               options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
                x = res.x / max(np.linalg.norm(res.x), 1e-300)
            except (FloatingPointError, np.linalg.LinAlgError):
                break
            Yc, Xc = split(x)
            val = bilinear_ratio(Yc, Xc, m, Yb, Xb)
            if np.isfinite(val) and val > local[0]:
                local = (val, Yc, Xc)
        if local[0] > best.ratio:
            best = BilinearResult(float(local[0]), local[1], local[2], level)
        if stop is not None and stop(best.ratio):
            break
    return best
