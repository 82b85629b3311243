"""Exact cell integrals of exponentials and Gaussians against the local interpolant.

All integrals are expressed in the local cell coordinate u = (y - z_j) / h_j in
[0, 1].  The kernels used by the solver (heat kernels of width sqrt(nu t) and
exponentials e^{-mu y}) are frequently much narrower than a grid cell, so
sampling them at the nodes is not an option.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np
from scipy import sparse, special

from .grid import INTERP_POINTS, ZGrid

_SERIES_TERMS = 34
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def exp_moments(q: np.ndarray, kmax: int = INTERP_POINTS - 1) -> np.ndarray:
    """J_k(q) = int_0^1 u^k e^{-q u} du for k = 0..kmax; result shape q.shape + (kmax+1,)."""
    q = np.asarray(q)
    dtype = np.result_type(q, float)
    out = np.empty(q.shape + (kmax + 1,), dtype=dtype)
    small = np.abs(q) < 2.0
    qs = q[small]
    if qs.size:
        n = np.arange(_SERIES_TERMS)
        inv_fact = np.array([1.0 / factorial(int(i)) for i in n])
        powers = (-qs[..., None]) ** n * inv_fact
        for k in range(kmax + 1):
            out[small, k] = (powers / (n + k + 1)).sum(axis=-1)
    ql = q[~small]
    if ql.size:
        e = np.exp(-ql)
        j = -np.expm1(-ql) / ql
        out[~small, 0] = j
        for k in range(1, kmax + 1):
            j = (k * j - e) / ql
            out[~small, k] = j
    return out


def reversed_moments(J: np.ndarray) -> np.ndarray:
    """int_0^1 u^k e^{-q(1-u)} du from the forward moments J_m(q)."""
    kmax = J.shape[-1] - 1
    out = np.zeros_like(J)
    for k in range(kmax + 1):
        for m in range(k + 1):
            out[..., k] += comb(k, m) * (-1) ** m * J[..., m]
    return out


@lru_cache(maxsize=512)
def _cell_exp_basis(grid: ZGrid, kappa: float, reverse: bool) -> np.ndarray:
    h = np.diff(grid.nodes)
    J = exp_moments(kappa * h)
    if reverse:
        J = reversed_moments(J)
    return np.einsum("cbk,ck->cb", grid.interp_cell_coefficients, J) * h[:, None]


def cell_exp_integrals(grid: ZGrid, f: np.ndarray, kappa, reverse: bool = False) -> np.ndarray:
    """Per-cell integral of e^{-kappa (y - z_j)} p(y) (or e^{-kappa (z_{j+1} - y)} if reverse),
    where p is the local interpolant of f; kappa is a real scalar."""
    bm = _cell_exp_basis(grid, float(kappa), bool(reverse))
    idx = grid.interp_starts[:, None] + np.arange(INTERP_POINTS)[None, :]
    return np.einsum("...cb,cb->...c", f[..., idx], bm)


def scatter_cell_basis(grid: ZGrid, cellw: np.ndarray) -> np.ndarray:
    """Sum per-(cell, basis) weights, shape (..., cells, basis), into node weights (..., n)."""
    ncell = grid.n - 1
    m = INTERP_POINTS
    cols = (grid.interp_starts[:, None] + np.arange(m)[None, :]).ravel()
    S = sparse.csr_matrix((np.ones(m * ncell), (np.arange(m * ncell), cols)), shape=(m * ncell, grid.n))
    lead = cellw.shape[:-2]
    flat = cellw.reshape(-1, m * ncell)
    return np.asarray((S.T @ flat.T).T).reshape(lead + (grid.n,))


def exp_node_weights(grid: ZGrid, kappa: np.ndarray) -> np.ndarray:
    """Node weights V[k, j] with sum_j V[k,j] f_j = int_0^L e^{-kappa_k y} p(y) dy."""
    kappa = np.atleast_1d(kappa)
    z = grid.nodes
    h = np.diff(z)
    J = exp_moments(kappa[:, None] * h[None, :])  # (K, cells, powers)
    bm = np.einsum("cbk,nck->ncb", grid.interp_cell_coefficients, J) * h[None, :, None]
    bm *= np.exp(-kappa[:, None] * z[None, :-1])[..., None]
    return scatter_cell_basis(grid, bm)


def _gauss_moments_local(p: np.ndarray, r: np.ndarray, kmax: int = INTERP_POINTS - 1) -> np.ndarray:
    """K_k = int_0^1 u^k exp(-(p + r u)^2) du, k = 0..kmax, for r > 0."""
    out = np.zeros(p.shape + (kmax + 1,))
    narrow = r >= 1.0
    # Narrow Gaussians: exact recursion from the error function.
    pn, rn = p[narrow], r[narrow]
    if pn.size:
        a, b = pn, pn + rn
        # erf(b) - erf(a) without cancellation in the tails
        d = np.where(a >= 0, special.erfc(a) - special.erfc(b),
                     np.where(b <= 0, special.erfc(-b) - special.erfc(-a), special.erf(b) - special.erf(a)))
        e0 = np.exp(-a * a)
        e1 = np.exp(-b * b)
        K = np.empty(pn.shape + (kmax + 1,))
        K[..., 0] = 0.5 * np.sqrt(np.pi) * d / rn
        # r K_k = -(e1 - [k==1] e0)/(2r) + (k-1)/(2r) K_{k-2} - p K_{k-1}
        for k in range(1, kmax + 1):
            acc = -(e1 - (e0 if k == 1 else 0.0)) / (2 * rn) - pn * K[..., k - 1]
            if k >= 2:
                acc = acc + (k - 1) / (2 * rn) * K[..., k - 2]
            K[..., k] = acc / rn
        out[narrow] = K
    pw, rw = p[~narrow], r[~narrow]
    if pw.size:
        u = _GL_X
        g = np.exp(-(pw[..., None] + rw[..., None] * u) ** 2) * _GL_W
        for k in range(kmax + 1):
            out[~narrow, k] = (g * u**k).sum(axis=-1)
    return out


def gaussian_node_weights(grid: ZGrid, centers: np.ndarray, s: float, cutoff: float = 9.0) -> np.ndarray:
    """W[i, j] with sum_j W[i,j] f_j = int_0^L exp(-(y - c_i)^2 / (2 s^2)) p(y) dy."""
    z = grid.nodes
    h = np.diff(z)
    sq = s * np.sqrt(2.0)
    ncell = len(h)
    W = np.zeros((len(centers), grid.n))
    coef = grid.interp_cell_coefficients
    start = grid.interp_starts
    for i, c in enumerate(centers):
        lo = np.searchsorted(z, c - cutoff * sq, side="right") - 1
        hi = np.searchsorted(z, c + cutoff * sq, side="left")
        lo = max(lo, 0)
        hi = min(hi, ncell)
        if hi <= lo:
            continue
        cells = np.arange(lo, hi)
        p = (z[cells] - c) / sq
        r = h[cells] / sq
        Km = _gauss_moments_local(p, r) * h[cells, None]
        bm = np.einsum("cbk,ck->cb", coef[cells], Km)
        for b in range(INTERP_POINTS):
            np.add.at(W[i], start[cells] + b, bm[:, b])
    return W
