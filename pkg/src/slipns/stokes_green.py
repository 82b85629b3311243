"""Resolvent and temporal Green function of the heat problem with the nonlocal slip condition.

For mode alpha (a = |alpha|) the resolvent G_lam = H_lam + R_lam solves

    (lam - nu (d_z^2 - a^2)) G = delta_y,      nu^beta G(0, y) = -int_0^inf e^{-a z} G(z, y) dz,

with mu = sqrt(lam/nu + a^2), Re mu > 0.  H_lam is the Neumann heat resolvent.
Writing eps = mu - a and D = 1 + nu^beta (mu + a), the residual part is

    R_lam = e^{-mu z} (e^{-mu y} - e^{-a y}) / (eps nu D) - e^{-mu (y+z)} / (nu mu),

an algebraic rearrangement of the two-term formula with the denominator
lam + nu(mu - a) in which the removable singularity at lam = 0 has been
cancelled.  For beta = 1 the two forms coincide.

The temporal kernel R_a(t, z, y) is the inverse Laplace transform along a
contour parametrised in mu:  mu = (A + i s) / sqrt(nu t), which is a parabola
in lam lying to the right of the cut lam <= -a^2 nu.  The integrand decays like
exp(-s^2), so the midpoint rule in s converges geometrically.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import threading
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .grid import INTERP_POINTS, ZGrid
from .quadrature import exp_moments, exp_node_weights, gaussian_node_weights, reversed_moments

log = logging.getLogger(__name__)

FAMILIES = ("production", "gamma1", "gamma2", "gamma_pm_c")
CACHE_FORMAT = "slipns-kernel-table"
CACHE_VERSION = 1


class BranchCutError(ValueError):
    pass


class ContourError(ValueError):
    pass


class QuadratureNotConverged(RuntimeError):
    pass


@dataclass(frozen=True)
class ResolventQuery:
    lam: complex
    alpha: int
    nu: float
    beta: float = 1.0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("slip exponent must lie in [0, 1]")


def _on_cut(w: np.ndarray) -> np.ndarray:
    return (np.abs(w.imag) <= 1e-15 * np.maximum(np.abs(w), 1.0)) & (w.real <= 0)


def mu_of(lam, alpha, nu) -> np.ndarray:
    """Vectorised principal branch of sqrt(lam/nu + alpha^2); raises on the cut."""
    w = np.asarray(lam, dtype=complex) / nu + float(alpha) ** 2
    if np.any(_on_cut(w)):
        raise BranchCutError("lambda lies on the cut {-alpha^2 nu - R_+}")
    return np.sqrt(w)


def mu_branch(q: ResolventQuery) -> complex:
    return complex(mu_of(q.lam, q.alpha, q.nu))


def _diff_over_eps(mu, a, y, eps):
    """(e^{-mu y} - e^{-a y}) / eps with eps = mu - a, without cancellation."""
    ey = eps * y
    small = np.abs(ey) < 0.5
    safe_eps = np.where(eps == 0, 1.0, eps)
    near = np.exp(-a * y) * np.where(ey == 0, -y, np.expm1(-ey) / safe_eps)
    far = (np.exp(-mu * y) - np.exp(-a * y)) / safe_eps
    return np.where(small, near, far)


def heat_resolvent(mu, nu, z, y):
    return (np.exp(-mu * np.abs(y - z)) + np.exp(-mu * (y + z))) / (2.0 * mu * nu)


def residual_resolvent(mu, alpha, nu, beta, z, y):
    a = float(abs(alpha))
    eps = (mu * mu - a * a) / (mu + a)
    D = 1.0 + nu**beta * (mu + a)
    return (np.exp(-mu * z) * _diff_over_eps(mu, a, y, eps) / (nu * D)
            - np.exp(-mu * (y + z)) / (nu * mu))


def resolvent_kernel(q: ResolventQuery, z, y) -> tuple[complex, complex]:
    """(H_lam, R_lam) at (z, y)."""
    mu = mu_branch(q)
    return (complex(heat_resolvent(mu, q.nu, z, y)),
            complex(residual_resolvent(mu, q.alpha, q.nu, q.beta, z, y)))


def resolvent_pole_product(q: ResolventQuery, z, y) -> complex:
    """(lam + mu - a) R_lam, the quantity whose limit at lam = 0 is the pole residue."""
    mu = mu_branch(q)
    a = abs(q.alpha)
    R = residual_resolvent(mu, q.alpha, q.nu, q.beta, z, y)
    return complex((q.lam + mu - a) * R)


def resolvent_by_linear_solve(q: ResolventQuery, z, y) -> complex:
    """Full resolvent G_lam(z, y) from the continuity / jump / boundary conditions.

    Independent of the closed form: the three matching conditions are solved
    numerically for the piecewise-exponential coefficients.
    """
    mu = mu_branch(q)
    nu, a, nb = q.nu, float(abs(q.alpha)), q.nu**q.beta
    ey = np.exp(-mu * y)
    # unknowns (c1, c2, c3): G = c1 e^{mu(z-y)} + c2 e^{-mu z} for z < y, c3 e^{-mu(z-y)} for z > y
    eps = mu - a
    # int_0^y e^{-az} e^{mu(z-y)} dz = (e^{-a y} - e^{-mu y}) / (mu - a)
    i1 = -_diff_over_eps(mu, a, y, eps)
    i2 = -np.expm1(-(mu + a) * y) / (mu + a)
    i3 = np.exp(-a * y) / (mu + a)
    A = np.array([
        [1.0, ey, -1.0],
        [nu * mu, -nu * mu * ey, nu * mu],
        [nb * ey + i1, nb + i2, i3],
    ], dtype=complex)
    rhs = np.array([0.0, 1.0, 0.0], dtype=complex)
    c1, c2, c3 = np.linalg.solve(A, rhs)
    if z < y:
        return complex(c1 * np.exp(mu * (z - y)) + c2 * np.exp(-mu * z))
    return complex(c3 * np.exp(-mu * (z - y)))


def temporal_heat_kernel(t, nu, alpha, z, y):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    s = 4.0 * nu * t
    return (np.exp(-(y - z) ** 2 / s) + np.exp(-(y + z) ** 2 / s)) / np.sqrt(np.pi * s) * np.exp(-alpha**2 * nu * t)


@dataclass(frozen=True)
class ContourSpec:
    """Inverse-Laplace path.

    `a` is the vertex offset of mu in units of 1/sqrt(nu t); the case-split families
    add z/(2 nu t) to it.  `M` is the arc radius in units of 1/t, `b_max` the
    truncation of the path parameter in units of 1/sqrt(nu t).
    """

    family: str = "production"
    a: float = 1.0
    M: float = 1.0
    b_max: float = 7.0
    n_nodes: int = 96

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContourError(f"unknown contour family {self.family!r}")
        if self.n_nodes < 32:
            raise ContourError("contours need at least 32 nodes")
        if self.a <= 0 or self.b_max <= 0 or self.M <= 0:
            raise ContourError("contour parameters must be positive")

    def with_nodes(self, n: int) -> "ContourSpec":
        return ContourSpec(self.family, self.a, self.M, self.b_max, n)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def admissible(contour: ContourSpec, t, nu, alpha, z) -> bool:
    """Case split of the bound proof: gamma_pm_c for a^2 nu <= 1, gamma1/gamma2 otherwise."""
    a = abs(alpha)
    if contour.family == "production":
        return True
    if contour.family == "gamma_pm_c":
        return a * a * nu <= 1.0
    if a * a * nu < 1.0:
        return False
    vertex = z / (2.0 * nu * t)
    if contour.family == "gamma1":
        return abs(vertex - a) >= 0.5 * a
    return abs(vertex - a) <= 0.5 * a


def contour_nodes(contour: ContourSpec, t, nu, alpha, z=0.0):
    """Nodes (lam_k, mu_k) and weights c_k with
    (1/2 pi i) int e^{lam t} F(lam) dlam ~ sum_k c_k F(lam_k)."""
    st = np.sqrt(nu * t)
    a2nu = float(alpha) ** 2 * nu
    shift = 0.0 if contour.family == "production" else z / (2.0 * nu * t)
    A = contour.a / st + shift
    n = contour.n_nodes
    fam = contour.family
    if fam in ("production", "gamma1", "gamma2"):
        h = 2.0 * contour.b_max / n
        s = (np.arange(n) - n / 2 + 0.5) * h
        m = A + 1j * s / st                     # parabola parameter
        if fam == "gamma2":
            lam = -a2nu / 8.0 + nu * m * m
            dlam = 2.0 * nu * m * 1j / st
        else:
            lam = -a2nu + nu * m * m
            dlam = 2.0 * nu * m * 1j / st
        w = np.full(n, h)
    else:
        Mp = contour.M / t
        # the arc must pass to the right of the origin (pole side of the case split)
        Mp = max(Mp, 1.01 * (a2nu / 2.0 - nu * A * A) + 1.0 / t)
        xg, wg = np.polynomial.legendre.leggauss(n)
        bmax = contour.b_max / st
        b = 0.5 * (xg + 1.0) * bmax
        wb = 0.5 * bmax * wg
        base = -a2nu / 2.0
        lam_p = base + nu * (A + 1j * b) ** 2 + 1j * Mp
        dlam_p = 2.0 * nu * (A + 1j * b) * 1j
        lam_m = np.conj(lam_p)[::-1]
        dlam_m = -np.conj(dlam_p)[::-1]         # traversed with b increasing from -bmax to 0
        th = 0.5 * np.pi * xg
        wt = 0.5 * np.pi * wg
        lam_c = base + nu * A * A + Mp * np.exp(1j * th)
        dlam_c = 1j * Mp * np.exp(1j * th)
        lam = np.concatenate([lam_m, lam_c, lam_p])
        dlam = np.concatenate([dlam_m, dlam_c, dlam_p])
        w = np.concatenate([wb[::-1], wt, wb])
    mu = mu_of(lam, alpha, nu)
    if np.any(mu.real <= 0):
        raise ContourError("contour leaves the half-plane Re mu > 0")
    c = w * np.exp(lam * t) * dlam / (2j * np.pi)
    return lam, mu, c


def _residual_sum(contour, t, nu, alpha, beta, z, y):
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    zb, yb = np.broadcast_arrays(z, y)
    out = np.empty(zb.shape, dtype=complex)
    if contour.family == "production":
        lam, mu, c = contour_nodes(contour, t, nu, alpha)
        vals = residual_resolvent(mu[:, None], alpha, nu, beta, zb.ravel()[None, :], yb.ravel()[None, :])
        return (c @ vals).reshape(zb.shape)
    for idx in np.ndindex(zb.shape):
        lam, mu, c = contour_nodes(contour, t, nu, alpha, float(zb[idx]))
        out[idx] = c @ residual_resolvent(mu, alpha, nu, beta, zb[idx], yb[idx])
    return out


def temporal_residual_kernel(t, nu, alpha, z, y, contour: ContourSpec | None = None,
                             beta: float = 1.0, rtol: float = 1e-9, max_nodes: int = 3072,
                             return_imag: bool = False):
    """R_alpha(t, z, y) by contour quadrature, doubling nodes until converged.

    Convergence is measured against max(|R|, 1e-6 (nu t)^{-1/2}).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    contour = contour or ContourSpec()
    if not admissible(contour, t, nu, alpha, float(np.min(z))) or \
            not admissible(contour, t, nu, alpha, float(np.max(z))):
        raise ContourError(f"contour family {contour.family} is not admissible here")
    scale_floor = 1e-6 / np.sqrt(nu * t)
    prev = _residual_sum(contour, t, nu, alpha, beta, z, y)
    n = contour.n_nodes
    while True:
        n *= 2
        cur = _residual_sum(contour.with_nodes(n), t, nu, alpha, beta, z, y)
        err = np.abs(cur - prev) / np.maximum(np.abs(cur), scale_floor)
        if np.all(err <= rtol):
            break
        if n >= max_nodes:
            raise QuadratureNotConverged(
                f"residual kernel not converged at {n} nodes (max rel change {err.max():.2e}, "
                f"t={t}, nu={nu}, alpha={alpha}, family={contour.family})")
        prev = cur
    if return_imag:
        return cur.real, cur.imag
    return cur.real


def residual_rows(t, nu, alpha, z, y, beta: float = 1.0, contour: ContourSpec | None = None,
                  chunk: int = 16) -> np.ndarray:
    """Pointwise R_alpha(t, z_i, y_j) with a contour centred at z_i / (2 nu t) for each row.

    A fixed contour leaves rounding noise of size 1e-16 e^{-z/sqrt(nu t)}, which
    exceeds the true Gaussian decay far from the wall.  Centring each row on
    its saddle keeps the relative error uniform in z.
    """
    contour = contour or ContourSpec()
    z = np.atleast_1d(np.asarray(z, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    st = np.sqrt(nu * t)
    a = float(abs(alpha))
    n = contour.n_nodes
    h = 2.0 * contour.b_max / n
    s = (np.arange(n // 2) + 0.5) * h            # upper half; the lower half is the conjugate
    out = np.empty((len(z), len(y)))
    for lo in range(0, len(z), chunk):
        zc = z[lo:lo + chunk, None]
        mu = contour.a / st + zc / (2.0 * nu * t) + 1j * s[None, :] / st
        lam = nu * (mu * mu - a * a)
        eps = lam / nu / (mu + a)
        Q = 1.0 / (nu * (1.0 + nu**beta * (mu + a)))
        # e^{lam t} e^{-mu z} as one exponent; the factors overflow separately
        ez = 2.0 * h * nu * mu / (np.pi * st) * np.exp(lam * t - mu * zc)   # 2 Re of the half sum
        # |eps| >= |Im mu| on this path, so splitting (e^{-mu y} - e^{-a y}) / eps is benign
        Emu = np.exp(-mu[..., None] * y)
        part = np.einsum("rk,rkj->rj", ez * (Q / eps - 1.0 / (nu * mu)), Emu)
        part -= (ez * Q / eps).sum(axis=1)[:, None] * np.exp(-a * y)[None, :]
        out[lo:lo + chunk] = part.real
    return out


@lru_cache(maxsize=64)
def _heat_weights_cached(t: float, nu: float, grid: ZGrid) -> np.ndarray:
    s = np.sqrt(2.0 * nu * t)
    z = grid.nodes
    W = gaussian_node_weights(grid, z, s) + gaussian_node_weights(grid, -z, s)
    return W / np.sqrt(4.0 * np.pi * nu * t)


def heat_application_weights(t: float, nu: float, grid: ZGrid) -> np.ndarray:
    """Application weights of the alpha = 0 heat part with its image term."""
    return _heat_weights_cached(float(t), float(nu), grid)


@dataclass(eq=False)
class KernelTable:
    """Kernel G = H + R at time t for one mode.

    heat_part / residual_part are pointwise samples at (z_i, y_j); `weights` is
    the application matrix  (W f)_i = int_0^L G(t, z_i, y) p_f(y) dy  for the
    local interpolant p_f of nodal data f.
    """

    t: float
    nu: float
    alpha: int
    beta: float
    heat_part: np.ndarray
    residual_part: np.ndarray
    weights: np.ndarray
    grid: ZGrid
    contour: ContourSpec = field(default_factory=ContourSpec)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.weights @ f

    @property
    def key(self) -> str:
        return table_key(self.t, self.nu, self.alpha, self.beta, self.grid, self.contour)


def table_key(t, nu, alpha, beta, grid: ZGrid, contour: ContourSpec) -> str:
    raw = json.dumps([repr(float(t)), repr(float(nu)), int(abs(alpha)), repr(float(beta)),
                      grid.fingerprint, contour.fingerprint])
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def _residual_factors(t, nu, alpha, beta, contour):
    lam, mu, c = contour_nodes(contour, t, nu, alpha)
    a = float(abs(alpha))
    eps = (mu * mu - a * a) / (mu + a)
    D = 1.0 + nu**beta * (mu + a)
    Q = 1.0 / (eps * nu * D)
    P = Q - 1.0 / (nu * mu)
    return mu, c, P, Q


def build_kernel_table(t, nu, alpha, grid: ZGrid, contour: ContourSpec | None = None,
                       beta: float = 1.0, pointwise: bool = True) -> KernelTable:
    """Tabulate H and R on the grid.

    The y-dependence of R_lam is a combination of e^{-mu y} and e^{-a y}, so
    with a z-independent contour every table is an (N_z x n) by (n x N_y)
    product of precomputed exponential factors.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    contour = contour or ContourSpec()
    if contour.family != "production":
        raise ContourError("tables are assembled on the production contour")
    a = int(abs(alpha))
    z = grid.nodes
    mu, c, P, Q = _residual_factors(t, nu, a, beta, contour)
    Ez = np.exp(-np.outer(z, mu)) * c[None, :]        # (Nz, n)
    left_mu = Ez * P[None, :]
    left_a = Ez @ Q                                     # (Nz,)
    Va = exp_node_weights(grid, np.array([float(a)]))[0]
    Vmu = exp_node_weights(grid, mu)                    # (n, Ny)
    WR = (left_mu @ Vmu).real - np.outer(left_a.real, Va)
    WH = _heat_weights_cached(float(t), float(nu), grid) * np.exp(-a * a * nu * t)
    if pointwise:
        R = residual_rows(t, nu, a, z, z, beta, contour)
        H = temporal_heat_kernel(t, nu, a, z[:, None], z[None, :])
    else:
        R = H = np.empty((0, 0))
    W = WH + WR
    if not (np.all(np.isfinite(W)) and np.all(np.isfinite(R))):
        raise QuadratureNotConverged("non-finite kernel table entries")
    return KernelTable(float(t), float(nu), a, float(beta), H, R, W, grid, contour)


def moment_contour_nodes(h, nu, alpha, kmax: int, contour: ContourSpec | None = None):
    """Nodes and weights for the time moments int_0^h (s/h)^k W(s) ds, k = 0..kmax.

    The Laplace symbol of the moment is int_0^h (s/h)^k e^{lam s} ds
      = (e^{lam h} / lam) sum_j (-1)^j k!/(k-j)! (lam h)^{-j}  -  (-1)^k k! / (lam (lam h)^k).
    The path lam h = (a + i s)^2 passes to the right of lam = 0 and of the cut, so
    the second term integrates to zero and only the first, which decays like
    e^{-s^2}, is summed.  The pole and the cut sit at Im s = a.
    """
    contour = contour or ContourSpec()
    n = contour.n_nodes
    hs = 2.0 * contour.b_max / n
    s = (np.arange(n) - n / 2 + 0.5) * hs
    g = contour.a + 1j * s
    lam = g * g / h
    dlam = 2j * g / h
    mu = mu_of(lam, alpha, nu)
    base = hs * np.exp(lam * h) * dlam / (2j * np.pi) / lam
    inv = 1.0 / (lam * h)
    c = np.zeros((kmax + 1, n), dtype=complex)
    for k in range(kmax + 1):
        fact = 1.0
        series = np.zeros(n, dtype=complex)
        for j in range(k + 1):
            series += (-1) ** j * fact * inv**j
            fact *= k - j
        c[k] = base * series
    return lam, mu, c


def _direct_heat_weights(grid: ZGrid, mu: np.ndarray, coef: np.ndarray, reach: float) -> np.ndarray:
    """sum_c coef[k, c] int e^{-mu_c |z_i - y|} p(y) dy as node weights, shape (k, Nz, Ny).

    Only cells within `reach` of z_i contribute; beyond that e^{-Re mu |z - y|} is negligible.
    """
    z = grid.nodes
    h = np.diff(z)
    ncell = len(h)
    J = exp_moments(mu[:, None] * h[None, :])                        # (c, cells, powers)
    cc = grid.interp_cell_coefficients
    fwd = np.einsum("mbk,cmk->cmb", cc, J) * h[None, :, None]          # int e^{-mu (y - z_m)} l_b
    rev = np.einsum("mbk,cmk->cmb", cc, reversed_moments(J)) * h[None, :, None]
    nk = coef.shape[0]
    nc = len(mu)
    starts = grid.interp_starts
    out = np.zeros((nk, grid.n, grid.n))
    for i in range(grid.n):
        lo = max(np.searchsorted(z, z[i] - reach, side="right") - 1, 0)
        hi = min(np.searchsorted(z, z[i] + reach, side="left"), ncell)
        for cells, base in ((np.arange(lo, min(i, hi)), rev), (np.arange(max(i, lo), hi), fwd)):
            if cells.size == 0:
                continue
            d = z[i] - z[cells + 1] if base is rev else z[cells] - z[i]
            tmp = np.exp(-mu[:, None] * d[None, :])[:, :, None] * base[:, cells]
            vals = (coef @ tmp.reshape(nc, -1)).real.reshape(nk, cells.size, INTERP_POINTS)
            idx = (starts[cells][:, None] + np.arange(INTERP_POINTS)[None, :]).ravel()
            for k in range(nk):
                out[k, i] += np.bincount(idx, weights=vals[k].ravel(), minlength=grid.n)
    return out


def build_moment_tables(h, nu, alpha, grid: ZGrid, kmax: int = 3, contour: ContourSpec | None = None,
                        beta: float = 1.0) -> np.ndarray:
    """Application weights of int_0^h (s/h)^k W(s) ds for k = 0..kmax, shape (kmax + 1, Nz, Ny).

    These integrate the Duhamel convolution exactly in time for forcing that is
    polynomial on the step, including the sqrt(s) wall layer that forcing
    violating the boundary condition excites.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    contour = contour or ContourSpec()
    a = float(abs(alpha))
    z = grid.nodes
    lam, mu, c = moment_contour_nodes(h, nu, a, kmax, contour)
    eps = lam / nu / (mu + a)
    D = 1.0 + nu**beta * (mu + a)
    Q = 1.0 / (eps * nu * D)
    # image heat term and residual part share the factor e^{-mu z}
    P = Q - 1.0 / (nu * mu) + 1.0 / (2.0 * nu * mu)
    Ez = np.exp(-np.outer(z, mu))
    Vmu = exp_node_weights(grid, mu)
    Va = exp_node_weights(grid, np.array([a]))[0]
    W = np.empty((kmax + 1, grid.n, grid.n))
    reach = 40.0 * np.sqrt(nu * h) / contour.a
    direct = _direct_heat_weights(grid, mu, c / (2.0 * nu * mu)[None, :], reach)
    for k in range(kmax + 1):
        W[k] = ((Ez * (c[k] * P)[None, :]) @ Vmu).real - np.outer((Ez @ (c[k] * Q)).real, Va) + direct[k]
    if not np.all(np.isfinite(W)):
        raise QuadratureNotConverged("non-finite moment table entries")
    return W


class KernelCache:
    """Bounded LRU table cache with optional on-disk persistence; safe to share across threads."""

    def __init__(self, directory: str | Path | None = None, pointwise: bool = False, maxsize: int = 96):
        self.directory = Path(directory) if directory else None
        self.pointwise = pointwise
        self.maxsize = maxsize
        self._mem: OrderedDict[str, KernelTable] = OrderedDict()
        self._lock = threading.Lock()
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    def get(self, t, nu, alpha, grid, contour=None, beta=1.0) -> KernelTable:
        contour = contour or ContourSpec()
        key = table_key(t, nu, alpha, beta, grid, contour)
        with self._lock:
            tab = self._mem.get(key)
            if tab is not None:
                self._mem.move_to_end(key)
                return tab
        path = self.directory / f"{key}.npz" if self.directory else None
        if path is not None and path.exists():
            tab = load_table(path, grid)
        else:
            tab = build_kernel_table(t, nu, alpha, grid, contour, beta, pointwise=self.pointwise)
            if path is not None:
                save_table(tab, path)
        with self._lock:
            self._mem[key] = tab
            while len(self._mem) > self.maxsize:
                self._mem.popitem(last=False)
        return tab

    def get_moments(self, h, nu, alpha, grid, kmax=3, contour=None, beta=1.0) -> np.ndarray:
        """Time-moment tables of build_moment_tables side by side, shape (Nz, (kmax + 1) Ny),
        kept in memory only."""
        contour = contour or ContourSpec()
        key = "moments:" + table_key(h, nu, alpha, beta, grid, contour) + f":{kmax}"
        with self._lock:
            tab = self._mem.get(key)
            if tab is not None:
                self._mem.move_to_end(key)
                return tab
        W = build_moment_tables(h, nu, alpha, grid, kmax, contour, beta)
        tab = np.ascontiguousarray(W.transpose(1, 0, 2).reshape(grid.n, -1))
        with self._lock:
            self._mem[key] = tab
            while len(self._mem) > self.maxsize:
                self._mem.popitem(last=False)
        return tab

    def clear(self):
        with self._lock:
            self._mem.clear()

    def __len__(self):
        return len(self._mem)


def save_table(tab: KernelTable, path: str | Path) -> None:
    header = {
        "format": CACHE_FORMAT, "version": CACHE_VERSION, "key": tab.key,
        "t": repr(tab.t), "nu": repr(tab.nu), "alpha": tab.alpha, "beta": repr(tab.beta),
        "grid": tab.grid.fingerprint, "contour": asdict(tab.contour),
    }
    buf = io.BytesIO()
    np.savez(buf, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
             heat_part=tab.heat_part, residual_part=tab.residual_part, weights=tab.weights)
    Path(path).write_bytes(buf.getvalue())


def load_table(path: str | Path, grid: ZGrid) -> KernelTable:
    with np.load(path) as data:
        header = json.loads(data["header"].tobytes().decode())
        if header.get("format") != CACHE_FORMAT or header.get("version") != CACHE_VERSION:
            raise ValueError(f"{path}: unsupported kernel cache header {header.get('format')!r} "
                             f"v{header.get('version')}")
        if header["grid"] != grid.fingerprint:
            raise ValueError(f"{path}: table was built on a different grid")
        tab = KernelTable(float(header["t"]), float(header["nu"]), int(header["alpha"]),
                          float(header["beta"]), data["heat_part"], data["residual_part"],
                          data["weights"], grid, ContourSpec(**header["contour"]))
    if tab.key != header["key"]:
        raise ValueError(f"{path}: key mismatch")
    return tab


@dataclass
class KernelBoundFit:
    theta0: float
    C: float
    sweep: dict
    per_nu_C: dict = field(default_factory=dict)
    violations: int = 0


def kernel_bound_samples(ts, nus, alphas, n_grid: int = 601, stride: int = 2, beta: float = 1.0,
                         contour: ContourSpec | None = None, offset: int = 0) -> dict:
    """log|R_alpha(t, z_i, y_j)| over a sweep, with the coordinates needed by the bound.

    z and y range over every `stride`-th node of the graded grid for each nu,
    starting at node `offset`.
    Exact zeros (underflow) are dropped.
    """
    cols = {k: [] for k in ("t", "nu", "alpha", "z", "logR")}
    for nu in nus:
        grid = ZGrid.graded(n_grid, nu)
        z = grid.nodes[offset::stride]
        for t in ts:
            for a in alphas:
                R = np.abs(residual_rows(t, nu, a, z, z, beta, contour))
                if not np.all(np.isfinite(R)):
                    raise QuadratureNotConverged(f"non-finite residual kernel at t={t}, nu={nu}, alpha={a}")
                zz = np.broadcast_to(z[:, None], R.shape)
                keep = R > 0
                cols["logR"].append(np.log(R[keep]))
                cols["z"].append(zz[keep])
                for key, val in (("t", t), ("nu", nu), ("alpha", a)):
                    cols[key].append(np.full(int(keep.sum()), float(val)))
    out = {k: np.concatenate(v) for k, v in cols.items()}
    out["domain"] = {"t": [float(min(ts)), float(max(ts))], "nu": [float(min(nus)), float(max(nus))],
                     "alpha": [int(min(alphas)), int(max(alphas))], "n_grid": n_grid, "stride": stride,
                     "offset": offset,
                     "beta": beta}
    return out


def _log_ratio(samples, theta):
    nt = samples["nu"] * samples["t"]
    return (samples["logR"] + 0.5 * np.log(nt) + theta * samples["alpha"] ** 2 * nt
            + theta * samples["z"] ** 2 / (4.0 * nt))


def fit_kernel_bound(samples: dict, thetas=None, growth: float = 4.0) -> KernelBoundFit:
    """Fit |R| <= C (nu t)^{-1/2} e^{-theta0 a^2 nu t} e^{-theta0 z^2/(4 nu t)}.

    For each theta on the ladder the smallest admissible C is the maximum
    ratio over the sweep.  theta0 is the largest ladder value whose C stays
    within `growth` times the C of the smallest theta.
    """
    thetas = np.linspace(0.05, 0.95, 19) if thetas is None else np.asarray(thetas)
    logC = np.array([_log_ratio(samples, th).max() for th in thetas])
    ok = logC <= logC[0] + np.log(growth)
    theta0 = float(thetas[np.nonzero(ok)[0].max()])
    r = _log_ratio(samples, theta0)
    C = float(np.exp(r.max()) * (1.0 + 1e-12))
    per_nu = {float(nu): float(np.exp(r[samples["nu"] == nu].max())) for nu in np.unique(samples["nu"])}
    violations = int(np.count_nonzero(r > np.log(C)))
    sweep = dict(samples.get("domain", {}))
    sweep["points"] = int(r.size)
    sweep["C_by_theta"] = {f"{th:.3f}": float(np.exp(lc)) for th, lc in zip(thetas, logC)}
    return KernelBoundFit(theta0, C, sweep, per_nu, violations)
