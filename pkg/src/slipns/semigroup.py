"""Stokes semigroup and the Duhamel solution of the forced problem.

The forced problem is marched on a uniform ladder of substeps of length dt.
Each substep carries m + 1 equally spaced nodes.  The forcing is interpolated
by the degree-m polynomial through its node samples, and the convolution

    int_0^{tau} W(tau - s) f(s) ds

is then evaluated exactly in time with the moment tables int_0^h (s/h)^k W(s) ds
(h = dt/m) and the semigroup W(j h).  Forcing that violates the wall condition
excites a wall layer of width sqrt(nu s) which no rule sampling W(s) at a few
s can integrate; the moments capture it by construction.
"""

from __future__ import annotations

import logging
from math import comb
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import fornberg_weights
from .spectral import SpectralField
from .stokes_green import ContourSpec, KernelCache

log = logging.getLogger(__name__)

Forcing = Callable[[float], SpectralField]

_default_cache = KernelCache()


def default_cache() -> KernelCache:
    return _default_cache


class TimeQuadratureNotConverged(RuntimeError):
    pass


@dataclass(eq=False)
class StokesProblem:
    omega0: SpectralField
    nu: float
    times: list[float]
    beta: float = 1.0
    forcing: Forcing | None = None

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if not self.times or min(self.times) < 0:
            raise ValueError("output times must be a nonempty list of t >= 0")
        w = self.omega0.modes
        peak = np.abs(w).max()
        if peak > 0 and np.abs(w[:, -1]).max() > 1e-8 * peak:
            raise ValueError("initial vorticity does not decay at the end of the grid")


@dataclass(eq=False)
class StokesSolution:
    times: np.ndarray
    fields: list[SpectralField]
    dt: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def at(self, t: float) -> SpectralField:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"no output at t={t}")
        return self.fields[i]


def apply_semigroup(w: SpectralField, t: float, nu: float, contour: ContourSpec | None = None,
                    beta: float = 1.0, cache: KernelCache | None = None) -> SpectralField:
    """e^{nu t B} w, mode by mode."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return w.copy()
    cache = cache or _default_cache
    out = np.zeros_like(w.modes)
    for a in range(w.K + 1):
        rows = [w.K + a] if a == 0 else [w.K + a, w.K - a]
        if not np.any(w.modes[rows]):
            continue
        tab = cache.get(t, nu, a, w.grid, contour, beta)
        out[rows] = (tab.weights @ w.modes[rows].T).T
    return SpectralField(out, w.grid)


def boundary_residual(w: SpectralField, nu: float, beta: float = 1.0, floor: float = 1e-12) -> np.ndarray:
    """|nu^beta w_a(0) + int e^{-|a| z} w_a dz| / ||w_a||_{L1} for every mode.

    Modes whose L1 norm is below `floor` times the largest mode norm hold only
    rounding noise; they are measured against that floor instead.
    """
    g = w.grid
    e = np.exp(-np.abs(w.alphas)[:, None] * g.nodes[None, :])
    num = np.abs(nu**beta * w.modes[:, 0] + g.integrate(e * w.modes))
    den = g.integrate(np.abs(w.modes))
    den = np.maximum(den, floor * den.max())
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def lagrange_shift_coefficients(m: int) -> np.ndarray:
    """A[q, j, k] with l_j(q - u) = sum_k A[q, j, k] u^k, for the Lagrange basis l_j on nodes 0..m."""
    x = np.arange(m + 1, dtype=float)
    C = np.linalg.inv(np.vander(x, m + 1, increasing=True))   # l_j(x) = sum_r C[r, j] x^r
    A = np.zeros((m + 1, m + 1, m + 1))
    for q in range(m + 1):
        for r in range(m + 1):
            # (q - u)^r = sum_k binom(r, k) q^{r-k} (-u)^k
            for k in range(r + 1):
                A[q, :, k] += C[r, :] * comb(r, k) * q ** (r - k) * (-1) ** k
    return A


class DuhamelStepper:
    """Substep machinery shared by the Stokes and Navier-Stokes solvers."""

    def __init__(self, grid, K, nu, beta, dt, m=3, contour=None, cache=None):
        self.grid, self.K, self.nu, self.beta, self.dt, self.m = grid, K, nu, beta, dt, m
        self.contour = contour
        self.cache = cache or _default_cache
        self.shift = lagrange_shift_coefficients(m)
        layer = np.sqrt(nu * dt / m)
        if grid.n > 1 and grid.nodes[1] > 0.5 * layer:
            log.warning("first grid cell %.2e exceeds half the layer width sqrt(nu dt/m) = %.2e; "
                        "the wall condition will only hold to quadrature accuracy", grid.nodes[1], layer)

    def kernel(self, j: int, w: SpectralField) -> SpectralField:
        """W(j dt / m) w."""
        if j == 0:
            return w.copy()
        return apply_semigroup(w, j * self.dt / self.m, self.nu, self.contour, self.beta, self.cache)

    def moments(self, f: np.ndarray) -> np.ndarray:
        """sum_k int_0^h (s/h)^k W(s) f[..., k, :, :] ds for f of shape (Q, m+1, 2K+1, Nz)."""
        out = np.zeros((f.shape[0],) + f.shape[2:], dtype=complex)
        K, n = self.K, self.grid.n
        for a in range(K + 1):
            rows = [K + a] if a == 0 else [K + a, K - a]
            block = f[:, :, rows]                                   # (Q, m+1, r, Nz)
            if not np.any(block):
                continue
            M = self.cache.get_moments(self.dt / self.m, self.nu, a, self.grid, self.m, self.contour, self.beta)
            rhs = block.transpose(1, 3, 0, 2).reshape((self.m + 1) * n, -1)
            ri = M @ np.concatenate([rhs.real, rhs.imag], axis=1)
            res = ri[:, :rhs.shape[1]] + 1j * ri[:, rhs.shape[1]:]   # (Nz, Q r)
            out[:, rows] = res.reshape(n, f.shape[0], len(rows)).transpose(1, 2, 0)
        return out

    def free_evolution(self, w0: SpectralField) -> list[SpectralField]:
        return [self.kernel(i, w0) for i in range(self.m + 1)]

    def propagate(self, w0: SpectralField, f_nodes: list[SpectralField | None],
                  free: list[SpectralField] | None = None) -> list[SpectralField]:
        """omega at the m + 1 substep nodes from omega(t_n) = w0 and forcing samples f_nodes[j].

        `free` may carry the precomputed unforced evolution W(j dt/m) w0.
        """
        free = free or self.free_evolution(w0)
        if all(f is None for f in f_nodes):
            return [f.copy() for f in free]
        zero = np.zeros_like(w0.modes)
        F = np.array([zero if f is None else f.modes for f in f_nodes])     # (m+1, 2K+1, Nz)
        # J_q = int_0^h W(s) f(t_n + q h - s) ds for q = 1..m
        coeffs = np.einsum("qjk,jan->qkan", self.shift[1:], F)
        J = [None] + [SpectralField(x, w0.grid) for x in self.moments(coeffs)]
        out = [free[0].copy()]
        for i in range(1, self.m + 1):
            acc = free[i].modes + J[i].modes
            for l in range(1, i):
                acc = acc + self.kernel(l, J[i - l]).modes
            out.append(free[i].with_modes(acc))
        return out


def _ladder(times, dt):
    n = np.rint(np.asarray(times) / dt).astype(int)
    if np.any(np.abs(n * dt - np.asarray(times)) > 1e-9 * max(1.0, max(times))):
        raise ValueError("output times must be multiples of the substep length")
    return n


def base_step(times, max_step: float | None = None) -> float:
    """Largest step dividing every output time (up to 1e-9), capped by max_step."""
    pos = sorted(t for t in set(times) if t > 0)
    if not pos:
        return max_step or 1.0
    for k in range(1, 1001):
        dt = pos[0] / k
        q = np.asarray(pos) / dt
        if np.all(np.abs(q - np.rint(q)) < 1e-9 * q.max()) and (max_step is None or dt <= max_step * (1 + 1e-12)):
            return dt
    raise ValueError("output times have no common step")


def _march(p: StokesProblem, dt: float, m: int, contour, cache) -> list[SpectralField]:
    stepper = DuhamelStepper(p.omega0.grid, p.omega0.K, p.nu, p.beta, dt, m, contour, cache)
    steps = _ladder(p.times, dt)
    out = {0: p.omega0.copy()}
    w = p.omega0.copy()
    h = dt / m
    for n in range(int(steps.max())):
        t0 = n * dt
        fn = [p.forcing(t0 + j * h) if p.forcing else None for j in range(m + 1)]
        w = stepper.propagate(w, fn)[-1]
        out[n + 1] = w
    return [out[int(k)] for k in steps]


def march_stokes(p: StokesProblem, dt: float, m: int = 3, contour: ContourSpec | None = None,
                 cache: KernelCache | None = None) -> StokesSolution:
    """Restarted Duhamel march on a fixed ladder of substeps of length dt.

    This composes W(dt/m) exactly as the Navier-Stokes stepper does, so it is
    the linear reference for that solver.
    """
    fields = _march(p, dt, m, contour, cache)
    return StokesSolution(np.asarray(p.times, dtype=float), fields, dt)


def _rel_l1(a: SpectralField, b: SpectralField) -> float:
    g = a.grid
    den = g.integrate(np.abs(b.modes)).sum()
    num = g.integrate(np.abs(a.modes - b.modes)).sum()
    return float(num / den) if den > 0 else float(num)


def solve_stokes(p: StokesProblem, contour: ContourSpec | None = None, cache: KernelCache | None = None,
                 dt: float | None = None, m: int = 3, rtol: float = 1e-6, max_doublings: int = 6) -> StokesSolution:
    """Duhamel solution at p.times.

    Without forcing the semigroup is applied directly at each output time.
    With forcing the substep count is doubled until successive solutions agree
    to `rtol` in relative L1 at every output time.
    """
    times = np.asarray(p.times, dtype=float)
    if p.forcing is None:
        fields = [apply_semigroup(p.omega0, t, p.nu, contour, p.beta, cache) for t in times]
        return StokesSolution(times, fields)
    step = base_step(p.times, dt)
    prev = _march(p, step, m, contour, cache)
    history = []
    for _ in range(max_doublings):
        step /= 2.0
        cur = _march(p, step, m, contour, cache)
        diff = max(_rel_l1(c, q) for c, q in zip(cur, prev))
        history.append((step, diff))
        log.debug("solve_stokes dt=%g change=%.3e", step, diff)
        if diff <= rtol:
            return StokesSolution(times, cur, step, {"refinement": history})
        prev = cur
    raise TimeQuadratureNotConverged(f"time quadrature not converged: {history}")


def laplacian_alpha(w: SpectralField, nu: float) -> np.ndarray:
    d2 = w.grid.d2
    return nu * ((d2 @ w.modes.T).T - (w.alphas[:, None] ** 2) * w.modes)


def check_duhamel_pde_residual(sol: StokesSolution, p: StokesProblem, order: int = 4) -> dict:
    """Relative L1 residual of d_t w - nu Delta_a w - f per mode at interior sample times.

    d_t uses finite-difference weights on up to order + 1 neighbouring samples.
    """
    if len(sol.times) < 4:
        raise ValueError("residual check needs at least 4 sample times")
    g = sol.fields[0].grid
    ts = sol.times
    width = min(order + 1, len(ts))
    worst = np.zeros(sol.fields[0].modes.shape[0])
    per_time = []
    for i in range(1, len(ts) - 1):
        lo = min(max(i - width // 2, 0), len(ts) - width)
        idx = np.arange(lo, lo + width)
        c = fornberg_weights(ts[i], ts[idx], 1)[:, 1]
        dt = sum(ci * sol.fields[k].modes for ci, k in zip(c, idx))
        lap = laplacian_alpha(sol.fields[i], p.nu)
        f = p.forcing(ts[i]).modes if p.forcing else 0.0
        res = dt - lap - f
        den = g.integrate(np.abs(dt)) + g.integrate(np.abs(lap))
        num = g.integrate(np.abs(res))
        rel = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        worst = np.maximum(worst, rel)
        per_time.append((float(ts[i]), float(rel.max())))
    return {"per_mode": worst, "max": float(worst.max()), "per_time": per_time}
