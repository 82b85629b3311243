"""Audits of the resolvent, the temporal kernel and the kernel tables.

Each audit returns a plain dict of measured values so the experiments and
the tests can share them.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from ..grid import ZGrid
from ..semigroup import apply_semigroup, boundary_residual
from ..spectral import SpectralField
from ..stokes_green import (ContourSpec, KernelCache, ResolventQuery, admissible, fit_kernel_bound,
                            heat_application_weights, heat_resolvent, kernel_bound_samples, mu_branch, residual_resolvent,
                            resolvent_by_linear_solve, resolvent_pole_product, temporal_residual_kernel)

# sixth-order central second difference
_D2 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])


def residue_audit(alphas=(1, 4, 16), nus=(1e-4, 1e-2), pairs=((0.0, 0.5), (0.3, 1.0), (1.0, 0.2)),
                  ks=range(2, 9), beta: float = 1.0) -> list[dict]:
    """|(lam + mu - a) R_lam| at lam = 10^{-k}.  For each (a, nu, z, y) the ratio
    |P| / lam is compared with its value at the smallest lam."""
    lam = 10.0 ** -np.asarray(list(ks), dtype=float)
    out = []
    for a in alphas:
        for nu in nus:
            for z, y in pairs:
                P = np.array([abs(resolvent_pole_product(ResolventQuery(l, a, nu, beta), z, y)) for l in lam])
                ratio = P / lam
                resid = float(np.max(np.abs(ratio / ratio[-1] - 1.0)))
                slope = float(np.polyfit(np.log(lam), np.log(P), 1)[0])
                out.append({"alpha": a, "nu": nu, "z": z, "y": y, "lam": lam, "P": P,
                            "residual": resid, "slope": slope,
                            "regime": lam / (a * a * nu)})
    return out


def _green(q: ResolventQuery, z, y):
    mu = mu_branch(q)
    return heat_resolvent(mu, q.nu, z, y) + residual_resolvent(mu, q.alpha, q.nu, q.beta, z, y)


def resolvent_point_audit(q: ResolventQuery, y: float, zfacs=(0.3, 0.6, 1.5, 2.5)) -> dict:
    """PDE residual of (lam - nu Delta_a) G off the diagonal, the nonlocal wall residual,
    and the gap to the independent linear-solve construction."""
    mu = mu_branch(q)
    a, nu = float(abs(q.alpha)), q.nu
    h = 0.02 / abs(mu)
    pde = 0.0
    solve_gap = 0.0
    for f in zfacs:
        z = f * y
        g = _green(q, z + h * np.arange(-3, 4), y)
        lap = (_D2 @ g) / h**2 - a * a * g[3]
        pde = max(pde, abs(q.lam * g[3] - nu * lap) / abs(g[3]))
        solve_gap = max(solve_gap, abs(resolvent_by_linear_solve(q, z, y) - g[3]) / abs(g[3]))

    def f(zz):
        return np.exp(-a * zz) * _green(q, zz, y)

    far = y + 60.0 / (a + mu.real)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        I = (integrate.quad(f, 0.0, y, complex_func=True, epsabs=0.0, epsrel=1e-12, limit=200)[0]
             + integrate.quad(f, y, far, complex_func=True, epsabs=0.0, epsrel=1e-12, limit=400)[0])
        mag = integrate.quad(lambda zz: abs(f(zz)), 0.0, far, points=[y], limit=400)[0]
    g0 = _green(q, 0.0, y)
    nb = nu**q.beta
    bc = abs(nb * g0 + I) / (nb * abs(g0) + mag)
    return {"pde": float(pde), "bc": float(bc), "solve_gap": float(solve_gap)}


def resolvent_sweep(n: int, rng: np.random.Generator) -> dict:
    """Random (lam, alpha, nu, beta) with lam off the cut, y on the resolvent length scale."""
    pts = []
    while len(pts) < n:
        nu = 10 ** rng.uniform(-5, -1)
        a = int(rng.choice([0, 1, 2, 4, 8, 16]))
        beta = float(rng.choice([0.0, 0.5, 1.0]))
        r = 10 ** rng.uniform(-3, 2) * max(a * a * nu, nu)
        th = rng.uniform(-0.95, 0.95) * np.pi
        q = ResolventQuery(r * np.exp(1j * th), a, nu, beta)
        y = rng.uniform(0.5, 2.0) / abs(mu_branch(q))
        res = resolvent_point_audit(q, y)
        res.update(lam=q.lam, alpha=a, nu=nu, beta=beta, y=y)
        pts.append(res)
    return {
        "points": pts,
        "pde": max(p["pde"] for p in pts),
        "bc": max(p["bc"] for p in pts),
        "solve_gap": max(p["solve_gap"] for p in pts),
    }


def case_family_for(t, nu, alpha, z, contour: ContourSpec | None = None) -> ContourSpec:
    """The admissible case-split contour for this point of the case split."""
    base = contour or ContourSpec()
    for fam in ("gamma_pm_c", "gamma1", "gamma2"):
        c = ContourSpec(fam, base.a, base.M, base.b_max, base.n_nodes)
        if admissible(c, t, nu, alpha, z):
            return c
    raise ValueError("no admissible case-split contour")


def contour_independence(n: int, rng: np.random.Generator, beta: float = 1.0) -> dict:
    """Relative gap between the production contour and the admissible case-split family,
    against max(|R|, 1e-6 (nu t)^{-1/2})."""
    gaps, fams = [], []
    for _ in range(n):
        nu = 10 ** rng.uniform(-4, -1)
        t = 10 ** rng.uniform(-2, 0)
        a = int(rng.integers(0, 65))
        st = np.sqrt(nu * t)
        z, y = rng.uniform(0, 6, 2) * st
        fam = case_family_for(t, nu, a, z)
        rp = temporal_residual_kernel(t, nu, a, z, y, None, beta)
        rf = temporal_residual_kernel(t, nu, a, z, y, fam, beta)
        gaps.append(float(abs(rp - rf) / max(abs(rp), 1e-6 / st)))
        fams.append(fam.family)
    return {"gaps": np.array(gaps), "families": fams, "max": float(max(gaps))}


def kernel_bound_audit(ts, nus, alphas, beta: float = 1.0, n_grid: int = 301, margin: float = 1.0) -> dict:
    """Fit (theta0, C) on the even grid nodes, then count violations on the odd nodes."""
    fit_s = kernel_bound_samples(ts, nus, alphas, n_grid=n_grid, stride=2, beta=beta)
    fit = fit_kernel_bound(fit_s)
    check = kernel_bound_samples(ts, nus, alphas, n_grid=n_grid, stride=2, offset=1, beta=beta)
    nt = check["nu"] * check["t"]
    log_bound = (np.log(fit.C * margin) - 0.5 * np.log(nt) - fit.theta0 * check["alpha"] ** 2 * nt
                 - fit.theta0 * check["z"] ** 2 / (4.0 * nt))
    excess = check["logR"] - log_bound
    return {"fit": fit, "holdout_points": int(excess.size), "holdout_violations": int(np.sum(excess > 0)),
            "holdout_max_ratio": float(np.exp(excess.max()) * margin)}


def semigroup_audit(nu: float, grid: ZGrid, K: int = 2, beta: float = 1.0, ts=(0.1, 0.2, 0.3),
                    cache: KernelCache | None = None) -> dict:
    """Semigroup property W(t)W(s) = W(t+s), wall condition of the output, heat mass."""
    cache = cache or KernelCache()
    z = grid.nodes
    prof = np.exp(-((z - 1.0) ** 2) / 0.08)
    w = SpectralField.from_profiles(K, grid, {a: prof / (1 + a) for a in range(K + 1)})
    t1, t2, t3 = ts
    a = apply_semigroup(apply_semigroup(w, t1, nu, None, beta, cache), t2, nu, None, beta, cache)
    b = apply_semigroup(w, t3, nu, None, beta, cache)
    gap = float(grid.integrate(np.abs(a.modes - b.modes)).sum() / grid.integrate(np.abs(b.modes)).sum())
    bc = float(boundary_residual(b, nu, beta).max())
    # the heat part with its image integrates to one in y away from the far end
    rows = heat_application_weights(t3, nu, grid).sum(axis=1)
    inner = z < 0.5 * grid.L
    mass_err = float(np.abs(rows - 1.0)[inner].max())
    return {"semigroup_gap": gap, "bc": bc, "mass_err": mass_err}
