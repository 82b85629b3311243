"""Inequality audits: convolution estimates for the Stokes kernel and the
analytic-norm lemmas.

Constants are fitted on the even-indexed samples of a corpus and then
checked, inflated by a margin, against every sample.  Fitting on the whole
corpus would make "zero violations" true by construction.
"""

from __future__ import annotations

import numpy as np

from ..biot_savart import velocity_from_vorticity
from ..grid import ZGrid
from ..norms import NormParams, _mode_norms, analytic_norm, embedding_constant, psi
from ..spectral import SpectralField, differentiate, from_modes, to_modes
from ..stokes_green import KernelCache
from .data import random_field


def fit_then_verify(lhs, rhs, margin: float = 1.5) -> dict:
    """Smallest C with lhs <= C rhs on the even samples; violations of lhs <= margin C rhs on all."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    keep = rhs > 0
    ratio = np.where(keep, lhs / np.where(keep, rhs, 1.0), 0.0)
    C = float(ratio[::2].max())
    viol = int(np.count_nonzero(ratio > margin * C))
    return {"C": C, "margin": margin, "violations": viol, "samples": int(lhs.size),
            "max_ratio": float(ratio.max()), "holdout_max_ratio": float(ratio[1::2].max(initial=0.0))}


def random_profile(rng: np.random.Generator, grid: ZGrid, nu: float, beta0: float = 0.25) -> np.ndarray:
    """Real profile mixing smooth exponentials, bumps and sqrt(nu)-scale wall layers."""
    z = grid.nodes
    d = np.sqrt(nu)
    prof = np.zeros(grid.n)
    for _ in range(rng.integers(1, 4)):
        c = rng.normal()
        kind = rng.integers(3)
        if kind == 0:
            prof += c * z ** rng.integers(0, 3) * np.exp(-rng.uniform(2 * beta0, 3.0) * z)
        elif kind == 1:
            prof += c * np.exp(-((z - rng.uniform(0.0, 3.0)) ** 2) / (2 * rng.uniform(0.1, 1.0) ** 2))
        else:
            prof += c * np.exp(-z / (d * rng.uniform(0.5, 2.0))) * np.exp(-beta0 * z)
    return prof


def _derivs(f: np.ndarray, grid: ZGrid, k: int) -> list[np.ndarray]:
    out = [f]
    zf = psi(grid.nodes)
    for _ in range(k):
        out.append(zf * (grid.d1 @ out[-1]))
    return out


def _w1(f, grid, k):
    """sum_{l <= k} ||(psi d_z)^l f||_{L1}."""
    return float(sum(grid.integrate(np.abs(d)) for d in _derivs(f, grid, k)))


def _bl(f, grid, k, params: NormParams):
    return float(sum(_mode_norms(d, params, grid, "BL") for d in _derivs(f, grid, k)))


def convolution_samples(nus, ts, alphas, ks=(0, 1, 2), s_fracs=(0.25, 0.5, 0.75), n_profiles: int = 8,
                        beta: float = 1.0, n_nodes: int = 601, wall_fraction: float = 1.0 / 64.0,
                        seed: int = 0) -> dict:
    """Left and right sides of the four convolution inequalities over the sweep.

    keys: W1 (L1 bound), BL0 (boundary-layer bound from time 0), BLs (bound
    from time s, with the W^{k,1} term); each a dict of arrays lhs / rhs and
    the sample coordinates.
    """
    rng = np.random.default_rng(seed)
    cols = {name: {"lhs": [], "rhs": [], "nu": [], "t": [], "s": [], "alpha": [], "k": []}
            for name in ("W1", "BL0", "BLs")}

    def put(name, lhs, rhs, nu, t, s, a, k):
        c = cols[name]
        for key, v in (("lhs", lhs), ("rhs", rhs), ("nu", nu), ("t", t), ("s", s), ("alpha", a), ("k", k)):
            c[key].append(v)

    for nu in nus:
        grid = ZGrid.graded(n_nodes, nu, wall_fraction=wall_fraction)
        cache = KernelCache(maxsize=8)
        profs = np.array([random_profile(rng, grid, nu) for _ in range(n_profiles)])
        d = np.sqrt(nu)
        for a in alphas:
            for t in ts:
                out = cache.get(t, nu, a, grid, None, beta).weights @ profs.T
                p_t = NormParams(delta=d, delta_t=np.sqrt(nu * t))
                p_0 = NormParams(delta=d)
                for j in range(n_profiles):
                    for k in ks:
                        put("W1", _w1(out[:, j], grid, k), _w1(profs[j], grid, k), nu, t, 0.0, a, k)
                        put("BL0", _bl(out[:, j], grid, k, p_t), _bl(profs[j], grid, k, p_0), nu, t, 0.0, a, k)
                for frac in s_fracs:
                    s = frac * t
                    out = cache.get(t - s, nu, a, grid, None, beta).weights @ profs.T
                    p_s = NormParams(delta=d, delta_t=np.sqrt(nu * s))
                    for j in range(n_profiles):
                        for k in ks:
                            rhs = (np.sqrt(t / s) * _bl(profs[j], grid, k, p_s)
                                   + np.sqrt(t / (t - s)) * _w1(profs[j], grid, k))
                            put("BLs", _bl(out[:, j], grid, k, p_t), rhs, nu, t, s, a, k)
                            put("W1", _w1(out[:, j], grid, k), _w1(profs[j], grid, k), nu, t - s, s, a, k)
    return {name: {k: np.asarray(v, dtype=float) for k, v in c.items()} for name, c in cols.items()}


def convolution_audit(samples: dict, margin: float = 1.5) -> dict:
    out = {}
    for name, c in samples.items():
        res = fit_then_verify(c["lhs"], c["rhs"], margin)
        per_nu = {float(nu): float((c["lhs"][c["nu"] == nu] / c["rhs"][c["nu"] == nu]).max())
                  for nu in np.unique(c["nu"])}
        res["per_nu_max_ratio"] = per_nu
        res["domain"] = {key: [float(c[key].min()), float(c[key].max())] for key in ("nu", "t", "s", "alpha", "k")}
        out[name] = res
    return out


# --- norm lemmas -------------------------------------------------------------

def norm_corpus(n: int, nu: float, K: int = 16, rho: float = 1.0, n_nodes: int = 401, seed: int = 0,
                wall_fraction: float = 1.0 / 32.0) -> list[SpectralField]:
    rng = np.random.default_rng(seed)
    grid = ZGrid.graded(n_nodes, nu, wall_fraction=wall_fraction)
    return [random_field(rng, grid, K, nu, rho=rho) for _ in range(n)]


def _product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Exact product of two band-limited fields (modes up to f.K + g.K)."""
    K2 = f.K + g.K
    nx = 2 * K2 + 1
    pf, pg = from_modes(f.truncate(K2), nx), from_modes(g.truncate(K2), nx)
    pf.values = pf.values * pg.values
    return to_modes(pf, K2)


def _advect(w: SpectralField, wt: SpectralField) -> SpectralField:
    """v . grad(wt) with v the velocity of w, kept to every mode the product reaches."""
    K2 = w.K + wt.K
    w, wt = w.truncate(K2), wt.truncate(K2)
    vel = velocity_from_vorticity(w)
    nx = 2 * K2 + 1
    prod = (from_modes(vel.u1, nx).values * from_modes(differentiate(wt, "x"), nx).values
            + from_modes(vel.u2, nx).values * from_modes(differentiate(wt, "z"), nx).values)
    phys = from_modes(w, nx)
    phys.values = prod
    return to_modes(phys, K2)


def _psi_dz(w: SpectralField) -> SpectralField:
    return w.with_modes(psi(w.grid.nodes)[None, :] * differentiate(w, "z").modes)


def norm_audit(fields: list[SpectralField], nu: float, rho: float = 0.5, rho_prime: float = 0.25,
               t: float = 0.5, margin: float = 1.5) -> dict:
    """Embedding, x-derivative loss, product, elliptic and bilinear estimates on a corpus."""
    p_bl = NormParams(rho=rho, delta=np.sqrt(nu), delta_t=np.sqrt(nu * t))
    p = NormParams(rho=rho)
    pp = NormParams(rho=rho_prime)
    out = {}
    n = len(fields)

    # L1 embedding of the boundary-layer space
    lhs = [analytic_norm(f, p, "L1") for f in fields]
    rhs = [analytic_norm(f, p_bl, "BL") for f in fields]
    res = fit_then_verify(lhs, rhs, margin)
    bound = embedding_constant(p_bl, fields[0].grid)
    res["analytic_constant"] = bound
    res["analytic_violations"] = int(sum(l > bound * r * (1 + 1e-12) for l, r in zip(lhs, rhs)))
    out["embedding"] = res

    # x-derivative costs 1 / (e (rho - rho')) of analyticity radius
    lhs = [analytic_norm(differentiate(f, "x"), pp, "L1") for f in fields]
    rhs = [analytic_norm(f, p, "L1") / (rho - rho_prime) for f in fields]
    res = fit_then_verify(lhs, rhs, margin)
    res["analytic_constant"] = float(np.exp(-1.0))
    res["analytic_violations"] = int(sum(l > r * np.exp(-1.0) * (1 + 1e-12) for l, r in zip(lhs, rhs)))
    out["dx_loss"] = res
    pp_bl = NormParams(rho=rho_prime, delta=p_bl.delta, delta_t=p_bl.delta_t)
    lhs = [analytic_norm(differentiate(f, "x"), pp_bl, "BL") for f in fields]
    rhs = [analytic_norm(f, p_bl, "BL") / (rho - rho_prime) for f in fields]
    res = fit_then_verify(lhs, rhs, margin)
    res["analytic_constant"] = float(np.exp(-1.0))
    res["analytic_violations"] = int(sum(l > r * np.exp(-1.0) * (1 + 1e-12) for l, r in zip(lhs, rhs)))
    out["dx_loss_bl"] = res

    # product: ||f g||_{L1} <= ||f||_{Linf} ||g||_{L1}
    pairs = [(fields[i], fields[(i + 1) % n]) for i in range(n)]
    lhs = [analytic_norm(_product(f, g), p, "L1") for f, g in pairs]
    rhs = [analytic_norm(f, p, "Linf") * analytic_norm(g, p, "L1") for f, g in pairs]
    res = fit_then_verify(lhs, rhs, margin)
    res["analytic_constant"] = 1.0
    res["analytic_violations"] = int(sum(l > r * (1 + 1e-10) for l, r in zip(lhs, rhs)))
    out["product"] = res

    # elliptic: ||u1||_{Linf} + ||u2||_{Linf} <= C ||w||_{L1}
    lhs, rhs = [], []
    for f in fields:
        v = velocity_from_vorticity(f)
        lhs.append(analytic_norm(v.u1, p, "Linf") + analytic_norm(v.u2, p, "Linf"))
        rhs.append(analytic_norm(f, p, "L1"))
    out["elliptic"] = fit_then_verify(lhs, rhs, margin)

    # bilinear, in L1 and boundary-layer form
    for tag, par, flav in (("bilinear", p, "L1"), ("bilinear_bl", p_bl, "BL")):
        lhs, rhs = [], []
        for w, wt in pairs:
            lhs.append(analytic_norm(_advect(w, wt), par, flav))
            nw = analytic_norm(w, par, flav)
            nwx = analytic_norm(differentiate(w, "x"), par, flav)
            rhs.append(nw * analytic_norm(differentiate(wt, "x"), par, flav)
                       + (nw + nwx) * analytic_norm(_psi_dz(wt), par, flav))
        out[tag] = fit_then_verify(lhs, rhs, margin)
    return out
