"""Boundary-layer and analytic norms on the real trace of the grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DEFAULT_BETA0, ZGrid
from .spectral import SpectralField

FLAVORS = ("L1", "Linf", "BL")
DEFAULT_P = 2.0
DEFAULT_RHO0 = 0.5
_EXP_GUARD = 600.0


@dataclass(frozen=True)
class NormParams:
    """rho: x-analyticity radius; sigma: z-radius (recorded only, sup is over real z)."""

    rho: float = 0.0
    sigma: float = 0.0
    beta0: float = DEFAULT_BETA0
    P: float = DEFAULT_P
    delta: float = 0.0
    delta_t: float = 0.0

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ValueError("beta0 must be positive")
        if self.P <= 1:
            raise ValueError("P must exceed 1")
        if self.delta < 0 or self.delta_t < 0 or self.rho < 0:
            raise ValueError("rho, delta and delta_t must be nonnegative")

    @classmethod
    def for_flow(cls, nu: float, t: float = 0.0, **kw) -> "NormParams":
        return cls(delta=float(np.sqrt(nu)), delta_t=float(np.sqrt(nu * t)), **kw)


def phi_P(x, P: float = DEFAULT_P):
    return 1.0 / (1.0 + np.abs(x) ** P)


def bl_weight(z, params: NormParams):
    """1 + delta_t^{-1} phi_P(z/delta_t) + delta^{-1} phi_P(z/delta); zero scales drop their term."""
    z = np.asarray(z, dtype=float)
    w = np.ones_like(z)
    for d in (params.delta_t, params.delta):
        if d > 0:
            w = w + phi_P(z / d, params.P) / d
    return w


def bl_norm(f_alpha: np.ndarray, params: NormParams, grid: ZGrid) -> float:
    z = grid.nodes
    return float(np.max(np.abs(f_alpha) * np.exp(params.beta0 * z) / bl_weight(z, params)))


def psi(z):
    return z / (1.0 + z)


def _mode_norms(modes: np.ndarray, params: NormParams, grid: ZGrid, flavor: str) -> np.ndarray:
    if flavor == "L1":
        return grid.integrate(np.abs(modes))
    if flavor == "Linf":
        return np.abs(modes).max(axis=-1)
    if flavor == "BL":
        z = grid.nodes
        scale = np.exp(params.beta0 * z) / bl_weight(z, params)
        return (np.abs(modes) * scale).max(axis=-1)
    raise ValueError(f"unknown norm flavor {flavor!r}")


def analytic_norm(w: SpectralField, params: NormParams, flavor: str = "L1", k: int = 0) -> float:
    """sum_a e^{rho |a|} sum_{j + l <= k} || |a|^j (psi d_z)^l w_a ||_flavor."""
    if params.rho * w.K > _EXP_GUARD:
        raise OverflowError(f"rho*K = {params.rho * w.K:g} exceeds the exponential guard {_EXP_GUARD:g}")
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    grid = w.grid
    a = np.abs(w.alphas).astype(float)
    zfac = psi(grid.nodes)
    layers = [w.modes]
    for _ in range(k):
        layers.append(zfac * (grid.d1 @ layers[-1].T).T)
    total = np.zeros(len(a))
    for l, m in enumerate(layers):
        base = _mode_norms(m, params, grid, flavor)
        for j in range(k - l + 1):
            total += a**j * base
    return float(np.sum(np.exp(params.rho * a) * total))


def embedding_constant(params: NormParams, grid: ZGrid) -> float:
    """C with ||f||_{L1} <= C * bl_norm(f): the integral of e^{-beta0 z} times the weight."""
    z = grid.nodes
    return float(grid.integrate(np.exp(-params.beta0 * z) * bl_weight(z, params)))
