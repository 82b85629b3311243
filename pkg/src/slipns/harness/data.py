"""Initial-data families and random analytic test fields.

shear        U'(z) = e^{-z} with U = 1 - e^{-z}: exact steady Euler shear, O(1) wall
             value, so the data are ill-prepared for every nu.
shear_well   shear plus a delta = sqrt(nu) layer tuned so the wall condition holds at t = 0.
gaussian     bump e^{-(z-c)^2/(2 w^2)} in modes 0, 1 and 2.
wall_layer   e^{-z/sqrt(nu)} in modes 0, 1 and 2.
two_mode     shear perturbed by eps z e^{-z} (cos(k x) + sin(2 k x)).
zero         identically zero.
"""

from __future__ import annotations

import numpy as np

from ..grid import ZGrid
from ..spectral import SpectralField

FAMILIES = ("zero", "shear", "shear_well", "gaussian", "wall_layer", "two_mode")


def shear_profile(z: np.ndarray) -> np.ndarray:
    return np.exp(-z)


def euler_shear_velocity(z: np.ndarray) -> np.ndarray:
    """u_1 of the steady Euler shear whose vorticity is shear_profile, with u_1 -> 0 at infinity."""
    return -np.exp(-z)


def well_prepared_shear(z: np.ndarray, nu: float, beta: float) -> np.ndarray:
    """e^{-z} + c delta^{-1} e^{-z/delta} with c fixing nu^beta w(0) + int w = 0."""
    d = np.sqrt(nu)
    c = -(1.0 + nu**beta) / (1.0 + nu**beta / d)
    return np.exp(-z) + c * np.exp(-z / d) / d


def make_initial(family: str, grid: ZGrid, K: int, nu: float, beta: float = 1.0, amplitude: float = 1.0,
                 center: float = 1.0, width: float = 0.2, eps: float = 0.05, mode: int = 1) -> SpectralField:
    z = grid.nodes
    if family == "zero":
        return SpectralField.zeros(K, grid)
    if family == "shear":
        return SpectralField.from_profiles(K, grid, {0: amplitude * shear_profile(z)})
    if family == "shear_well":
        return SpectralField.from_profiles(K, grid, {0: amplitude * well_prepared_shear(z, nu, beta)})
    if family in ("gaussian", "wall_layer"):
        if K < 2:
            raise ValueError(f"{family} data need K >= 2")
        if family == "gaussian":
            prof = np.exp(-((z - center) ** 2) / (2.0 * width**2))
        else:
            prof = np.exp(-z / np.sqrt(nu))
        prof = amplitude * prof
        return SpectralField.from_profiles(K, grid, {0: prof, 1: 0.5 * prof, 2: 0.25j * prof})
    if family == "two_mode":
        if 2 * mode > K:
            raise ValueError("two_mode data need K >= 2 * mode")
        pert = 0.5 * eps * z * np.exp(-z)
        return SpectralField.from_profiles(K, grid, {0: amplitude * shear_profile(z), mode: pert,
                                                     2 * mode: -1j * pert})
    raise ValueError(f"unknown data family {family!r}; choose from {FAMILIES}")


def random_field(rng: np.random.Generator, grid: ZGrid, K: int, nu: float, rho: float = 1.0,
                 beta0: float = 0.25) -> SpectralField:
    """Random real field with analytic mode decay e^{-rho |a|} and profiles built from
    exponentials, Gaussian bumps and sqrt(nu) wall layers, all decaying faster than e^{-beta0 z}."""
    z = grid.nodes
    d = np.sqrt(nu)
    profiles = {}
    for a in range(K + 1):
        prof = np.zeros(grid.n, dtype=complex)
        for _ in range(rng.integers(1, 4)):
            c = complex(rng.normal(), rng.normal()) if a else complex(rng.normal(), 0.0)
            kind = rng.integers(3)
            if kind == 0:
                b = rng.uniform(2.0 * beta0, 3.0)
                prof += c * z ** rng.integers(0, 3) * np.exp(-b * z)
            elif kind == 1:
                zc, w = rng.uniform(0.0, 4.0), rng.uniform(0.1, 1.0)
                prof += c * np.exp(-((z - zc) ** 2) / (2 * w * w))
            else:
                prof += c * np.exp(-z / (d * rng.uniform(0.5, 2.0))) * np.exp(-beta0 * z)
        profiles[a] = np.exp(-rho * a) * prof
    return SpectralField.from_profiles(K, grid, profiles)
