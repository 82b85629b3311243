"""Velocity from vorticity through the Dirichlet stream function.

Conventions: Delta phi = omega with phi(z=0) = 0, u1 = d_z phi, u2 = -d_x phi,
omega = d_z u1 - d_x u2.  Per mode, with a = |alpha|,

    phi_a(z) = (1/2a) [ e^{-az} B - int_0^z e^{a(y-z)} w dy - int_z^L e^{a(z-y)} w dy ],
    B = int_0^L e^{-ay} w dy,

and u1 is the exact z-derivative of this representation.  The two running
integrals are accumulated cell by cell so the kink of e^{-a|y-z|} at y = z
never sits inside a quadrature cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ZGrid
from .quadrature import cell_exp_integrals
from .spectral import SpectralField


@dataclass(eq=False)
class VelocityPair:
    u1: SpectralField
    u2: SpectralField


def _running_integrals(grid: ZGrid, w: np.ndarray, a: float):
    """Left: int_0^z e^{a(y-z)} w dy.  Right: int_z^L e^{a(z-y)} w dy.  B: int_0^L e^{-ay} w dy."""
    h = np.diff(grid.nodes)
    decay = np.exp(-a * h)
    into_right = cell_exp_integrals(grid, w, a, reverse=True)   # int_cell e^{-a(z_{j+1}-y)} w
    into_left = cell_exp_integrals(grid, w, a, reverse=False)   # int_cell e^{-a(y-z_j)} w
    n = grid.n
    left = np.zeros(n, dtype=complex)
    right = np.zeros(n, dtype=complex)
    for j in range(n - 1):
        left[j + 1] = decay[j] * left[j] + into_right[j]
    for j in range(n - 2, -1, -1):
        right[j] = decay[j] * right[j + 1] + into_left[j]
    return left, right, right[0]


def stream_function(w_alpha: np.ndarray, alpha: int, grid: ZGrid) -> np.ndarray:
    if alpha == 0:
        raise ValueError("stream_function is undefined for alpha = 0; use the zero-mode branch")
    w_alpha = np.asarray(w_alpha, dtype=complex)
    _check_decay(w_alpha)
    a = float(abs(alpha))
    left, right, B = _running_integrals(grid, w_alpha, a)
    phi = (np.exp(-a * grid.nodes) * B - left - right) / (2.0 * a)
    phi[0] = 0.0
    return phi


def _u1_mode(w_alpha: np.ndarray, alpha: int, grid: ZGrid) -> np.ndarray:
    if alpha == 0:
        return -grid.cumulative_from_right(w_alpha)
    a = float(abs(alpha))
    left, right, B = _running_integrals(grid, w_alpha, a)
    return 0.5 * (-np.exp(-a * grid.nodes) * B + left - right)


def _check_decay(w: np.ndarray, rel: float = 1e-8) -> None:
    peak = np.abs(w).max()
    if peak > 0 and abs(w[-1]) > rel * peak:
        raise ValueError("vorticity does not decay at the end of the grid")


def velocity_from_vorticity(w: SpectralField) -> VelocityPair:
    if w.reality_defect() > 1e-10:
        raise ValueError("vorticity violates the reality condition")
    grid = w.grid
    u1 = np.zeros_like(w.modes)
    u2 = np.zeros_like(w.modes)
    for a in range(0, w.K + 1):
        wa = w.mode(a)
        if not np.any(wa):
            continue
        if a == 0:
            u1[w.K] = _u1_mode(wa, 0, grid)
            continue
        left, right, B = _running_integrals(grid, wa, float(a))
        e = np.exp(-a * grid.nodes)
        phi = (e * B - left - right) / (2.0 * a)
        phi[0] = 0.0
        u1a = 0.5 * (-e * B + left - right)
        u1[w.K + a] = u1a
        u1[w.K - a] = np.conj(u1a)
        u2[w.K + a] = -1j * a * phi
        u2[w.K - a] = np.conj(-1j * a * phi)
    return VelocityPair(SpectralField(u1, grid), SpectralField(u2, grid))


def boundary_trace_u1(w_alpha: np.ndarray, alpha: int, grid: ZGrid) -> complex:
    """u_{1,alpha}(0) = -int_0^inf e^{-|alpha| y} w_alpha(y) dy, by the grid quadrature."""
    w_alpha = np.asarray(w_alpha)
    return complex(-np.dot(grid.weights, np.exp(-abs(alpha) * grid.nodes) * w_alpha))
