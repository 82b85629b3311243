"""Fields that are Fourier series in x and sampled on a ZGrid in z."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ZGrid


@dataclass(eq=False)
class SpectralField:
    """Modes alpha = -K..K stored row-wise; row k holds alpha = k - K."""

    modes: np.ndarray
    grid: ZGrid

    def __post_init__(self):
        self.modes = np.asarray(self.modes, dtype=complex)
        if self.modes.ndim != 2 or self.modes.shape[0] % 2 != 1:
            raise ValueError("modes must have shape (2K+1, Nz)")
        if self.modes.shape[1] != self.grid.n:
            raise ValueError("mode arrays must match the grid size")
        if not np.all(np.isfinite(self.modes)):
            raise ValueError("non-finite values in spectral field")

    @property
    def K(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @property
    def alphas(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def mode(self, alpha: int) -> np.ndarray:
        return self.modes[alpha + self.K]

    @classmethod
    def zeros(cls, K: int, grid: ZGrid) -> "SpectralField":
        return cls(np.zeros((2 * K + 1, grid.n), dtype=complex), grid)

    @classmethod
    def from_profiles(cls, K: int, grid: ZGrid, profiles: dict[int, np.ndarray]) -> "SpectralField":
        """Build a field from {alpha: profile}; conjugate partners are filled in."""
        out = np.zeros((2 * K + 1, grid.n), dtype=complex)
        for a, prof in profiles.items():
            if abs(a) > K:
                raise ValueError(f"mode {a} exceeds K={K}")
            out[a + K] = prof
            if a != 0:
                out[-a + K] = np.conj(prof)
        return cls(out, grid)

    def copy(self) -> "SpectralField":
        return SpectralField(self.modes.copy(), self.grid)

    def with_modes(self, modes: np.ndarray) -> "SpectralField":
        return SpectralField(modes, self.grid)

    def reality_defect(self) -> float:
        m = self.modes
        scale = max(np.abs(m).max(), 1e-300)
        return float(np.abs(m - np.conj(m[::-1])).max() / scale)

    def truncate(self, K: int) -> "SpectralField":
        if K > self.K:
            pad = np.zeros((K - self.K, self.grid.n), dtype=complex)
            return SpectralField(np.vstack([pad, self.modes, pad]), self.grid)
        d = self.K - K
        return SpectralField(self.modes[d:d + 2 * K + 1], self.grid)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.modes + other.modes, self.grid)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.modes - other.modes, self.grid)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.modes * c, self.grid)

    __rmul__ = __mul__

    def l1_per_mode(self) -> np.ndarray:
        return self.grid.integrate(np.abs(self.modes))


@dataclass(eq=False)
class RealField:
    """Physical-space samples on a uniform x grid over [0, 2pi) times ZGrid nodes."""

    x: np.ndarray
    values: np.ndarray
    grid: ZGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.x), self.grid.n):
            raise ValueError("values must have shape (Nx, Nz)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in real field")

    @staticmethod
    def x_grid(nx: int) -> np.ndarray:
        return 2.0 * np.pi * np.arange(nx) / nx

    @classmethod
    def from_function(cls, f, nx: int, grid: ZGrid) -> "RealField":
        x = cls.x_grid(nx)
        X, Z = np.meshgrid(x, grid.nodes, indexing="ij")
        return cls(x, f(X, Z), grid)


def _check_uniform(x: np.ndarray) -> None:
    nx = len(x)
    expected = 2.0 * np.pi * np.arange(nx) / nx
    if not np.allclose(x - x[0], expected, rtol=0, atol=1e-12 * 2 * np.pi):
        raise ValueError("x grid must be uniform on [0, 2pi)")


def to_modes(f: RealField, K: int | None = None) -> SpectralField:
    """Fourier coefficients f_alpha(z) with f = sum f_alpha e^{i alpha x}."""
    _check_uniform(f.x)
    nx = len(f.x)
    if K is None:
        K = (nx - 1) // 2
    if nx < 2 * K + 1:
        raise ValueError(f"x grid of {nx} points cannot carry K={K} modes")
    c = np.fft.fft(f.values, axis=0) / nx
    if f.x[0] != 0.0:
        c *= np.exp(-1j * np.fft.fftfreq(nx, 1.0 / nx) * f.x[0])[:, None]
    idx = np.arange(-K, K + 1) % nx
    out = c[idx]
    # enforce exact conjugate symmetry (fft of real data is symmetric to rounding)
    out = 0.5 * (out + np.conj(out[::-1]))
    return SpectralField(out, f.grid)


def from_modes(w: SpectralField, nx: int | None = None, tol: float = 1e-10) -> RealField:
    K = w.K
    if nx is None:
        nx = 2 * K + 1
    if nx < 2 * K + 1:
        raise ValueError(f"x grid of {nx} points cannot carry K={K} modes")
    if w.reality_defect() > tol:
        raise ValueError("field violates the reality condition mode(-a) = conj(mode(a))")
    c = np.zeros((nx, w.grid.n), dtype=complex)
    c[np.arange(-K, K + 1) % nx] = w.modes
    vals = np.fft.ifft(c, axis=0).real * nx
    return RealField(RealField.x_grid(nx), vals, w.grid)


def differentiate(f: SpectralField, axis: str) -> SpectralField:
    if axis == "x":
        return SpectralField(f.modes * (1j * f.alphas)[:, None], f.grid)
    if axis == "z":
        if f.grid.n < 5:
            raise ValueError("z-differentiation needs at least 5 nodes")
        d1 = f.grid.d1
        return SpectralField((d1 @ f.modes.T).T, f.grid)
    raise ValueError(f"unknown axis {axis!r}")


def dealiased_nx(K: int) -> int:
    """Physical grid size for exact quadratic products of 2K+1 modes (3/2 rule)."""
    return 3 * K + 1 + (3 * K + 1) % 2
