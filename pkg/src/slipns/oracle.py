"""Method-of-lines oracle for the Stokes problem with the nonlocal slip condition.

Per mode the semi-discrete system is  M w' = nu (D2 - a^2) w + f  where the
first row of M is zero and carries the constraint

    nu^beta w(0) + sum_j q_j e^{-a z_j} w_j = 0,

and the last row pins w(L) = 0.  Time stepping is trapezoidal with an
implicit-Euler start (four half steps replace the first two steps), which
damps the transient from data that do not satisfy the constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .grid import ZGrid
from .semigroup import StokesProblem, StokesSolution
from .spectral import SpectralField

SCHEMES = ("trapezoidal", "implicit-euler")


@dataclass(eq=False)
class MolSystem:
    grid: ZGrid
    alpha: int
    nu: float
    beta: float = 1.0

    def operator(self) -> sparse.csr_matrix:
        n = self.grid.n
        return (self.nu * (self.grid.d2 - self.alpha**2 * sparse.identity(n))).tocsr()

    def constraint_row(self) -> np.ndarray:
        g = self.grid
        row = g.weights * np.exp(-abs(self.alpha) * g.nodes)
        row[0] += self.nu**self.beta
        return row

    def step_matrix(self, theta: float, dt: float):
        """(M - theta dt A) with the constraint and far-field rows installed."""
        n = self.grid.n
        A = self.operator()
        S = (sparse.identity(n) - theta * dt * A).tolil()
        S[0, :] = self.constraint_row()
        S[n - 1, :] = 0.0
        S[n - 1, n - 1] = 1.0
        return S.tocsc(), A

    def residual(self, w: np.ndarray) -> float:
        return abs(self.constraint_row() @ w)


class _Stepper:
    def __init__(self, system: MolSystem, theta: float, dt: float):
        S, self.A = system.step_matrix(theta, dt)
        try:
            self.lu = spla.splu(S)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular step matrix for alpha={system.alpha}") from exc
        self.theta, self.dt = theta, dt

    def __call__(self, w, f_old, f_new):
        rhs = w + (1.0 - self.theta) * self.dt * (self.A @ w)
        rhs = rhs + self.dt * ((1.0 - self.theta) * f_old + self.theta * f_new)
        rhs[0] = 0.0
        rhs[-1] = 0.0
        return self.lu.solve(rhs.real) + 1j * self.lu.solve(rhs.imag)


def solve_stokes_direct(p: StokesProblem, scheme: str = "trapezoidal", dt: float = 1e-3,
                        startup: bool = True) -> StokesSolution:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if dt <= 0:
        raise ValueError("dt must be positive")
    w0 = p.omega0
    grid, K = w0.grid, w0.K
    times = np.asarray(p.times, dtype=float)
    nsteps = np.rint(times / dt).astype(int)
    if np.any(np.abs(nsteps * dt - times) > 1e-9 * max(1.0, times.max())):
        raise ValueError("output times must be multiples of dt")
    theta = 0.5 if scheme == "trapezoidal" else 1.0
    zero = np.zeros(grid.n, dtype=complex)

    def forcing(t):
        return p.forcing(t).modes if p.forcing else None

    states = {0: w0.modes.copy()}
    cur = w0.modes.copy()
    for a in range(K + 1):
        if not np.any(cur[[K + a, K - a]]) and p.forcing is None:
            continue
        system = MolSystem(grid, a, p.nu, p.beta)
        main = _Stepper(system, theta, dt)
        start = _Stepper(system, 1.0, dt / 2.0) if (startup and theta < 1.0) else None
        w = cur[K + a].copy()
        t = 0.0
        fcache = {}

        def f_at(tt):
            if p.forcing is None:
                return zero
            if tt not in fcache:
                fcache.clear()
                fcache[tt] = forcing(tt)
            return fcache[tt][K + a]

        for n in range(1, int(nsteps.max()) + 1):
            if start is not None and n <= 2:
                for _ in range(2):
                    w = start(w, zero, f_at(t + dt / 2.0))
                    t += dt / 2.0
            else:
                w = main(w, f_at(t), f_at(t + dt))
                t += dt
            t = n * dt
            states.setdefault(n, np.zeros_like(cur))
            states[n][K + a] = w
            if a:
                states[n][K - a] = np.conj(w)
    fields = []
    for n in nsteps:
        modes = states.get(int(n))
        if modes is None:
            modes = np.zeros_like(cur)
        fields.append(SpectralField(modes, grid))
    return StokesSolution(times, fields, dt, {"scheme": scheme})
