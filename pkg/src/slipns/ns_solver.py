"""Navier-Stokes in vorticity form by Picard iteration of the restarted Duhamel formula.

On each substep [t, t + dt] the iterate is stored at the m + 1 substep nodes
tau_j, so N(omega) is evaluated exactly where the time interpolant samples it:

    omega^{k+1}(tau_i) = W(tau_i - t) omega(t) - int_t^{tau_i} W(tau_i - s) I[N(omega^k)](s) ds,

with I the degree-m interpolant through the node values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import velocity_from_vorticity
from .norms import NormParams, analytic_norm, bl_norm
from .semigroup import DuhamelStepper, boundary_residual
from .spectral import SpectralField, dealiased_nx, differentiate, from_modes, to_modes
from .stokes_green import ContourSpec, KernelCache

log = logging.getLogger(__name__)


class PicardDiverged(RuntimeError):
    pass


class SpectralTailError(RuntimeError):
    pass


def nonlinear_term(w: SpectralField) -> SpectralField:
    """N = u . grad(omega), products formed on the dealiased x grid."""
    K = w.K
    vel = velocity_from_vorticity(w)
    wx = differentiate(w, "x")
    wz = differentiate(w, "z")
    nx = dealiased_nx(K)
    prod = (from_modes(vel.u1, nx).values * from_modes(wx, nx).values
            + from_modes(vel.u2, nx).values * from_modes(wz, nx).values)
    phys = from_modes(w, nx)
    phys.values = prod
    return to_modes(phys, K)


def _rel_l1(a: np.ndarray, b: np.ndarray, grid) -> float:
    den = grid.integrate(np.abs(b)).sum()
    num = grid.integrate(np.abs(a - b)).sum()
    return float(num / den) if den > 0 else float(num)


@dataclass
class NsConfig:
    dt: float = 0.01
    m: int = 3
    picard_tol: float = 1e-10
    max_picard: int = 25
    tail_tol: float = 1e-8
    rho0: float = 0.5
    contour: ContourSpec | None = None
    output_every: int = 1


@dataclass(eq=False)
class NsRunState:
    t: float
    omega: SpectralField
    dt: float
    picard_tol: float = 1e-10
    iterations: list = field(default_factory=list)
    contraction: list = field(default_factory=list)


def tail_fraction(w: SpectralField, rho: float) -> float:
    """Share of sum_a e^{rho|a|} ||w_a||_L1 carried by the top decade of modes."""
    a = np.abs(w.alphas)
    per = np.exp(rho * a) * w.grid.integrate(np.abs(w.modes))
    total = per.sum()
    if total == 0 or w.K == 0:
        return 0.0
    top = a >= int(np.ceil(0.9 * w.K))
    return float(per[top].sum() / total)


def ns_step(state: NsRunState, stepper: DuhamelStepper, max_iter: int = 25) -> tuple[NsRunState, list]:
    """Advance one substep; returns the new state and the iterate at the substep nodes."""
    if abs(stepper.dt - state.dt) > 1e-14 * state.dt:
        raise ValueError("dt does not match the substep ladder")
    w0 = state.omega
    free = stepper.free_evolution(w0)
    grid = w0.grid
    it = [f.copy() for f in free]
    deltas = []
    for k in range(1, max_iter + 1):
        forcing = [nonlinear_term(x) * -1.0 for x in it]
        new = stepper.propagate(w0, forcing, free=free)
        d = max(_rel_l1(n.modes, o.modes, grid) for n, o in zip(new, it))
        deltas.append(d)
        it = new
        if d <= state.picard_tol:
            break
        if len(deltas) >= 3 and deltas[-1] > deltas[-2] > deltas[-3]:
            raise PicardDiverged(
                f"Picard iteration diverging at t={state.t:g} (deltas {deltas[-3:]}); reduce dt")
    else:
        raise PicardDiverged(
            f"Picard iteration not converged in {max_iter} iterations at t={state.t:g} "
            f"(last delta {deltas[-1]:.2e}); reduce dt")
    ratios = [deltas[i] / deltas[i - 1] for i in range(1, len(deltas)) if deltas[i - 1] > 0]
    out = NsRunState(state.t + state.dt, it[-1], state.dt, state.picard_tol,
                     state.iterations + [len(deltas)], state.contraction + [ratios])
    return out, it


@dataclass(eq=False)
class NsTrajectory:
    times: np.ndarray
    fields: list[SpectralField]
    nu: float
    beta: float
    diagnostics: dict = field(default_factory=dict)


def wall_trace_max(w: SpectralField, nx: int | None = None) -> float:
    """max_x |omega(x, 0)|."""
    nx = nx or max(64, 4 * w.K + 1)
    x = 2.0 * np.pi * np.arange(nx) / nx
    vals = np.exp(1j * np.outer(x, w.alphas)) @ w.modes[:, 0]
    return float(np.abs(vals.real).max())


def solve_ns(omega0: SpectralField, nu: float, beta: float, T: float, config: NsConfig | None = None,
             cache: KernelCache | None = None) -> NsTrajectory:
    cfg = config or NsConfig()
    if omega0.reality_defect() > 1e-10:
        raise ValueError("initial vorticity violates the reality condition")
    nsteps = int(round(T / cfg.dt))
    if nsteps < 1 or abs(nsteps * cfg.dt - T) > 1e-9 * T:
        raise ValueError("T must be a positive multiple of dt")
    stepper = DuhamelStepper(omega0.grid, omega0.K, nu, beta, cfg.dt, cfg.m, cfg.contour, cache)
    state = NsRunState(0.0, omega0.copy(), cfg.dt, cfg.picard_tol)
    times, fields = [0.0], [omega0.copy()]
    diag = {"bc_residual": [float(boundary_residual(omega0, nu, beta).max())],
            "wall_max": [wall_trace_max(omega0)], "tail": [tail_fraction(omega0, cfg.rho0)]}
    for n in range(nsteps):
        state, _ = ns_step(state, stepper, cfg.max_picard)
        tail = tail_fraction(state.omega, cfg.rho0)
        if tail > cfg.tail_tol:
            raise SpectralTailError(f"top modes carry {tail:.2e} of the analytic norm at t={state.t:g}; "
                                    f"increase K")
        if (n + 1) % cfg.output_every == 0 or n + 1 == nsteps:
            times.append((n + 1) * cfg.dt)
            fields.append(state.omega)
            diag["bc_residual"].append(float(boundary_residual(state.omega, nu, beta).max()))
            diag["wall_max"].append(wall_trace_max(state.omega))
            diag["tail"].append(tail)
    diag["picard_iterations"] = state.iterations
    diag["contraction"] = state.contraction
    return NsTrajectory(np.array(times), fields, nu, beta, diag)


def track_analytic_norms(traj: NsTrajectory, rho0: float = 0.5, gamma: float = 0.1,
                         params: NormParams | None = None) -> dict:
    """A(t) = sum_a e^{rho(t)|a|} ||w_a(t)||_L1 and its boundary-layer analogue, rho(t) = rho0 - gamma t."""
    T = float(traj.times[-1])
    if rho0 - gamma * T <= 0:
        raise ValueError(f"analyticity radius rho0 - gamma T = {rho0 - gamma * T:g} is not positive")
    base = params or NormParams.for_flow(traj.nu)
    A, B = [], []
    for t, w in zip(traj.times, traj.fields):
        rho = rho0 - gamma * t
        A.append(analytic_norm(w, NormParams(rho=rho, beta0=base.beta0, P=base.P, delta=base.delta)))
        p_t = NormParams(rho=rho, beta0=base.beta0, P=base.P, delta=base.delta,
                         delta_t=float(np.sqrt(traj.nu * t)))
        B.append(float(sum(np.exp(rho * abs(a)) * bl_norm(w.mode(a), p_t, w.grid) for a in w.alphas)))
    A, B = np.array(A), np.array(B)
    flagged = bool(A[0] > 0 and np.any(A > 10.0 * A[0]))
    return {"times": traj.times.copy(), "A": A, "B": B, "flagged": flagged, "rho0": rho0, "gamma": gamma}
