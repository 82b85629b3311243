import numpy as np
import pytest

from slipns.grid import ZGrid
from slipns.semigroup import (StokesProblem, TimeQuadratureNotConverged, apply_semigroup, boundary_residual,
                              check_duhamel_pde_residual, lagrange_shift_coefficients, march_stokes,
                              solve_stokes)
from slipns.spectral import SpectralField

NU = 1e-2


@pytest.fixture(scope="module")
def grid():
    return ZGrid.graded(401, NU, wall_fraction=1.0 / 64.0)


def _bump(grid, K=2):
    z = grid.nodes
    prof = np.exp(-((z - 1.0) ** 2) / 0.08)
    return SpectralField.from_profiles(K, grid, {0: prof, 1: 0.5 * prof, 2: 0.25j * prof})


def test_identity_at_zero(grid):
    w = _bump(grid)
    assert np.array_equal(apply_semigroup(w, 0.0, NU).modes, w.modes)
    with pytest.raises(ValueError):
        apply_semigroup(w, -1.0, NU)


def test_far_data_follow_free_heat_flow():
    g = ZGrid.graded(801, NU, L=30.0, wall_fraction=1.0 / 64.0)
    z = g.nodes
    s2, c, t, a = 1.0, 15.0, 0.5, 1
    w = SpectralField.from_profiles(1, g, {a: np.exp(-((z - c) ** 2) / (2 * s2))})
    out = apply_semigroup(w, t, NU).mode(a)
    v = s2 + 2 * NU * t
    exact = np.sqrt(s2 / v) * np.exp(-((z - c) ** 2) / (2 * v)) * np.exp(-a * a * NU * t)
    assert g.integrate(np.abs(out - exact)) / g.integrate(np.abs(exact)) <= 1e-6


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_output_obeys_wall_condition(grid, beta):
    w = _bump(grid)
    for t in (0.05, 0.5):
        assert boundary_residual(apply_semigroup(w, t, NU, beta=beta), NU, beta).max() <= 1e-6


def test_unforced_solve_is_semigroup(grid):
    w = _bump(grid)
    p = StokesProblem(w, NU, [0.0, 0.2, 0.4])
    sol = solve_stokes(p)
    for t, f in zip(sol.times, sol.fields):
        assert np.array_equal(f.modes, apply_semigroup(w, t, NU).modes)
    marched = march_stokes(p, 0.1)
    assert np.abs(marched.at(0.4).modes - sol.at(0.4).modes).max() <= 1e-6 * np.abs(w.modes).max()
    with pytest.raises(KeyError):
        sol.at(0.3)


def test_shifted_lagrange_basis():
    A = lagrange_shift_coefficients(3)
    u = np.linspace(-0.5, 3.5, 9)
    f = lambda x: 1.0 - 2.0 * x + 0.5 * x**3
    vals = f(np.arange(4.0))
    for q in range(4):
        poly = (vals @ A[q]) @ u[None, :] ** np.arange(4)[:, None]
        assert np.abs(poly - f(q - u)).max() < 1e-12


def _manufactured(grid, a=1, beta=1.0, b=3.0):
    """omega*(t, z) = e^{-t} g(z) with g = e^{-z} + c e^{-b z} chosen to satisfy the wall condition."""
    z = grid.nodes
    nb = NU**beta
    c = -(nb + 1.0 / (1.0 + a)) / (nb + 1.0 / (b + a))
    g = np.exp(-z) + c * np.exp(-b * z)
    lap = np.exp(-z) + c * b * b * np.exp(-b * z) - a * a * g
    K = a

    def exact(t):
        return SpectralField.from_profiles(K, grid, {a: np.exp(-t) * g})

    def forcing(t):
        return SpectralField.from_profiles(K, grid, {a: np.exp(-t) * (-g - NU * lap)})

    return exact, forcing


def test_manufactured_solution(grid):
    exact, forcing = _manufactured(grid)
    times = [round(0.1 * k, 10) for k in range(11)]
    p = StokesProblem(exact(0.0), NU, times, forcing=forcing)
    sol = solve_stokes(p, dt=0.1, rtol=5e-5)
    for t, f in zip(sol.times, sol.fields):
        ref = exact(t)
        assert grid.integrate(np.abs(f.modes - ref.modes)).sum() <= 1e-4 * grid.integrate(np.abs(ref.modes)).sum()
        assert boundary_residual(f, NU).max() <= 1e-6
    assert check_duhamel_pde_residual(sol, p)["max"] <= 1e-3


def test_pde_residual_of_free_evolution(grid):
    z = grid.nodes
    w0 = SpectralField.from_profiles(0, grid, {0: np.exp(-((z - 1.0) ** 2) / (4 * NU * 5.0))})
    # samples close enough in time to resolve the wall layer in the finite-difference d_t
    p = StokesProblem(w0, NU, [0.2 + 0.02 * k for k in range(7)])
    assert check_duhamel_pde_residual(solve_stokes(p), p)["max"] <= 1e-3
    zero = StokesProblem(SpectralField.zeros(1, grid), NU, [0.1, 0.2, 0.3, 0.4])
    assert check_duhamel_pde_residual(solve_stokes(zero), zero)["max"] == 0.0


def test_refinement_failure_is_reported(grid):
    exact, forcing = _manufactured(grid)
    p = StokesProblem(exact(0.0), NU, [0.5], forcing=forcing)
    with pytest.raises(TimeQuadratureNotConverged):
        solve_stokes(p, dt=0.5, rtol=1e-15, max_doublings=1)


def test_problem_validation(grid):
    with pytest.raises(ValueError):
        StokesProblem(_bump(grid), -1.0, [0.1])
    with pytest.raises(ValueError):
        StokesProblem(_bump(grid), NU, [])
    with pytest.raises(ValueError):
        StokesProblem(SpectralField.from_profiles(0, grid, {0: np.ones(grid.n)}), NU, [0.1])
