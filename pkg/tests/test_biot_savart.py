import numpy as np
import pytest
from scipy.integrate import solve_bvp

from slipns.biot_savart import boundary_trace_u1, stream_function, velocity_from_vorticity
from slipns.spectral import SpectralField, differentiate, from_modes


def test_stream_function_zero_and_wall(grid3):
    assert np.all(stream_function(np.zeros(grid3.n), 2, grid3) == 0)
    phi = stream_function(np.exp(-grid3.nodes) * (1 + grid3.nodes), 3, grid3)
    assert phi[0] == 0.0
    with pytest.raises(ValueError):
        stream_function(np.exp(-grid3.nodes), 0, grid3)


def test_stream_function_matches_bvp(grid3):
    z = grid3.nodes
    phi = stream_function(np.exp(-z), 1, grid3).real
    # closed form of phi'' - phi = e^{-z}, phi(0) = phi(inf) = 0 is -z e^{-z}/2
    assert np.abs(phi + 0.5 * z * np.exp(-z)).max() < 1e-8
    zz = np.linspace(0.0, 30.0, 3001)
    sol = solve_bvp(lambda x, y: np.vstack([y[1], y[0] + np.exp(-x)]),
                    lambda a, b: np.array([a[0], b[0]]), zz, np.zeros((2, zz.size)), tol=1e-10, max_nodes=10**6)
    inner = z < 10
    assert np.abs(sol.sol(z[inner])[0] - phi[inner]).max() < 1e-8


def test_shear_velocity(grid3):
    z = grid3.nodes
    w = SpectralField.from_profiles(0, grid3, {0: np.exp(-z)})
    v = velocity_from_vorticity(w)
    assert np.all(v.u2.modes == 0)
    assert np.abs(v.u1.mode(0) + np.exp(-z)).max() < 1e-9


def _analytic_field(grid, K=3):
    z = grid.nodes
    prof = {0: np.exp(-z), 1: (1 + 0.5j) * z * np.exp(-z), 2: 0.3 * np.exp(-2 * z), 3: -0.1j * np.exp(-z) * z**2}
    return SpectralField.from_profiles(K, grid, prof)


def test_divergence_and_curl(grid3):
    w = _analytic_field(grid3)
    v = velocity_from_vorticity(w)
    div = differentiate(v.u1, "x").modes + differentiate(v.u2, "z").modes
    curl = differentiate(v.u1, "z").modes - differentiate(v.u2, "x").modes
    assert np.abs(div).max() <= 1e-6
    assert np.abs(curl - w.modes).max() <= 1e-6
    assert np.abs(from_modes(v.u2).values[:, 0]).max() < 1e-14


def test_boundary_trace(grid3):
    z = grid3.nodes
    assert boundary_trace_u1(np.zeros(grid3.n), 1, grid3) == 0
    assert abs(boundary_trace_u1(np.exp(-z), 1, grid3) + 0.5) < 1e-10
    w = _analytic_field(grid3)
    v = velocity_from_vorticity(w)
    for a in range(0, 4):
        assert abs(boundary_trace_u1(w.mode(a), a, grid3) - v.u1.mode(a)[0]) < 1e-8


def test_rejects_bad_input(grid3):
    w = SpectralField.zeros(1, grid3)
    w.modes[2] = np.exp(-grid3.nodes)
    with pytest.raises(ValueError):
        velocity_from_vorticity(w)
    with pytest.raises(ValueError):
        stream_function(np.ones(grid3.n), 1, grid3)
