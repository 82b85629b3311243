import numpy as np
import pytest

from slipns.grid import ZGrid
from slipns.norms import NormParams, analytic_norm, bl_norm, bl_weight, embedding_constant, phi_P
from slipns.spectral import SpectralField, differentiate


def test_weight_properties(grid3):
    p = NormParams(delta=0.03, delta_t=0.01)
    w = bl_weight(grid3.nodes, p)
    assert np.all(w >= 1.0)
    assert abs(bl_weight(np.array([1e6]), p)[0] - 1.0) < 1e-9
    assert phi_P(0.0) == 1.0


def test_bl_norm_values(grid3):
    z = grid3.nodes
    p = NormParams(delta=np.sqrt(1e-3))
    assert bl_norm(np.zeros(grid3.n), p, grid3) == 0.0
    v = bl_norm(np.exp(-p.beta0 * z), p, grid3)
    assert 0.99 <= v <= 1.0
    d = p.delta
    layer = phi_P(z / d) / d * np.exp(-p.beta0 * z)
    assert bl_norm(layer, p, grid3) <= 1.0
    f = np.exp(-z) * np.cos(z)
    assert bl_norm(f, p, grid3) <= np.max(np.abs(f) * np.exp(p.beta0 * z))


def test_analytic_norm_single_mode(grid3):
    z = grid3.nodes
    prof = np.exp(-z)
    m = grid3.integrate(prof)
    w = SpectralField.from_profiles(3, grid3, {2: prof})
    # modes +2 and -2 each carry e^{2 rho} m
    assert analytic_norm(w, NormParams(rho=0.5)) == pytest.approx(2 * np.exp(1.0) * m, rel=1e-12)
    assert analytic_norm(SpectralField.zeros(2, grid3), NormParams(rho=1.0)) == 0.0


def test_norm_guards(grid3):
    w = SpectralField.zeros(4, grid3)
    with pytest.raises(OverflowError):
        analytic_norm(w, NormParams(rho=200.0))
    with pytest.raises(ValueError):
        analytic_norm(w, NormParams(), flavor="L2")
    with pytest.raises(ValueError):
        NormParams(beta0=0.0)
    with pytest.raises(ValueError):
        NormParams(P=1.0)


def test_x_derivative_loss(grid3, rng):
    rho, rp = 0.6, 0.2
    for _ in range(20):
        K = 12
        prof = {a: (rng.normal() + 1j * rng.normal()) * np.exp(-rng.uniform(0.5, 2) * grid3.nodes) * np.exp(-rho * a)
                for a in range(1, K + 1)}
        w = SpectralField.from_profiles(K, grid3, prof)
        lhs = analytic_norm(differentiate(w, "x"), NormParams(rho=rp))
        rhs = analytic_norm(w, NormParams(rho=rho)) / (np.e * (rho - rp))
        assert lhs <= rhs * (1 + 1e-12)


def test_embedding_constant(grid3, rng):
    p = NormParams(delta=np.sqrt(1e-3), delta_t=np.sqrt(1e-3 * 0.3))
    C = embedding_constant(p, grid3)
    z = grid3.nodes
    for _ in range(50):
        f = rng.normal() * np.exp(-rng.uniform(0.3, 3) * z) + rng.normal() * np.exp(-z / (p.delta * rng.uniform(0.5, 2)))
        assert grid3.integrate(np.abs(f)) <= C * bl_norm(f, p, grid3) * (1 + 1e-12)
