import numpy as np
import pytest

from slipns.spectral import RealField, SpectralField, dealiased_nx, differentiate, from_modes, to_modes

from conftest import stretched_grid


def test_constant_field_has_only_zero_mode(grid3):
    f = RealField.from_function(lambda X, Z: 2.5 + 0 * X, 9, grid3)
    w = to_modes(f, 4)
    assert np.allclose(w.mode(0), 2.5, atol=1e-14)
    others = np.delete(w.modes, 4, axis=0)
    assert np.abs(others).max() < 1e-14


def test_cosine_field(grid3):
    g = np.exp(-grid3.nodes)
    f = RealField.from_function(lambda X, Z: np.cos(X) * np.exp(-Z), 16, grid3)
    w = to_modes(f, 3)
    assert np.abs(w.mode(1) - g / 2).max() < 1e-14
    assert np.abs(w.mode(-1) - g / 2).max() < 1e-14
    assert np.abs(w.mode(2)).max() < 1e-14


def test_roundtrip_random_real_field(grid3, rng):
    nx = 17
    f = RealField(RealField.x_grid(nx), rng.normal(size=(nx, grid3.n)), grid3)
    back = from_modes(to_modes(f))
    assert np.abs(back.values - f.values).max() <= 1e-12 * np.abs(f.values).max()


def test_from_modes_single_pair(grid3):
    g = np.exp(-grid3.nodes)
    w = SpectralField.from_profiles(2, grid3, {1: g / 2})
    f = from_modes(w, 8)
    X, Z = np.meshgrid(f.x, grid3.nodes, indexing="ij")
    assert np.abs(f.values - np.cos(X) * np.exp(-Z)).max() < 1e-14
    assert np.all(from_modes(SpectralField.zeros(2, grid3)).values == 0)


def test_reality_and_grid_errors(grid3):
    bad = SpectralField.zeros(1, grid3)
    bad.modes[2] = 1.0
    with pytest.raises(ValueError):
        from_modes(bad)
    x = np.sort(np.random.default_rng(0).uniform(0, 2 * np.pi, 8))
    with pytest.raises(ValueError):
        to_modes(RealField(x, np.zeros((8, grid3.n)), grid3))
    with pytest.raises(ValueError):
        SpectralField(np.zeros((2, grid3.n)), grid3)


def test_dx_is_exact(grid3):
    g = np.exp(-grid3.nodes)
    w = SpectralField.from_profiles(3, grid3, {0: g, 2: (1 + 1j) * g})
    d = differentiate(w, "x")
    assert np.abs(d.mode(0)).max() == 0
    assert np.array_equal(d.mode(2), 2j * (1 + 1j) * g)


def test_dx_commutes_with_transform(grid3):
    nx = 21
    f = RealField.from_function(lambda X, Z: np.exp(np.sin(X)) * np.exp(-Z), nx, grid3)
    df = RealField.from_function(lambda X, Z: np.cos(X) * np.exp(np.sin(X)) * np.exp(-Z), nx, grid3)
    a = differentiate(to_modes(f), "x")
    b = to_modes(df)
    assert np.abs(a.modes - b.modes).max() < 1e-8


def test_dz_fourth_order_under_refinement():
    errs = []
    for n in (101, 201, 401):
        g = stretched_grid(n)
        w = SpectralField.from_profiles(0, g, {0: np.exp(-g.nodes)})
        errs.append(np.abs(differentiate(w, "z").mode(0) + np.exp(-g.nodes)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders.min() >= 3.5


def test_dz_rejects_tiny_grid():
    from slipns.grid import ZGrid
    g = ZGrid(np.array([0.0, 1.0, 2.0, 3.0]), np.ones(4), 3.0, 0.0)
    with pytest.raises(ValueError):
        differentiate(SpectralField.zeros(0, g), "z")


def test_dealiased_product_is_exact(grid3, rng):
    K = 3
    a = rng.normal(size=(K + 1, grid3.n)) + 1j * rng.normal(size=(K + 1, grid3.n))
    a[0] = a[0].real
    f = SpectralField.from_profiles(K, grid3, {k: a[k] for k in range(K + 1)})
    nx = dealiased_nx(K)
    assert nx >= 3 * K + 1
    p = from_modes(f, nx)
    p.values = p.values**2
    got = to_modes(p, K)
    full = np.zeros((2 * K + 1, grid3.n), dtype=complex)
    for i in range(-K, K + 1):
        for j in range(-K, K + 1):
            if abs(i + j) <= K:
                full[i + j + K] += f.mode(i) * f.mode(j)
    assert np.abs(got.modes - full).max() < 1e-12 * np.abs(full).max()
