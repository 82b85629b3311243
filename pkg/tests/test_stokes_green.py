import numpy as np
import pytest
from scipy.integrate import quad

from slipns.grid import ZGrid
from slipns.harness.kernel_audits import (contour_independence, kernel_bound_audit, case_family_for,
                                          resolvent_point_audit, residue_audit)
from slipns.stokes_green import (BranchCutError, ContourError, ContourSpec, KernelCache, ResolventQuery,
                                 build_kernel_table, heat_application_weights, load_table, mu_branch, mu_of,
                                 resolvent_kernel, save_table, temporal_heat_kernel, temporal_residual_kernel)


def test_mu_special_values():
    assert mu_branch(ResolventQuery(0.0, 3, 1e-3)) == pytest.approx(3.0, abs=1e-15)
    nu, a = 1e-3, 4
    assert mu_branch(ResolventQuery(-a * a * nu + 1.0, a, nu)) == pytest.approx(nu**-0.5, rel=1e-12)


def test_mu_principal_branch_sweep(rng):
    nu = 10 ** rng.uniform(-5, -1, 10_000)
    a = rng.integers(0, 33, 10_000)
    r = 10 ** rng.uniform(-6, 3, 10_000)
    th = rng.uniform(-0.999, 0.999, 10_000) * np.pi
    lam = r * np.exp(1j * th) - a * a * nu
    mu = np.array([mu_of(l, ai, n) for l, ai, n in zip(lam, a, nu)])
    assert np.all(mu.real > 0)


def test_branch_cut_rejected():
    with pytest.raises(BranchCutError):
        mu_branch(ResolventQuery(-1.0, 2, 0.1))
    with pytest.raises(ValueError):
        ResolventQuery(1.0, 1, -1.0)


def test_residue_vanishes_linearly_in_small_regime():
    for row in residue_audit(alphas=(1, 4, 16), nus=(1e-2,), ks=range(5, 9)):
        # lam <= 1e-2 a^2 nu here: the ratio |P|/lam is constant to 1%
        assert row["residual"] < 0.01
        assert abs(row["slope"] - 1.0) < 0.01


@pytest.mark.parametrize("lam,a,nu,beta", [(1.0 + 0.5j, 1, 1e-3, 1.0), (-2e-3 + 1e-2j, 4, 1e-4, 0.5),
                                           (0.3j, 0, 1e-2, 0.0), (5.0 - 1.0j, 16, 1e-5, 1.0)])
def test_resolvent_pde_and_boundary(lam, a, nu, beta):
    q = ResolventQuery(lam, a, nu, beta)
    y = 1.0 / abs(mu_branch(q))
    res = resolvent_point_audit(q, y)
    assert res["pde"] <= 1e-6
    assert res["bc"] <= 1e-8
    assert res["solve_gap"] <= 1e-8


def test_resolvent_is_meromorphic():
    lam, a, nu, z, y = 0.7 + 0.4j, 2, 1e-2, 0.3, 0.5
    h = 1e-4 * abs(lam)

    def R(l):
        return resolvent_kernel(ResolventQuery(l, a, nu), z, y)[1]

    d_re = (R(lam + h) - R(lam - h)) / (2 * h)
    d_im = (R(lam + 1j * h) - R(lam - 1j * h)) / (2j * h)
    assert abs(d_re - d_im) <= 1e-6 * abs(d_re)


def test_heat_kernel_values():
    assert temporal_heat_kernel(1.0, 1.0 / (4 * np.pi), 0, 0.0, 0.0) == pytest.approx(2.0, rel=1e-14)
    for y in (0.0, 0.05, 1.0, 10.0):
        mass = quad(lambda z: temporal_heat_kernel(0.5, 1e-3, 0, z, y), 0.0, y + 2.0, points=[y],
                    epsabs=0.0, epsrel=1e-12, limit=200)[0]
        assert abs(mass - 1.0) < 1e-8
    with pytest.raises(ValueError):
        temporal_residual_kernel(0.0, 1e-3, 1, 0.1, 0.1)


def test_heat_table_rows_conserve_mass(grid3):
    rows = heat_application_weights(0.3, 1e-3, grid3).sum(axis=1)
    inner = grid3.nodes < 0.5 * grid3.L
    assert np.abs(rows[inner] - 1.0).max() < 1e-8


def test_contour_families_agree(rng):
    res = contour_independence(20, rng)
    assert res["max"] <= 1e-8
    with pytest.raises(ContourError):
        temporal_residual_kernel(0.5, 1e-2, 1, 0.1, 0.1, ContourSpec("gamma1"))
    with pytest.raises(ContourError):
        ContourSpec("hyperbola")
    fam = case_family_for(0.5, 1e-2, 64, 0.0)
    assert fam.family in ("gamma1", "gamma2")


def test_kernel_bound_small_sweep():
    res = kernel_bound_audit((1e-2, 0.3), (1e-4, 1e-2), (0, 4, 32), n_grid=101)
    assert res["fit"].theta0 > 0
    assert res["holdout_violations"] == 0


def test_table_is_finite_and_tends_to_identity(grid3):
    tab = build_kernel_table(0.2, 1e-3, 2, grid3, pointwise=True)
    assert np.all(np.isfinite(tab.weights)) and np.all(np.isfinite(tab.residual_part))
    z = grid3.nodes
    f = np.exp(-z) * (1 + np.sin(z))
    # add a wall bump so the data satisfy the wall condition; otherwise an initial layer appears
    bump = np.exp(-z / 0.01)
    f = f - bump * (1e-3 * f[0] + grid3.integrate(np.exp(-z) * f)) / (1e-3 + grid3.integrate(np.exp(-z) * bump))
    near = build_kernel_table(1e-6, 1e-3, 1, grid3, pointwise=False)
    err = grid3.integrate(np.abs(near.apply(f) - f)) / grid3.integrate(np.abs(f))
    assert err <= 1e-4
    with pytest.raises(ValueError):
        build_kernel_table(0.0, 1e-3, 1, grid3)
    with pytest.raises(ContourError):
        build_kernel_table(0.2, 1e-3, 1, grid3, ContourSpec("gamma_pm_c"))


def test_cache_roundtrip_and_eviction(tmp_path, grid3):
    cache = KernelCache(tmp_path, maxsize=2)
    a = cache.get(0.1, 1e-3, 1, grid3)
    assert cache.get(0.1, 1e-3, 1, grid3) is a
    cache.get(0.2, 1e-3, 1, grid3)
    cache.get(0.3, 1e-3, 1, grid3)
    assert len(cache) == 2
    assert len(list(tmp_path.glob("*.npz"))) == 3
    fresh = KernelCache(tmp_path)
    b = fresh.get(0.1, 1e-3, 1, grid3)
    assert np.array_equal(a.weights, b.weights)
    path = tmp_path / "t.npz"
    save_table(a, path)
    with pytest.raises(ValueError):
        load_table(path, ZGrid.graded(401, 1e-4))
