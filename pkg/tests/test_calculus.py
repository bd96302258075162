import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anisphere.calculus import (
    ScalarField,
    grad,
    hess,
    ibp_residual,
    integrate,
    laplace,
    ma_bilinear,
    monge_ampere,
    random_band_limited,
    real_sph_harm,
)
from anisphere.errors import MeshMismatchError


def coord(mesh, i):
    return ScalarField(mesh, mesh.vertices[:, i])


def test_grad_constant(mesh):
    f = ScalarField(mesh, np.full(mesh.n_vertices, 3.7))
    assert np.abs(grad(f).components).max() <= 1e-10
    assert np.abs(hess(f).comps).max() <= 1e-10
    assert np.abs(laplace(f).values).max() <= 1e-10


def test_grad_coordinate_function(mesh, mesh4):
    # spherical gradient of nu3 is the tangential projection of e3
    errs = {}
    for m in (mesh4, mesh):
        f = coord(m, 2)
        g = grad(f).as_vectors()
        exact = np.array([0.0, 0.0, 1.0]) - m.vertices[:, 2][:, None] * m.vertices
        errs[m.subdivisions] = np.abs(g - exact).max()
    assert errs[mesh.subdivisions] <= 1e-4
    assert errs[4] / errs[mesh.subdivisions] >= 3.0  # at least O(h^2)


def test_grad_l2_harmonic(mesh):
    # f = nu1 nu2: gradient is the projection of (nu2, nu1, 0)
    n = mesh.vertices
    f = ScalarField(mesh, n[:, 0] * n[:, 1])
    g = grad(f).as_vectors()
    amb = np.stack([n[:, 1], n[:, 0], np.zeros(len(n))], axis=1)
    exact = amb - (2 * n[:, 0] * n[:, 1])[:, None] * n
    assert np.abs(g - exact).max() <= 1e-4


def test_hess_coordinate_function(mesh):
    # covariant Hessian of nu3 is -nu3 * I in orthonormal frames
    f = coord(mesh, 2)
    H = hess(f)
    target = np.stack([-f.values, np.zeros_like(f.values), -f.values], axis=1)
    assert np.abs(H.comps - target).max() <= 5e-3


def test_hess_symmetric_storage(mesh, rng):
    f = ScalarField(mesh, rng.normal(size=mesh.n_vertices))
    M = hess(f).as_matrices()
    assert np.abs(M[:, 0, 1] - M[:, 1, 0]).max() <= 1e-10


def test_trace_hess_is_laplace(mesh, rng):
    f = random_band_limited(mesh, 4, 5)
    assert np.abs(hess(f).trace - laplace(f).values).max() <= 1e-10


@pytest.mark.parametrize("l", [1, 2, 3])
def test_laplace_eigenvalues(mesh, l):
    for m_ord in range(-l, l + 1):
        y = real_sph_harm(l, m_ord, mesh.vertices)
        lap = laplace(ScalarField(mesh, y)).values
        rel = np.abs(lap + l * (l + 1) * y).max() / (l * (l + 1) * np.abs(y).max())
        assert rel <= 1e-2


def test_mesh_mismatch(mesh, mesh4):
    f = ScalarField(mesh, np.ones(mesh.n_vertices))
    g = ScalarField(mesh4, np.ones(mesh4.n_vertices))
    with pytest.raises(MeshMismatchError):
        ma_bilinear(f, g)


def test_integrate_constant(mesh):
    one = ScalarField(mesh, np.ones(mesh.n_vertices))
    assert abs(integrate(one) - 4 * np.pi) <= 1e-10


def test_integrate_odd(mesh):
    assert abs(integrate(coord(mesh, 2))) <= 1e-10


def test_integrate_moment(mesh):
    f = ScalarField(mesh, mesh.vertices[:, 2] ** 2)
    assert abs(integrate(f) - 4 * np.pi / 3) / (4 * np.pi / 3) <= 1e-3


def test_harmonics_orthonormal(mesh):
    pairs = [(0, 0), (1, 0), (2, 1), (3, -2)]
    for i, (l1, m1) in enumerate(pairs):
        y1 = real_sph_harm(l1, m1, mesh.vertices)
        for l2, m2 in pairs[i:]:
            y2 = real_sph_harm(l2, m2, mesh.vertices)
            val = integrate(ScalarField(mesh, y1 * y2))
            expected = 1.0 if (l1, m1) == (l2, m2) else 0.0
            assert abs(val - expected) <= 2e-3


def test_monge_ampere_constant(mesh):
    f = ScalarField(mesh, np.full(mesh.n_vertices, 2.0))
    assert np.abs(monge_ampere(f).values).max() <= 1e-10


@pytest.mark.parametrize("i", [0, 2])
def test_monge_ampere_coordinate(mesh, i):
    # hess(nu_i) = -nu_i g gives M[nu_i] = det = nu_i^2
    f = coord(mesh, i)
    ma = monge_ampere(f)
    assert np.abs(ma.values - f.values ** 2).max() <= 1e-2


def test_ma_bilinear_diagonal(mesh):
    u = random_band_limited(mesh, 3, 21)
    assert np.abs(ma_bilinear(u, u).values - 2 * monge_ampere(u).values).max() <= 1e-9


def test_ma_bilinear_symmetric(mesh):
    u = random_band_limited(mesh, 4, 31)
    w = random_band_limited(mesh, 4, 32)
    assert np.abs(ma_bilinear(u, w).values - ma_bilinear(w, u).values).max() <= 1e-9


def test_ma_bilinear_constant_direction(mesh):
    u = random_band_limited(mesh, 3, 33)
    c = ScalarField(mesh, np.full(mesh.n_vertices, 1.3))
    assert np.abs(ma_bilinear(u, c).values).max() <= 1e-9


def test_ma_bilinear_fd_oracle(mesh):
    # centered finite difference of t -> M[u + t w] at t = 0, step 1e-5
    u = random_band_limited(mesh, 3, 34)
    w = random_band_limited(mesh, 3, 35)
    t = 1e-5
    up = ScalarField(mesh, u.values + t * w.values)
    um = ScalarField(mesh, u.values - t * w.values)
    fd = (monge_ampere(up).values - monge_ampere(um).values) / (2 * t)
    got = ma_bilinear(u, w).values
    scale = max(np.abs(got).max(), 1.0)
    assert np.abs(got - fd).max() / scale <= 1e-4


def test_ma_bilinear_coordinate(mesh):
    f = coord(mesh, 2)
    got = ma_bilinear(f, f).values
    assert np.abs(got - 2 * f.values ** 2).max() <= 2e-2


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_ma_bilinear_symmetry_property(mesh3, seed):
    u = random_band_limited(mesh3, 3, seed)
    w = random_band_limited(mesh3, 3, seed + 1)
    assert np.abs(ma_bilinear(u, w).values - ma_bilinear(w, u).values).max() <= 1e-9


def test_ibp_constants(mesh3):
    c = lambda v: ScalarField(mesh3, np.full(mesh3.n_vertices, v))
    assert ibp_residual(c(1.0), c(2.0), c(-0.5)) <= 1e-12


def test_ibp_coordinates(mesh):
    u, w, z = coord(mesh, 2), coord(mesh, 0), coord(mesh, 1)
    assert ibp_residual(u, w, z) <= 1e-3


def test_ibp_band_limited_refinement(mesh_cache):
    # l <= 4, unit +-1 coefficients, seed 42: residual decreasing O(h^2)
    res = []
    for s in (3, 4, 5):
        m = mesh_cache(s)
        u = random_band_limited(m, 4, 42)
        w = random_band_limited(m, 4, 43)
        z = random_band_limited(m, 4, 44)
        res.append(ibp_residual(u, w, z))
    assert res[0] > res[1] > res[2]
    assert res[0] / res[1] >= 2.5
    assert res[1] / res[2] >= 2.5
