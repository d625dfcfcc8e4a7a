"""Grid, operator, and quadrature checks against symbolic oracles."""

import numpy as np
import pytest

from spindisk import disk_geometry as dg


def make(n_r=32, n_theta=64):
    return dg.PolarGrid(n_r, n_theta)


def test_grid_layout():
    g = make(16, 32)
    assert g.radii[-1] == 1.0
    assert g.radii[0] > 0
    assert np.all(np.diff(g.radii) > 0)
    with pytest.raises(dg.GridError):
        dg.PolarGrid(3, 32)
    with pytest.raises(dg.GridError):
        dg.PolarGrid(16, 17)


def test_fornberg_weights_centered_first_derivative():
    w = dg.fornberg_weights(np.arange(-2, 3), 0.0, 1)
    assert np.allclose(w, np.array([1, -8, 0, 8, -1]) / 12.0)


def test_dbar_kills_holomorphic():
    g = make()
    z = g.nodes_z()
    res = dg.dbar_apply(g, z ** 2)
    assert np.max(np.abs(res)) < 1e-10


def test_dbar_of_zbar_is_one():
    g = make()
    z = g.nodes_z()
    res = dg.dbar_apply(g, np.conj(z))
    assert np.max(np.abs(res - 1.0)) < 1e-10


def test_dz_of_zzbar_is_zbar():
    g = make()
    z = g.nodes_z()
    res = dg.dz_apply(g, z * np.conj(z))
    assert np.max(np.abs(res - np.conj(z))) < 1e-9


def test_dz_matches_symbolic_transcendental():
    # u = exp(z) * conj(z)^2: du/dz = exp(z) conj(z)^2, du/dzbar = 2 exp(z) conj(z)
    g = make(48, 96)
    z = g.nodes_z()
    u = np.exp(z) * np.conj(z) ** 2
    assert np.max(np.abs(dg.dz_apply(g, u) - u)) < 2e-6
    assert np.max(np.abs(dg.dbar_apply(g, u) - 2 * np.exp(z) * np.conj(z))) < 2e-6


def test_theta_derivative_of_radial_field_is_zero():
    g = make()
    u = np.repeat(g.radii[:, None] ** 2, g.n_theta, axis=1).astype(complex)
    res = g.dtheta_apply(u)
    assert np.max(np.abs(res)) < 1e-13 * max(1.0, np.max(np.abs(u)))


def test_laplacian_harmonic_and_quadratic():
    g = make()
    z = g.nodes_z()
    assert np.max(np.abs(dg.laplacian_apply(g, (z ** 2).real + 0j))) < 1e-9
    res = dg.laplacian_apply(g, (z * np.conj(z)))
    assert np.max(np.abs(res - 4.0)) < 1e-9


def test_metric_laplacian_round():
    # Delta_round |z|^2 = (1+|z|^2)^2 since Delta_flat |z|^2 = 4, lambda = 4/(1+r^2)^2
    g = make()
    z = g.nodes_z()
    met = dg.round_metric(g)
    res = dg.laplacian_apply(g, z * np.conj(z), met)
    expect = (1.0 + np.abs(z) ** 2) ** 2
    assert np.max(np.abs(res - expect)) < 1e-8


def test_gradient_orthonormal_components():
    g = make()
    z = g.nodes_z()
    ux, uy = dg.gradient_apply(g, z * np.conj(z))
    x, y = z.real, z.imag
    assert np.max(np.abs(ux - 2 * x)) < 1e-9
    assert np.max(np.abs(uy - 2 * y)) < 1e-9
    met = dg.round_metric(g)
    vx, vy = dg.gradient_apply(g, z * np.conj(z), met)
    scale = (1.0 + np.abs(z) ** 2) / 2.0
    assert np.max(np.abs(vx - scale * 2 * x)) < 1e-8


def test_boundary_quadrature():
    g = make()
    assert abs(dg.boundary_integral(g, np.ones(g.n_theta)) - 2 * np.pi) < 1e-12
    assert abs(dg.boundary_integral(g, np.exp(1j * g.thetas))) < 1e-12


def test_area_quadrature_flat_and_round():
    g = make()
    one = np.ones((g.n_r, g.n_theta), dtype=complex)
    assert abs(dg.area_integral(g, one) - np.pi) < 1e-10
    # round metric has total area 2*pi (half the unit sphere); the radial
    # rule is 4th order, which at n_r=32 leaves ~1e-6 relative error
    met = dg.round_metric(g)
    assert abs(dg.area_integral(g, one, met) - 2 * np.pi) < 2e-5


def test_area_quadrature_polynomial_moments():
    # int |z|^2 dA = pi/2, int x^2 dA = pi/4
    g = make()
    z = g.nodes_z()
    assert abs(dg.area_integral(g, z * np.conj(z)) - np.pi / 2) < 1e-12
    assert abs(dg.area_integral(g, z.real ** 2 + 0j) - np.pi / 4) < 1e-12


def test_radial_weights_exact_on_odd_cubics():
    g = make(20, 16)
    w = g.radial_weights()
    r = g.radii
    assert abs(np.dot(w, r) - 0.5) < 1e-14
    assert abs(np.dot(w, r ** 3) - 0.25) < 1e-14


def test_operator_self_convergence():
    # measured order of dbar on a non-polynomial field under dyadic refinement
    errs = []
    for n in (16, 32, 64):
        g = make(n, 2 * n)
        z = g.nodes_z()
        u = np.exp(np.conj(z)) * np.sin(z.real)
        truth = np.exp(np.conj(z)) * (np.sin(z.real) + 0.5 * np.cos(z.real))
        errs.append(np.max(np.abs(dg.dbar_apply(g, u) - truth)))
    rate = np.log2(errs[0] / errs[2]) / 2.0
    assert rate > 3.5  # 4th-order radial scheme


def test_integration_by_parts_defect_decays():
    defects = []
    for n in (16, 32):
        g = make(n, 2 * n)
        z = g.nodes_z()
        u = z ** 2 * np.conj(z)
        v = np.exp(-z * np.conj(z))
        lap_u = dg.laplacian_apply(g, u)
        lap_v = dg.laplacian_apply(g, v)
        du = g.radial_derivative(u, 1)[-1]
        dv = g.radial_derivative(v, 1)[-1]
        lhs = (dg.area_integral(g, lap_u * np.conj(v))
               - dg.area_integral(g, u * np.conj(lap_v)))
        bdry = dg.boundary_integral(g, du * np.conj(v[-1]) - u[-1] * np.conj(dv))
        defects.append(abs(lhs - bdry))
    assert defects[1] < defects[0]
    assert defects[1] < 1e-4


def test_radial_derivative_matrix_matches_apply():
    g = make(12, 16)
    rng = np.random.default_rng(0)
    prof = rng.standard_normal(g.n_r) + 1j * rng.standard_normal(g.n_r)
    for k in (0, 1, 5):
        u = prof[:, None] * np.exp(1j * k * g.thetas)[None, :]
        direct = g.radial_derivative(u, 1)
        mat = g.radial_derivative_matrix(1, (-1) ** k)
        modal = (mat @ prof)[:, None] * np.exp(1j * k * g.thetas)[None, :]
        assert np.max(np.abs(direct - modal)) < 1e-10 * np.max(np.abs(mat))


def test_field_roundtrip(tmp_path):
    g = make(8, 16)
    u = g.nodes_z() ** 2 + 1j
    p = tmp_path / "field.csv"
    dg.save_field(p, g, u, "round")
    g2, u2, preset = dg.load_field(p)
    assert (g2.n_r, g2.n_theta) == (8, 16)
    assert preset == "round"
    assert np.array_equal(u, u2)
