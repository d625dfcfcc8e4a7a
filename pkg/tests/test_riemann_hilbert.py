"""Oracle tests for the complex-analytic engine.

Expected values for the Cauchy and Riemann-Hilbert examples come from
residue calculus done independently of the implementation:

  * density zeta^2, |z|<1          -> z^2            (Cauchy formula)
  * density zeta^{-1}: inside 0 (residues at 0 and z cancel), outside -1/z
  * density 1/(zeta-2), |z|<1      -> 1/(z-2)        (pole outside)
  * symbol zeta^{-1}: gamma = 0, so the pair is read off the interior and
    exterior Cauchy values of f itself.
"""

import numpy as np
import pytest

from spindisk import disk_geometry as dg
from spindisk import riemann_hilbert as rh
from spindisk.dirac_solver import MapData, map_preset

GRID = dg.PolarGrid(32, 128)
ZETA = GRID.boundary_z()


# -- winding index ------------------------------------------------------------

def test_winding_monomials():
    assert rh.winding_index(1.0 / ZETA) == -1
    assert rh.winding_index(ZETA ** 3) == 3
    assert rh.winding_index(3.0 + ZETA) == 0


def test_winding_argument_principle_rational():
    # (zeta - a)(zeta - b)/zeta with |a|<1<|b|: one zero in, one pole in -> 0
    sym = (ZETA - 0.4) * (ZETA - 2.5) / ZETA
    assert rh.winding_index(sym) == 0


def test_winding_rejects_vanishing_and_undersampled():
    with pytest.raises(rh.SymbolError):
        rh.winding_index(ZETA - ZETA)  # identically zero
    with pytest.raises(rh.SymbolError):
        coarse = np.exp(1j * 2 * np.pi * 8 * np.arange(16) / 16)  # z^8 on 16 pts
        rh.winding_index(coarse)  # sample-to-sample jump is exactly pi
    with pytest.raises(rh.SymbolError):
        rh.BoundarySymbol(np.array([1.0, 0.0, 1.0, 1.0]))


# -- cauchy integral ----------------------------------------------------------

def test_cauchy_formula_interior():
    z0 = 0.3 + 0.1j
    val = rh.cauchy_integral(ZETA ** 2, z0)
    assert abs(val - z0 ** 2) < 1e-12


def test_cauchy_zbar_density():
    inside = rh.cauchy_integral(1.0 / ZETA, 0.2 - 0.4j)
    assert abs(inside) < 1e-12
    z_out = 1.7 + 0.5j
    outside = rh.cauchy_integral(1.0 / ZETA, z_out)
    assert abs(outside - (-1.0 / z_out)) < 1e-12


def test_cauchy_exterior_pole_density():
    z0 = -0.5 + 0.2j
    val = rh.cauchy_integral(1.0 / (ZETA - 2.0), z0)
    assert abs(val - 1.0 / (z0 - 2.0)) < 1e-12


def test_cauchy_near_boundary_upsampling():
    # quadrature error ~ exp(-m*dist) with m = factor*n; the 64x cap yields
    # ~3e-4 at dist 1e-3 and full precision at dist 5e-3 (m*d = 41)
    f = ZETA ** 3 + 2.0
    z1 = (1.0 - 5e-3) * np.exp(0.7j)
    assert abs(rh.cauchy_integral(f, z1) - (z1 ** 3 + 2.0)) < 1e-9
    z2 = (1.0 - 1e-3) * np.exp(0.7j)
    assert abs(rh.cauchy_integral(f, z2) - (z2 ** 3 + 2.0)) < 5e-3
    # without upsampling the same target is hopeless: error O(1)
    zeta = ZETA
    plain = (f * zeta / (zeta - z2)).sum() / len(zeta)
    assert abs(plain - (z2 ** 3 + 2.0)) > 0.1


def test_cauchy_rejects_boundary_target():
    with pytest.raises(rh.TargetError):
        rh.cauchy_integral(ZETA, np.exp(0.3j))


def test_plemelj_jump_across_boundary():
    # density analytic across the circle: interior value is f(z) exactly and
    # the exterior value vanishes, so the jump at a reflected near-boundary
    # pair recovers the density up to the O(eps) boundary-limit error
    fn = lambda w: np.exp(w) / (2.0 + w)
    f = fn(ZETA)
    eps = 4e-3
    z_in = (1.0 - eps) * np.exp(1.1j)
    z_out = 1.0 / np.conj(z_in)
    v_in = rh.cauchy_integral(f, z_in)
    v_out = rh.cauchy_integral(f, z_out)
    assert abs(v_in - fn(z_in)) < 1e-10
    assert abs(v_out) < 1e-10
    jump = v_in - v_out
    assert abs(jump - fn(np.exp(1.1j))) < 10 * eps


def test_modal_interior_matches_quadrature():
    f = np.exp(ZETA) + 1.0 / (ZETA - 3.0)
    fhat = np.fft.fft(f) / GRID.n_theta
    rings = rh.cauchy_modal_interior(GRID, fhat)
    for j in (0, 10, GRID.n_r - 2):
        targets = GRID.radii[j] * np.exp(1j * GRID.thetas)
        quad = rh.cauchy_integral(f, targets)
        assert np.max(np.abs(rings[j] - quad)) < 1e-11


# -- schwarz operator ---------------------------------------------------------

def test_schwarz_constant_and_cos():
    assert abs(rh.schwarz_operator(np.ones(GRID.n_theta), 0.3 + 0.2j) - 1.0) < 1e-12
    val = rh.schwarz_operator(np.cos(GRID.thetas), 0.25 - 0.3j)
    assert abs(val - (0.25 - 0.3j)) < 1e-12


def test_schwarz_reproduces_boundary_data():
    rng = np.random.default_rng(3)
    c = rng.standard_normal(5)
    h = sum(c[k] * np.cos((k + 1) * GRID.thetas) for k in range(5)) \
        + 0.3 * np.sin(2 * GRID.thetas)
    vals = rh.schwarz_on_grid(GRID, h)
    assert np.max(np.abs(vals[-1].real - h)) < 1e-12
    assert abs(rh.schwarz_operator(h, 0.0).imag) < 1e-12
    # interior values are harmonic extensions: check against Poisson kernel
    r0, t0 = 0.77, 1.3
    pk = (1 - r0 ** 2) / (1 - 2 * r0 * np.cos(t0 - GRID.thetas) + r0 ** 2)
    poisson = np.mean(pk * h)
    assert abs(rh.schwarz_operator(h, r0 * np.exp(1j * t0)).real - poisson) < 1e-10


# -- area transform -----------------------------------------------------------

def test_area_transform_zero_density():
    out = rh.area_cauchy_transform(GRID, GRID.zeros(), np.array([0.1 + 0.2j]))
    assert np.max(np.abs(out)) == 0.0


def test_area_transform_constant_closed_form():
    # T(c) = c zbar - conj(c) z exactly (both quadrature routes)
    c = 0.7 - 0.4j
    w = np.full((GRID.n_r, GRID.n_theta), c, dtype=complex)
    z = GRID.nodes_z()
    expect = c * np.conj(z) - np.conj(c) * z
    fast = rh.area_transform_on_grid(GRID, w)
    assert np.max(np.abs(fast - expect)) < 1e-10
    pts = np.array([0.3 + 0.1j, -0.8j, 0.95 * np.exp(2.2j)])
    naive = rh.area_cauchy_transform(GRID, w, pts)
    assert np.max(np.abs(naive - (c * np.conj(pts) - np.conj(c) * pts))) < 1e-10


def test_fast_path_matches_naive_quadrature():
    g = dg.PolarGrid(10, 16)
    z = g.nodes_z()
    w = np.conj(z) * np.exp(0.3 * z)
    fast = rh.area_transform_on_grid(g, w)
    naive = rh.area_cauchy_transform(
        g, w, z.ravel(), w_at_targets=w.ravel()).reshape(z.shape)
    assert np.max(np.abs(fast - naive)) < 1e-12


def test_area_transform_manufactured_solution():
    # T(2 zbar) = zbar^2 - z^2 exactly: Re vanishes identically, Im(0) = 0.
    # The rule is second order in the field values and first order in the
    # dbar residual (the subtracted integrand is Lipschitz at the target).
    g = dg.PolarGrid(48, 96)
    z = g.nodes_z()
    w = 2.0 * np.conj(z)
    t = rh.area_transform_on_grid(g, w)
    exact = np.conj(z) ** 2 - z ** 2
    assert np.max(np.abs(t - exact)) < 3e-3
    res = dg.dbar_apply(g, t) - w
    assert np.max(np.abs(res[: g.n_r - 2])) < 3e-2  # one-sided edge rows excluded
    assert np.max(np.abs(t[-1].real)) < 1e-10
    assert abs(t.imag[0].mean()) < 1e-8  # Im T(0) = 0 by the radial limit


def test_area_transform_dbar_residual_decays():
    errs = []
    for n in (16, 32, 64):
        g = dg.PolarGrid(n, 2 * n)
        z = g.nodes_z()
        w = np.conj(z) ** 2 * np.exp(0.5 * z.real)
        t = rh.area_transform_on_grid(g, w)
        res = dg.dbar_apply(g, t) - w
        errs.append(np.max(np.abs(res[: n - 2])))
    assert errs[2] < errs[0] / 3.0


# -- g problem ----------------------------------------------------------------

def test_g_problem_trivial_data():
    met = dg.flat_metric(GRID)
    m = map_preset(GRID, "id", "flat")
    g = rh.solve_g_problem(GRID, met, m)
    assert np.max(np.abs(g)) < 1e-13


def test_g_problem_holomorphic_map_round_target():
    # rho = round, phi = id: boundary datum log rho(phi)^(1/2) = 0 and the
    # dbar data vanishes, so g = 0
    met = dg.flat_metric(GRID)
    m = map_preset(GRID, "id", "round")
    g = rh.solve_g_problem(GRID, met, m)
    assert np.max(np.abs(g)) < 1e-12


def test_g_problem_residual_contract():
    g_grid = dg.PolarGrid(48, 96)
    met = dg.round_metric(g_grid)
    m = map_preset(g_grid, "warp", "round")
    g = rh.solve_g_problem(g_grid, met, m)
    rhs = 0.25 * met.dlog_lambda_zbar + m.dlog_rho_dphi * m.dphi_zbar
    res = dg.dbar_apply(g_grid, g) - rhs
    assert np.max(np.abs(res[: g_grid.n_r - 2])) < 2e-3
    target = 0.25 * np.log(met.lam[-1]) + 0.5 * np.log(m.rho_at_phi[-1].real)
    assert np.max(np.abs(g[-1].real - target)) < 1e-8
    assert abs(g.imag[0].mean()) < 1e-7


# -- index -1 Riemann-Hilbert solver -------------------------------------------

def test_rh_constant_data():
    pair = rh.rh_solve_index_minus_one(GRID, 1.0 / ZETA, np.ones(GRID.n_theta))
    assert np.max(np.abs(pair.a_plus - 1.0)) < 1e-12
    assert np.max(np.abs(pair.a_minus)) < 1e-12
    assert rh.rh_boundary_residual(GRID, pair, 1.0 / ZETA,
                                   np.ones(GRID.n_theta)) < 1e-12


def test_rh_zeta_inverse_data():
    pair = rh.rh_solve_index_minus_one(GRID, 1.0 / ZETA, 1.0 / ZETA)
    assert np.max(np.abs(pair.a_plus)) < 1e-12
    assert np.max(np.abs(pair.a_minus + 1.0)) < 1e-12


def test_rh_zeta_data():
    pair = rh.rh_solve_index_minus_one(GRID, 1.0 / ZETA, ZETA)
    z = GRID.nodes_z()
    assert np.max(np.abs(pair.a_plus - z)) < 1e-12
    assert np.max(np.abs(pair.a_minus)) < 1e-12


def test_rh_generic_symbol_residual_and_holomorphy():
    # index -1 symbol with nontrivial modulus and phase
    sym = (2.0 + 0.3 * ZETA + 0.1j * ZETA ** 2) / ZETA
    f = np.exp(ZETA) - 0.4j / (ZETA + 2.0)
    pair = rh.rh_solve_index_minus_one(GRID, sym, f)
    assert rh.rh_boundary_residual(GRID, pair, sym, f) < 1e-10
    # dbar of the returned fields: pure differentiation error, 4th order
    defects = []
    for g in (GRID, dg.PolarGrid(64, 128)):
        zg = g.boundary_z()
        symg = (2.0 + 0.3 * zg + 0.1j * zg ** 2) / zg
        fg = np.exp(zg) - 0.4j / (zg + 2.0)
        pg = rh.rh_solve_index_minus_one(g, symg, fg)
        defects.append(max(np.max(np.abs(dg.dbar_apply(g, pg.a_plus)[: g.n_r - 2])),
                           np.max(np.abs(dg.dbar_apply(g, pg.a_minus)[: g.n_r - 2]))))
    assert defects[0] < 5e-6
    assert defects[1] < defects[0] / 6.0


def test_rh_uniqueness_sanity():
    sym = 1.0 / ZETA
    f = np.exp(ZETA)
    pair = rh.rh_solve_index_minus_one(GRID, sym, f)
    base = rh.rh_boundary_residual(GRID, pair, sym, f)
    shifted = rh.HolomorphicPair(pair.a_plus + 0.05, pair.a_minus)
    assert rh.rh_boundary_residual(GRID, shifted, sym, f) > 100 * max(base, 1e-14)
    shifted2 = rh.HolomorphicPair(pair.a_plus, pair.a_minus + 0.05j)
    assert rh.rh_boundary_residual(GRID, shifted2, sym, f) > 100 * max(base, 1e-14)


def test_rh_wrong_index_rejected():
    with pytest.raises(rh.SymbolError):
        rh.rh_solve_index_minus_one(GRID, ZETA, np.ones(GRID.n_theta))


def test_rh_norm_bound_stability():
    # ||A||_inf <= C ||f||_inf with C stable across refinement
    ratios = []
    for n in (64, 128):
        g = dg.PolarGrid(16, n)
        zeta = g.boundary_z()
        sym = (1.5 + 0.4 * zeta) / zeta
        f = np.cos(3 * g.thetas) + 0.5j * np.sin(g.thetas)
        pair = rh.rh_solve_index_minus_one(g, sym, f)
        amax = max(np.max(np.abs(pair.a_plus)), np.max(np.abs(pair.a_minus)))
        ratios.append(amax / np.max(np.abs(f)))
    assert 0.5 < ratios[1] / ratios[0] < 2.0
