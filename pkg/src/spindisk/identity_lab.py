"""Numerical verification of spinor functional identities on the disk.

All checks run on the plain spin bundle over (D, lambda |dz|^2): the four
component fields split into two chirality pairs that carry the same metric
connection.  In complex directions the spin connection acts with opposite
sign on the two chirality components,

    nabla_z      (f+, f-) = (d_z f+ - c_z f+,    d_z f- + c_z f-)
    nabla_zbar   (f+, f-) = (d_zbar f+ + c_zbar f+, d_zbar f- - c_zbar f-)

with c = (log lambda)/4 derivatives; this is the unique metric choice whose
Dirac operator is the block operator of dirac_apply, and it closes the
twistor and Weitzenboeck identities with curvature term (K/2) Id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import disk_geometry as dg
from .disk_geometry import (PolarGrid, ConformalDiskMetric, area_integral,
                            boundary_integral, dz_apply, dbar_apply,
                            poisson_dirichlet_solve)
from .dirac_solver import (SpinorField, DiscreteDiracSolver, CouplingForm,
                           dirac_apply)


@dataclass
class IdentityDefect:
    name: str
    lhs: float
    rhs: float
    defect: float
    grid_size: tuple
    sup_defect: float = 0.0


def _pairs(psi: SpinorField):
    return ((psi.f_plus, psi.f_minus), (psi.ft_plus, psi.ft_minus))


def spinor_inner(a: SpinorField, b: SpinorField) -> np.ndarray:
    """Pointwise Hermitian fiber product, conjugate-linear in b."""
    return sum(x * np.conj(y) for x, y in zip(a.components(), b.components()))


def nabla_complex(grid: PolarGrid, metric: ConformalDiskMetric,
                  psi: SpinorField, direction: str) -> SpinorField:
    """Spin covariant derivative along d_z or d_zbar."""
    if direction == "z":
        cz = 0.25 * metric.dlog_lambda_z
        out = []
        for u, v in _pairs(psi):
            out.append(dz_apply(grid, u) - cz * u)
            out.append(dz_apply(grid, v) + cz * v)
    else:
        czb = 0.25 * metric.dlog_lambda_zbar
        out = []
        for u, v in _pairs(psi):
            out.append(dbar_apply(grid, u) + czb * u)
            out.append(dbar_apply(grid, v) - czb * v)
    return SpinorField(*out)


def nabla_frame(grid: PolarGrid, metric: ConformalDiskMetric, psi: SpinorField):
    """Covariant derivatives along the orthonormal frame (e1, e2)."""
    dz_psi = nabla_complex(grid, metric, psi, "z")
    dzb_psi = nabla_complex(grid, metric, psi, "zbar")
    scale = 1.0 / np.sqrt(metric.lam)
    n1 = SpinorField(*[scale * (a + b) for a, b in
                       zip(dz_psi.components(), dzb_psi.components())])
    n2 = SpinorField(*[1j * scale * (a - b) for a, b in
                       zip(dz_psi.components(), dzb_psi.components())])
    return n1, n2


def clifford_e_apply(psi: SpinorField, which: int) -> SpinorField:
    """Blockwise action of E1 or E2 on a four-component field."""
    out = []
    for u, v in _pairs(psi):
        if which == 1:
            out.extend([-v, u])
        else:
            out.extend([1j * v, 1j * u])
    return SpinorField(*out)


def normal_clifford_boundary(psi_b):
    """n. on boundary traces: (u, v) -> (-conj(z) v, z u) blockwise."""
    u, v, ut, vt = psi_b
    z = np.exp(1j * np.linspace(0, 2 * np.pi, len(u), endpoint=False))
    return (-np.conj(z) * v, z * u, -np.conj(z) * vt, z * ut)


def twistor_apply(grid: PolarGrid, metric: ConformalDiskMetric,
                  psi: SpinorField):
    """P_X psi = nabla_X psi + (1/2) X . D psi along the frame directions."""
    n1, n2 = nabla_frame(grid, metric, psi)
    dpsi = dirac_apply(grid, metric, None, psi)
    e1d = clifford_e_apply(dpsi, 1)
    e2d = clifford_e_apply(dpsi, 2)
    p1 = SpinorField(*[a + 0.5 * b for a, b in
                       zip(n1.components(), e1d.components())])
    p2 = SpinorField(*[a + 0.5 * b for a, b in
                       zip(n2.components(), e2d.components())])
    return p1, p2


def connection_laplacian(grid: PolarGrid, metric: ConformalDiskMetric,
                         psi: SpinorField) -> SpinorField:
    """Rough Laplacian (2/lambda)(nabla_z nabla_zbar + nabla_zbar nabla_z);
    the conformal Christoffels vanish in the mixed direction."""
    a = nabla_complex(grid, metric, nabla_complex(grid, metric, psi, "zbar"), "z")
    b = nabla_complex(grid, metric, nabla_complex(grid, metric, psi, "z"), "zbar")
    scale = 2.0 / metric.lam
    return SpinorField(*[scale * (x + y) for x, y in
                         zip(a.components(), b.components())])


# -- the checks ---------------------------------------------------------------

def check_green(grid: PolarGrid, metric: ConformalDiskMetric,
                psi: SpinorField, phi: SpinorField) -> IdentityDefect:
    """int <D psi, phi> = int <psi, D phi> + oint <n.psi, phi>."""
    dpsi = dirac_apply(grid, metric, None, psi)
    dphi = dirac_apply(grid, metric, None, phi)
    lhs = area_integral(grid, spinor_inner(dpsi, phi), metric)
    rhs_i = area_integral(grid, spinor_inner(psi, dphi), metric)
    psi_b = [c[-1] for c in psi.components()]
    phi_b = [c[-1] for c in phi.components()]
    npsi = normal_clifford_boundary(psi_b)
    integrand = sum(a * np.conj(b) for a, b in zip(npsi, phi_b))
    rhs_b = boundary_integral(grid, integrand, metric)
    defect = abs(lhs - rhs_i - rhs_b)
    return IdentityDefect("green", abs(lhs), abs(rhs_i + rhs_b), defect,
                          (grid.n_r, grid.n_theta))


def check_twistor(grid: PolarGrid, metric: ConformalDiskMetric,
                  psi: SpinorField) -> IdentityDefect:
    """|nabla psi|^2 = |P psi|^2 + (1/2)|D psi|^2 pointwise (m = 2)."""
    n1, n2 = nabla_frame(grid, metric, psi)
    p1, p2 = twistor_apply(grid, metric, psi)
    dpsi = dirac_apply(grid, metric, None, psi)
    lhs_f = n1.norm_sq() + n2.norm_sq()
    rhs_f = p1.norm_sq() + p2.norm_sq() + 0.5 * dpsi.norm_sq()
    pointwise = np.abs(lhs_f - rhs_f)
    lhs = area_integral(grid, lhs_f, metric).real
    rhs = area_integral(grid, rhs_f, metric).real
    return IdentityDefect("twistor", lhs, rhs, abs(lhs - rhs),
                          (grid.n_r, grid.n_theta),
                          sup_defect=float(np.max(pointwise)))


def check_weitzenbock(grid: PolarGrid, metric: ConformalDiskMetric,
                      psi: SpinorField) -> IdentityDefect:
    """D^2 = -nabla^2 + (K/2) on the spin bundle of a surface."""
    d2 = dirac_apply(grid, metric, None, dirac_apply(grid, metric, None, psi))
    rough = connection_laplacian(grid, metric, psi)
    curv = 0.5 * metric.gauss_curvature
    res = SpinorField(*[a + b - curv * c for a, b, c in
                        zip(d2.components(), rough.components(), psi.components())])
    l2 = np.sqrt(area_integral(grid, res.norm_sq(), metric).real)
    scale = np.sqrt(area_integral(grid, d2.norm_sq() + psi.norm_sq(), metric).real)
    return IdentityDefect("weitzenbock", l2, 0.0, l2,
                          (grid.n_r, grid.n_theta), sup_defect=res.sup())


def boundary_projector_norm_sq(grid: PolarGrid, psi_b, sign: int) -> np.ndarray:
    """|B^sign psi|^2 on the boundary: (1/2)|u + sign conj(z) v|^2 per pair."""
    z = grid.boundary_z()
    u, v, ut, vt = psi_b
    return 0.5 * (np.abs(u + sign * np.conj(z) * v) ** 2
                  + np.abs(ut + sign * np.conj(z) * vt) ** 2)


def check_prop31(grid: PolarGrid, metric: ConformalDiskMetric,
                 psi: SpinorField, sign: int = 1) -> IdentityDefect:
    """|oint (|psi|^2 - 2|B psi|^2)| <= 2 ||psi||_2 ||D psi||_2."""
    psi_b = [c[-1] for c in psi.components()]
    norms_b = sum(np.abs(c) ** 2 for c in psi_b)
    bnorm = boundary_projector_norm_sq(grid, psi_b, sign)
    lhs = abs(boundary_integral(grid, norms_b - 2.0 * bnorm, metric))
    dpsi = dirac_apply(grid, metric, None, psi)
    rhs = 2.0 * np.sqrt(area_integral(grid, psi.norm_sq(), metric).real) \
        * np.sqrt(area_integral(grid, dpsi.norm_sq(), metric).real)
    slack = max(0.0, lhs - rhs)
    return IdentityDefect("prop31", lhs, rhs, slack, (grid.n_r, grid.n_theta))


def solve_weight_f(grid: PolarGrid, metric: ConformalDiskMetric,
                   curvature_norm: np.ndarray) -> np.ndarray:
    """f with (1/2) Delta f = |R| in D and f = 0 on the boundary."""
    cn = np.asarray(curvature_norm)
    if np.min(cn.real) < 0:
        raise ValueError("curvature norm field must be nonnegative")
    return poisson_dirichlet_solve(grid, 2.0 * cn.astype(complex),
                                   metric=metric).real


def _normal_derivative_3pt(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    """One-sided 3-point radial derivative at r = 1 (order 2)."""
    h = grid.h_r
    return (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)


def boundary_dirac_bar(grid: PolarGrid, metric: ConformalDiskMetric,
                       psi: SpinorField) -> tuple:
    """Dbar psi = n.(D psi) + nabla_n psi - (h/2) psi on the boundary ring."""
    dpsi = dirac_apply(grid, metric, None, psi)
    nD = normal_clifford_boundary([c[-1] for c in dpsi.components()])
    z = grid.boundary_z()
    cz = (0.25 * metric.dlog_lambda_z)[-1]
    czb = (0.25 * metric.dlog_lambda_zbar)[-1]
    scale = 1.0 / np.sqrt(metric.lam[-1])
    h = metric.boundary_h
    out = []
    for idx, (u, v) in enumerate(_pairs(psi)):
        du = _normal_derivative_3pt(grid, u)
        dv = _normal_derivative_3pt(grid, v)
        # nabla_{d_r} = e^{i th} nabla_z + e^{-i th} nabla_zbar, then scale
        cu = -z * cz + np.conj(z) * czb
        cvv = z * cz - np.conj(z) * czb
        nn_u = scale * (du + cu * u[-1])
        nn_v = scale * (dv + cvv * v[-1])
        out.append(nD[2 * idx] + nn_u - 0.5 * h * u[-1])
        out.append(nD[2 * idx + 1] + nn_v - 0.5 * h * v[-1])
    return tuple(out)


def check_weighted_reilly(grid: PolarGrid, metric: ConformalDiskMetric,
                          psi: SpinorField, f: np.ndarray,
                          sign: int = 1) -> IdentityDefect:
    """Weighted Reilly identity on a surface (m = 2 form):

    oint e^f (Re<Dbar psi, psi> + (h + d_n f)/2 |psi|^2)
      + (1/2) int e^f |D psi|^2
      = int e^f ((1/2) Delta f + K/2) |psi|^2 + int e^{-f} |P(e^f psi)|^2.
    """
    f = np.real(np.asarray(f))
    ef = np.exp(f)
    psi_b = [c[-1] for c in psi.components()]
    dbar = boundary_dirac_bar(grid, metric, psi)
    inner_b = sum(a * np.conj(b) for a, b in zip(dbar, psi_b)).real
    norms_b = sum(np.abs(c) ** 2 for c in psi_b)
    dnf = _normal_derivative_3pt(grid, f) / np.sqrt(metric.lam[-1])
    h = metric.boundary_h
    bterm = boundary_integral(
        grid, ef[-1] * (inner_b + 0.5 * (h + dnf) * norms_b), metric).real
    dpsi = dirac_apply(grid, metric, None, psi)
    lhs = bterm + 0.5 * area_integral(grid, ef * dpsi.norm_sq(), metric).real
    lapf = dg.laplacian_apply(grid, f.astype(complex), metric).real
    curv = 0.5 * metric.gauss_curvature
    rhs1 = area_integral(grid, ef * (0.5 * lapf + curv) * psi.norm_sq(),
                         metric).real
    scaled = SpinorField(*[ef * c for c in psi.components()])
    p1, p2 = twistor_apply(grid, metric, scaled)
    rhs2 = area_integral(grid, np.exp(-f) * (p1.norm_sq() + p2.norm_sq()),
                         metric).real
    rhs = rhs1 + rhs2
    return IdentityDefect("reilly", lhs, rhs, abs(lhs - rhs),
                          (grid.n_r, grid.n_theta))


# -- kernel triviality scan -----------------------------------------------------

def collocation_sigma_min(grid: PolarGrid, metric: ConformalDiskMetric,
                          sign: int = 1, variant: str = "chiral",
                          omega: CouplingForm | None = None, q: int = 1,
                          map_data=None, boundary_mode: str = "projector") -> float:
    """Smallest singular value of the quadrature-weighted (D, B) collocation
    matrix with columns scaled to unit L^2 mass: a discrete version of

        inf_psi ( ||D psi||_2^2 + ||B psi||_2^2 )^(1/2) / ||psi||_2.

    Computed by inverse power iteration on the normal equations.
    """
    solver = DiscreteDiracSolver(grid, metric, sign, variant, map_data,
                                 tilde=False, boundary_mode=boundary_mode)
    a_mat = solver.assemble(omega, q)
    mass = np.tile(solver.col_mass, 2 * q)
    a_sc = a_mat @ sp.diags(1.0 / mass)
    gram = (a_sc.conjugate().transpose() @ a_sc).tocsc()
    lu = spla.splu(gram)
    x = np.ones(gram.shape[0], dtype=complex)
    x /= np.linalg.norm(x)
    lam_prev = 0.0
    for _ in range(200):
        y = lu.solve(x)
        lam = np.linalg.norm(y)
        x = y / lam
        if abs(lam - lam_prev) <= 1e-10 * lam:
            break
        lam_prev = lam
    return float(1.0 / np.sqrt(lam))


def kernel_triviality_scan(levels, metric_name: str = "flat",
                           omega_builder=None, sign: int = 1,
                           variant: str = "chiral", q: int = 1,
                           boundary_mode: str = "projector"):
    """sigma_min across a grid ladder; omega_builder(grid) supplies the
    coupling per level (None for the free operator)."""
    records = []
    for n_r, n_theta in levels:
        grid = PolarGrid(n_r, n_theta)
        metric = dg.metric_preset(grid, metric_name)
        omega = omega_builder(grid) if omega_builder is not None else None
        sig = collocation_sigma_min(grid, metric, sign, variant, omega, q,
                                    boundary_mode=boundary_mode)
        records.append({"n_r": n_r, "n_theta": n_theta, "sigma_min": sig})
    return records


# -- random band-limited fields -------------------------------------------------

def random_spinor(grid: PolarGrid, seed: int, degree: int = 4,
                  scale: float = 1.0) -> SpinorField:
    """Seeded smooth spinor field: random polynomial in z and conj(z)."""
    rng = np.random.default_rng(seed)
    z = grid.nodes_z()
    comps = []
    for _ in range(4):
        c = np.zeros((degree + 1, degree + 1), dtype=complex)
        for p in range(degree + 1):
            for qq in range(degree + 1 - p):
                c[p, qq] = rng.standard_normal() + 1j * rng.standard_normal()
        val = np.zeros_like(z)
        zp = np.ones_like(z)
        for p in range(degree + 1):
            zq = np.ones_like(z)
            for qq in range(degree + 1 - p):
                val += c[p, qq] * zp * zq
                zq = zq * np.conj(z)
            zp = zp * z
        comps.append(scale * val / (degree + 1))
    return SpinorField(*comps)
