"""Dirac operator along a map between conformal disks, and two solvers.

The twisted spinor has four complex component fields (f+, f-, ft+, ft-);
the operator splits into two 2x2 blocks ("plain" and "tilde") of the form

    D (u, v) = 2 lambda^{-1/2} ( -(d_z + a_z) v,  (d_zbar + a_zbar) u ),

where a collects the spin-connection term (log lambda)/4 derivatives and the
pullback target-connection term (log rho)_phi phi_z etc.  A matrix-valued
antisymmetric coupling 1-form acts per pair through the same pattern,

    omega . (u, v) = 2 lambda^{-1/2} ( -omega_z v, omega_zbar u ).

Closed-form solver: g-problem + index -1 Riemann-Hilbert problems, following
the explicit construction for the disk.  Discrete solver: least-squares
collocation assembled in theta-Fourier space (interior rows at every node,
rank-one boundary rows), solved by conjugate gradients on the normal
equations with an exact radial-mean preconditioner that decouples into one
small dense problem per Fourier mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla

from .disk_geometry import (PolarGrid, ConformalDiskMetric, as_field,
                            dz_apply, dbar_apply)
from .riemann_hilbert import solve_g_problem, rh_solve_index_minus_one
from .spinor_core import boundary_multiplier


class SolverError(RuntimeError):
    pass


# -- data types ---------------------------------------------------------------

@dataclass
class SpinorField:
    """The four component fields of a twisted spinor on one grid."""

    f_plus: np.ndarray
    f_minus: np.ndarray
    ft_plus: np.ndarray
    ft_minus: np.ndarray

    @staticmethod
    def zeros(grid: PolarGrid) -> "SpinorField":
        return SpinorField(grid.zeros(), grid.zeros(), grid.zeros(), grid.zeros())

    def components(self):
        return (self.f_plus, self.f_minus, self.ft_plus, self.ft_minus)

    def norm_sq(self) -> np.ndarray:
        return sum(np.abs(c) ** 2 for c in self.components())

    def sup(self) -> float:
        return float(max(np.max(np.abs(c)) for c in self.components()))


@dataclass
class BoundarySpinor:
    """Boundary traces of the four spinor components on the angle grid."""

    f_plus: np.ndarray
    f_minus: np.ndarray
    ft_plus: np.ndarray
    ft_minus: np.ndarray

    @staticmethod
    def zeros(n_theta: int) -> "BoundarySpinor":
        z = np.zeros(n_theta, dtype=complex)
        return BoundarySpinor(z.copy(), z.copy(), z.copy(), z.copy())


@dataclass
class MapData:
    """A map phi: (D, lambda) -> (D, rho) with closed-form derivative data."""

    phi: np.ndarray
    dphi_z: np.ndarray
    dphi_zbar: np.ndarray
    rho_at_phi: np.ndarray
    dlog_rho_dphi: np.ndarray
    dlog_rho_dphibar: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.phi)) > 1.0 + 1e-9:
            raise ValueError("map must send the closed disk into itself")


def map_preset(grid: PolarGrid, map_name: str, rho_name: str) -> MapData:
    """Preset maps and target densities with analytic derivative fields.

    Densities stay bounded and positive on the closed disk; the 'warp' map is
    genuinely non-holomorphic so the dbar data of the g-problem is active.
    """
    z = grid.nodes_z()
    one = np.ones_like(z)
    if map_name == "id":
        phi, dz_, dzb = z, one.copy(), 0 * one
    elif map_name == "warp":
        phi = 0.55 * z + 0.15 * np.conj(z) ** 2
        dz_ = 0.55 * one
        dzb = 0.30 * np.conj(z)
    elif map_name == "trivial":
        phi, dz_, dzb = 0 * one, 0 * one, 0 * one
    else:
        raise ValueError(f"unknown map preset {map_name!r}")
    if rho_name == "flat":
        rho = np.ones_like(z, dtype=complex)
        dlr = 0 * one
        dlrb = 0 * one
    elif rho_name == "round":
        s2 = np.abs(phi) ** 2
        rho = (4.0 / (1.0 + s2) ** 2).astype(complex)
        dlr = -2.0 * np.conj(phi) / (1.0 + s2)
        dlrb = -2.0 * phi / (1.0 + s2)
    else:
        raise ValueError(f"unknown target density preset {rho_name!r}")
    return MapData(phi, dz_, dzb, rho, dlr, dlrb)


@dataclass
class CouplingForm:
    """Antisymmetric q x q matrix of 1-forms by their (dz, dzbar) parts."""

    omega_z: np.ndarray      # (q, q, n_r, n_theta)
    omega_zbar: np.ndarray

    def __post_init__(self):
        for arr in (self.omega_z, self.omega_zbar):
            skew = arr + np.swapaxes(arr, 0, 1)
            if np.max(np.abs(skew)) > 1e-12 * max(1.0, np.max(np.abs(arr))):
                raise ValueError("coupling form must be antisymmetric")

    @property
    def q(self) -> int:
        return self.omega_z.shape[0]

    @staticmethod
    def zero(grid: PolarGrid, q: int) -> "CouplingForm":
        shape = (q, q, grid.n_r, grid.n_theta)
        return CouplingForm(np.zeros(shape, complex), np.zeros(shape, complex))

    @staticmethod
    def from_real_xy(omega_x: np.ndarray, omega_y: np.ndarray) -> "CouplingForm":
        """Real 1-form w_x dx + w_y dy -> (dz, dzbar) coefficients."""
        return CouplingForm(0.5 * (omega_x - 1j * omega_y),
                            0.5 * (omega_x + 1j * omega_y))


def random_coupling_preset(grid: PolarGrid, q: int, seed: int,
                           amplitude: float = 1.0) -> CouplingForm:
    """Seeded smooth antisymmetric coupling built from a few low modes."""
    rng = np.random.default_rng(seed)
    z = grid.nodes_z()
    basis = [np.ones_like(z), z, np.conj(z), z ** 2, z * np.conj(z)]
    wx = np.zeros((q, q, grid.n_r, grid.n_theta))
    wy = np.zeros_like(wx)
    for a in range(q):
        for b in range(a + 1, q):
            cx = rng.standard_normal(len(basis))
            cy = rng.standard_normal(len(basis))
            fx = sum(c * f for c, f in zip(cx, basis)).real
            fy = sum(c * f for c, f in zip(cy, basis)).real
            wx[a, b], wx[b, a] = amplitude * fx, -amplitude * fx
            wy[a, b], wy[b, a] = amplitude * fy, -amplitude * fy
    return CouplingForm.from_real_xy(wx, wy)


# -- the operator -------------------------------------------------------------

def connection_coefficients(metric: ConformalDiskMetric,
                            map_data: MapData | None, tilde: bool):
    """(a_z, a_zbar) of one 2x2 block of the twisted Dirac operator."""
    az = 0.25 * metric.dlog_lambda_z.astype(complex)
    azb = 0.25 * metric.dlog_lambda_zbar.astype(complex)
    if map_data is not None:
        if not tilde:
            az = az + map_data.dlog_rho_dphi * map_data.dphi_z
            azb = azb + map_data.dlog_rho_dphi * map_data.dphi_zbar
        else:
            az = az + map_data.dlog_rho_dphibar * np.conj(map_data.dphi_zbar)
            azb = azb + map_data.dlog_rho_dphibar * np.conj(map_data.dphi_z)
    return az, azb


def _block_apply(grid, metric, az, azb, u, v):
    pref = 2.0 / np.sqrt(metric.lam)
    out_plus = -pref * (dz_apply(grid, v) + az * v)
    out_minus = pref * (dbar_apply(grid, u) + azb * u)
    return out_plus, out_minus


def dirac_apply(grid: PolarGrid, metric: ConformalDiskMetric,
                map_data: MapData | None, psi: SpinorField) -> SpinorField:
    """The block Dirac operator along the map applied to a spinor field."""
    az, azb = connection_coefficients(metric, map_data, tilde=False)
    azt, azbt = connection_coefficients(metric, map_data, tilde=True)
    p, m = _block_apply(grid, metric, az, azb, psi.f_plus, psi.f_minus)
    pt, mt = _block_apply(grid, metric, azt, azbt, psi.ft_plus, psi.ft_minus)
    return SpinorField(p, m, pt, mt)


def coupling_apply(grid: PolarGrid, metric: ConformalDiskMetric,
                   omega: CouplingForm, pairs: np.ndarray) -> np.ndarray:
    """(omega . psi)^A for q spinor pairs, pairs shape (q, 2, n_r, n_theta)."""
    pref = 2.0 / np.sqrt(metric.lam)
    u = pairs[:, 0]
    v = pairs[:, 1]
    out = np.empty_like(pairs)
    out[:, 0] = -pref * np.einsum("abij,bij->aij", omega.omega_z, v)
    out[:, 1] = pref * np.einsum("abij,bij->aij", omega.omega_zbar, u)
    return out


# -- closed-form solver --------------------------------------------------------

def solve_chiral_bvp_closed_form(grid: PolarGrid, metric: ConformalDiskMetric,
                                 map_data: MapData, psi0: BoundarySpinor,
                                 sign: int, variant: str = "chiral") -> SpinorField:
    """Harmonic spinor along the map with B psi = B psi0 on the circle.

    Pipeline: solve the g-problem; reduce each block to an index -1
    Riemann-Hilbert problem with symbol -mu/zeta (mu the rank-one boundary
    multiplier); reassemble the components from the holomorphic pairs and g.
    """
    mu = boundary_multiplier(sign, variant)
    g = solve_g_problem(grid, metric, map_data)
    lam = metric.lam
    rho = np.real(map_data.rho_at_phi)
    zeta = grid.boundary_z()
    weight = lam[-1] ** 0.25 * np.sqrt(rho[-1])
    img_b = np.exp(1j * g[-1].imag)
    rhs_u = weight * img_b * (psi0.f_plus + mu * np.conj(zeta) * psi0.f_minus)
    rhs_t = weight / img_b * (psi0.ft_plus + mu * np.conj(zeta) * psi0.ft_minus)
    sym = -mu / zeta
    pair = rh_solve_index_minus_one(grid, sym, rhs_u)
    pair_t = rh_solve_index_minus_one(grid, sym, rhs_t)
    scale = 1.0 / (np.sqrt(lam) * rho)
    return SpinorField(
        np.exp(-g) * pair.a_plus,
        scale * np.exp(np.conj(g)) * np.conj(pair.a_minus),
        scale * np.exp(g) * pair_t.a_plus,
        np.exp(-np.conj(g)) * np.conj(pair_t.a_minus),
    )


# -- discrete collocation solver ------------------------------------------------

def _fft_coeffs(field: np.ndarray) -> np.ndarray:
    return np.fft.fft(field, axis=1) / field.shape[1]


def _coeffvec_to_field(grid: PolarGrid, x: np.ndarray) -> np.ndarray:
    n, m = grid.n_theta, grid.n_r
    coefs = x.reshape(n, m).T
    return np.fft.ifft(coefs * n, axis=1)


def _field_to_coeffvec(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    return _fft_coeffs(u).T.ravel()


def _mult_matrix(grid: PolarGrid, c: np.ndarray, trunc: float = 1e-13) -> sp.csr_matrix:
    """Multiplication by the field c as a matrix on theta-Fourier coefficients.

    Output mode (i + mu) mod n picks up diag(chat_mu(r)); modes below the
    relative threshold are dropped.
    """
    n, m = grid.n_theta, grid.n_r
    chat = _fft_coeffs(as_field(grid, c))     # (m, n)
    mags = np.max(np.abs(chat), axis=0)
    keep = np.nonzero(mags > trunc * max(np.max(mags), 1e-300))[0]
    rows, cols, vals = [], [], []
    base = np.arange(n)[:, None] * m + np.arange(m)[None, :]
    for mu in keep:
        out = (np.arange(n) + mu) % n
        rows.append((out[:, None] * m + np.arange(m)[None, :]).ravel())
        cols.append(base.ravel())
        vals.append(np.tile(chat[:, mu], n))
    if not rows:
        return sp.csr_matrix((n * m, n * m), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n * m, n * m))


def _complex_deriv_matrix(grid: PolarGrid, which: str) -> sp.csr_matrix:
    """d_z or d_zbar on theta-Fourier coefficients (radial FD, exact shifts).

    Matches dz_apply/dbar_apply to machine precision, including the zeroed
    first-derivative Nyquist multiplier and the parity fold at the pole.
    """
    n, m = grid.n_theta, grid.n_r
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    d1 = {+1: sp.coo_matrix(grid.radial_derivative_matrix(1, +1)),
          -1: sp.coo_matrix(grid.radial_derivative_matrix(1, -1))}
    inv_r = 1.0 / grid.radii
    shift = 1 if which == "zbar" else -1
    ksign = -1.0 if which == "zbar" else 1.0
    rows, cols, vals = [], [], []
    for i in range(n):
        ki = k[i]
        keff = 0 if i == n // 2 else ki
        par = 1 if ki % 2 == 0 else -1
        out = ((i + shift) % n) * m
        dd = d1[par]
        rows.append(out + dd.row)
        cols.append(i * m + dd.col)
        vals.append(0.5 * dd.data)
        rows.append(out + np.arange(m))
        cols.append(i * m + np.arange(m))
        vals.append(np.full(m, 0.5 * ksign * keff) * inv_r)
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n * m, n * m))


@dataclass
class ResidualReport:
    interior_sup: float
    boundary_sup: float
    l2_interior: float


class DiscreteDiracSolver:
    """Least-squares collocation for one 2x2 block of the system

        (D psi)^A + sum_B omega^A_B . psi^B = eta^A,   B^sign psi^A = B^sign psi0^A.

    Interior rows are imposed at every node (one-sided radial stencils near
    r = 1), boundary rows are the rank-one scalar conditions; rows carry
    square-root quadrature weights.  The normal equations are solved by
    preconditioned CG, the preconditioner being the exact inverse of the
    radially-averaged operator, which splits into one dense least-squares
    problem per theta mode.
    """

    def __init__(self, grid: PolarGrid, metric: ConformalDiskMetric,
                 sign: int = 1, variant: str = "chiral",
                 map_data: MapData | None = None, tilde: bool = False,
                 trunc: float = 1e-13, boundary_mode: str = "projector"):
        self.grid = grid
        self.metric = metric
        self.sign = sign
        self.variant = variant
        self.map_data = map_data
        self.tilde = tilde
        self.boundary_mode = boundary_mode
        self.mu = boundary_multiplier(sign, variant)
        n, m = grid.n_theta, grid.n_r
        self.nn = n * m

        az, azb = connection_coefficients(metric, map_data, tilde)
        self.az, self.azb = az, azb
        pref = (2.0 / np.sqrt(metric.lam)).astype(complex)
        self.pref = pref

        mpref = _mult_matrix(grid, pref, trunc)
        self.op_u = mpref @ (_complex_deriv_matrix(grid, "zbar")
                             + _mult_matrix(grid, azb, trunc))
        self.op_v = -(mpref @ (_complex_deriv_matrix(grid, "z")
                               + _mult_matrix(grid, az, trunc)))
        self._mpref = mpref
        self._trunc = trunc

        # row weights: interior L^2(dA), boundary L^2(ds)
        lam_mean = np.mean(metric.lam, axis=1)
        w_rad = grid.radial_weights()
        self.sigma_int = np.sqrt(w_rad * grid.radii * lam_mean * grid.d_theta * n)
        self.sigma_b = float(np.sqrt(np.sqrt(lam_mean[-1]) * grid.d_theta * n))
        self.col_mass = np.tile(
            np.sqrt(w_rad * grid.radii * lam_mean * grid.d_theta * n), n)

        self._bdry_u, self._bdry_v = self._boundary_blocks()
        self._factors = self._family_factors(az, azb, pref, lam_mean)

    # boundary condition blocks (n rows x nn cols)
    def _boundary_blocks(self):
        n, m = self.grid.n_theta, self.grid.n_r
        ks = np.arange(n)
        bu = sp.csr_matrix((np.ones(n), (ks, ks * m + (m - 1))),
                           shape=(n, self.nn), dtype=complex)
        bv = sp.csr_matrix((np.full(n, self.mu, dtype=complex),
                            (ks, ((ks + 1) % n) * m + (m - 1))),
                           shape=(n, self.nn), dtype=complex)
        return bu, bv

    def _family_factors(self, az, azb, pref, lam_mean):
        """Per-mode QR of the radially averaged weighted operator."""
        g = self.grid
        n, m = g.n_theta, g.n_r
        k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        az0 = np.mean(az, axis=1)
        azb0 = np.mean(azb, axis=1)
        p0 = np.mean(pref, axis=1).real
        inv_r = 1.0 / g.radii
        factors = []
        for i in range(n):
            ki = k[i]
            keff = 0 if i == n // 2 else ki
            par = 1 if ki % 2 == 0 else -1
            i2 = (i + 1) % n
            ki2 = k[i2]
            keff2 = 0 if i2 == n // 2 else ki2
            par2 = 1 if ki2 % 2 == 0 else -1
            du = 0.5 * (g.radial_derivative_matrix(1, par)
                        - keff * np.diag(inv_r)) + np.diag(azb0)
            dv = 0.5 * (g.radial_derivative_matrix(1, par2)
                        + keff2 * np.diag(inv_r)) + np.diag(az0)
            row_u = (p0 * self.sigma_int)[:, None] * du      # minus rows, mode i+1
            row_v = -(p0 * self.sigma_int)[:, None] * dv     # plus rows, mode i
            nb = 2 if self.boundary_mode == "dirichlet" else 1
            fam = np.zeros((2 * m + nb, 2 * m), dtype=complex)
            fam[:m, :m] = row_u
            fam[m:2 * m, m:] = row_v
            if self.boundary_mode == "dirichlet":
                fam[2 * m, m - 1] = self.sigma_b
                fam[2 * m + 1, 2 * m - 1] = self.sigma_b
            else:
                fam[2 * m, m - 1] = self.sigma_b
                fam[2 * m, 2 * m - 1] = self.mu * self.sigma_b
            r = np.linalg.qr(fam, mode="r")
            factors.append(r)
        return factors

    def _precondition(self, y: np.ndarray) -> np.ndarray:
        """Apply (A0^H A0)^{-1} familywise: y and result indexed like columns."""
        g = self.grid
        n, m = g.n_theta, g.n_r
        q = y.shape[0] // (2 * self.nn)
        out = np.empty_like(y)
        yy = y.reshape(q, 2, n, m)
        oo = out.reshape(q, 2, n, m)
        for i in range(n):
            r = self._factors[i]
            i2 = (i + 1) % n
            for a in range(q):
                rhs = np.concatenate([yy[a, 0, i], yy[a, 1, i2]])
                tmp = sla.solve_triangular(r, rhs, trans="C", lower=False)
                sol = sla.solve_triangular(r, tmp, lower=False)
                oo[a, 0, i] = sol[:m]
                oo[a, 1, i2] = sol[m:]
        return out

    def assemble(self, omega: CouplingForm | None, q: int) -> sp.csr_matrix:
        """Weighted global matrix for q coupled pairs."""
        n, m = self.grid.n_theta, self.grid.n_r
        wint = sp.diags(np.tile(self.sigma_int, n))
        rows = []
        for a in range(q):
            mrow = []
            prow = []
            for b in range(q):
                cu = wint @ self.op_u if a == b else None
                cv = wint @ self.op_v if a == b else None
                if omega is not None and np.max(np.abs(omega.omega_z[a, b])) > 0:
                    wz = _mult_matrix(self.grid, omega.omega_z[a, b], self._trunc)
                    wzb = _mult_matrix(self.grid, omega.omega_zbar[a, b], self._trunc)
                    cplus = -(self._mpref @ wz)
                    cminus = self._mpref @ wzb
                    cu = (cu + wint @ cminus) if cu is not None else wint @ cminus
                    cv = (cv + wint @ cplus) if cv is not None else wint @ cplus
                mrow.extend([cu, None])
                prow.extend([None, cv])
            rows.append(mrow)
            rows.append(prow)
        if self.boundary_mode == "dirichlet":
            for a in range(q):
                for blk, col in ((self._bdry_u, 2 * a), (self._bdry_u, 2 * a + 1)):
                    brow = [None] * (2 * q)
                    brow[col] = self.sigma_b * blk
                    rows.append(brow)
        else:
            for a in range(q):
                brow = [None] * (2 * q)
                brow[2 * a] = self.sigma_b * self._bdry_u
                brow[2 * a + 1] = self.sigma_b * self._bdry_v
                rows.append(brow)
        return sp.bmat(rows, format="csr")

    def rhs_vector(self, eta_pairs, bdata_pairs, q: int) -> np.ndarray:
        n, m = self.grid.n_theta, self.grid.n_r
        parts = []
        wtile = np.tile(self.sigma_int, n)
        for a in range(q):
            if eta_pairs is None:
                parts.extend([np.zeros(self.nn, complex), np.zeros(self.nn, complex)])
            else:
                eminus = _field_to_coeffvec(self.grid, eta_pairs[a][1])
                eplus = _field_to_coeffvec(self.grid, eta_pairs[a][0])
                parts.extend([wtile * eminus, wtile * eplus])
        zeta_bar = np.conj(self.grid.boundary_z())
        for a in range(q):
            if self.boundary_mode == "dirichlet":
                if bdata_pairs is None:
                    parts.extend([np.zeros(n, complex), np.zeros(n, complex)])
                else:
                    u0, v0 = bdata_pairs[a]
                    parts.append(self.sigma_b * np.fft.fft(u0) / n)
                    parts.append(self.sigma_b * np.fft.fft(v0) / n)
            elif bdata_pairs is None:
                parts.append(np.zeros(n, complex))
            else:
                u0, v0 = bdata_pairs[a]
                scalar = u0 + self.mu * zeta_bar * v0
                parts.append(self.sigma_b * np.fft.fft(scalar) / n)
        return np.concatenate(parts)

    def solve(self, omega: CouplingForm | None = None, eta_pairs=None,
              bdata_pairs=None, q: int = 1, rtol: float = 1e-12,
              maxiter: int = 600):
        """Returns (pairs, info): pairs shape (q, 2, n_r, n_theta)."""
        a_mat = self.assemble(omega, q)
        b = self.rhs_vector(eta_pairs, bdata_pairs, q)
        ah = a_mat.conjugate().transpose().tocsr()
        bn = ah @ b
        x = np.zeros_like(bn)
        nb = np.linalg.norm(bn)
        info = {"iterations": 0, "normal_residual": 0.0}
        if nb > 0:
            r = bn.copy()
            z = self._precondition(r)
            p = z.copy()
            rz = np.vdot(r, z).real
            it = 0
            while True:
                ap = ah @ (a_mat @ p)
                alpha = rz / np.vdot(p, ap).real
                x += alpha * p
                r -= alpha * ap
                it += 1
                if np.linalg.norm(r) <= rtol * nb:
                    break
                if it >= maxiter:
                    raise SolverError(
                        f"collocation CG stalled: residual "
                        f"{np.linalg.norm(r) / nb:.2e} after {maxiter} iterations")
                z = self._precondition(r)
                rz_new = np.vdot(r, z).real
                p = z + (rz_new / rz) * p
                rz = rz_new
            info["iterations"] = it
            info["normal_residual"] = float(np.linalg.norm(r) / nb)
        n, m = self.grid.n_theta, self.grid.n_r
        xs = x.reshape(q, 2, self.nn)
        pairs = np.empty((q, 2, m, n), dtype=complex)
        for a in range(q):
            pairs[a, 0] = _coeffvec_to_field(self.grid, xs[a, 0])
            pairs[a, 1] = _coeffvec_to_field(self.grid, xs[a, 1])
        return pairs, info


def solve_bvp_discrete(grid: PolarGrid, metric: ConformalDiskMetric,
                       omega: CouplingForm | None,
                       eta: list[SpinorField] | None,
                       bdata: list[BoundarySpinor] | None,
                       sign: int, variant: str = "chiral",
                       map_data: MapData | None = None,
                       q: int | None = None, tilde: bool = True,
                       rtol: float = 1e-12):
    """Discrete solve of the coupled system; returns (fields, report, info).

    The plain and tilde 2x2 blocks decouple in the interior and in the
    boundary condition, so they are solved as two collocation problems; pass
    tilde=False to skip the tilde block (it stays zero).
    """
    if q is None:
        q = omega.q if omega is not None else (len(bdata) if bdata else 1)
    solver = DiscreteDiracSolver(grid, metric, sign, variant, map_data, tilde=False)
    eta_pairs = None if eta is None else [(e.f_plus, e.f_minus) for e in eta]
    bd_pairs = None if bdata is None else [(b.f_plus, b.f_minus) for b in bdata]
    pairs, info = solver.solve(omega, eta_pairs, bd_pairs, q, rtol=rtol)
    fields = [SpinorField(pairs[a, 0], pairs[a, 1], grid.zeros(), grid.zeros())
              for a in range(q)]
    if tilde:
        solver_t = DiscreteDiracSolver(grid, metric, sign, variant, map_data,
                                       tilde=True)
        eta_t = None if eta is None else [(e.ft_plus, e.ft_minus) for e in eta]
        bd_t = None if bdata is None else [(b.ft_plus, b.ft_minus) for b in bdata]
        pairs_t, info_t = solver_t.solve(omega, eta_t, bd_t, q, rtol=rtol)
        for a in range(q):
            fields[a].ft_plus = pairs_t[a, 0]
            fields[a].ft_minus = pairs_t[a, 1]
        info = {"iterations": info["iterations"] + info_t["iterations"],
                "normal_residual": max(info["normal_residual"],
                                       info_t["normal_residual"])}
    report = residual_report(grid, metric, fields, omega=omega, eta=eta,
                             bdata=bdata, sign=sign, variant=variant,
                             map_data=map_data)
    return fields, report, info


def residual_report(grid: PolarGrid, metric: ConformalDiskMetric,
                    psi, *, map_data: MapData | None = None,
                    omega: CouplingForm | None = None,
                    eta=None, bdata=None, sign: int = 1,
                    variant: str = "chiral") -> ResidualReport:
    """Sup and L2 interior residuals plus boundary-condition sup residual.

    psi may be a single SpinorField or a list of them (coupled system).
    Residuals are computed with the same discrete operators the collocation
    rows use, so they certify the linear solve as well as the scheme.
    """
    fields = [psi] if isinstance(psi, SpinorField) else list(psi)
    q = len(fields)
    mu = boundary_multiplier(sign, variant)
    res_sup = 0.0
    res_l2 = 0.0
    warea = (grid.radial_weights() * grid.radii)[:, None] \
        * np.mean(metric.lam, axis=1)[:, None] * grid.d_theta
    ints = []
    for a, f in enumerate(fields):
        d = dirac_apply(grid, metric, map_data, f)
        ints.append(np.stack([d.f_plus, d.f_minus, d.ft_plus, d.ft_minus]))
    ints = np.array(ints)
    if omega is not None:
        pairs = np.array([[f.f_plus, f.f_minus] for f in fields])
        coup = coupling_apply(grid, metric, omega, pairs)
        ints[:, 0] += coup[:, 0]
        ints[:, 1] += coup[:, 1]
        pairs_t = np.array([[f.ft_plus, f.ft_minus] for f in fields])
        coup_t = coupling_apply(grid, metric, omega, pairs_t)
        ints[:, 2] += coup_t[:, 0]
        ints[:, 3] += coup_t[:, 1]
    if eta is not None:
        for a, e in enumerate(eta):
            ints[a, 0] -= e.f_plus
            ints[a, 1] -= e.f_minus
            ints[a, 2] -= e.ft_plus
            ints[a, 3] -= e.ft_minus
    res_sup = float(np.max(np.abs(ints)))
    res_l2 = float(np.sqrt(np.sum(warea[None, None] * np.abs(ints) ** 2)))
    zeta_bar = np.conj(grid.boundary_z())
    bsup = 0.0
    for a, f in enumerate(fields):
        b0 = bdata[a] if bdata is not None else BoundarySpinor.zeros(grid.n_theta)
        s1 = (f.f_plus[-1] - b0.f_plus) + mu * zeta_bar * (f.f_minus[-1] - b0.f_minus)
        s2 = (f.ft_plus[-1] - b0.ft_plus) + mu * zeta_bar * (f.ft_minus[-1] - b0.ft_minus)
        bsup = max(bsup, np.max(np.abs(s1)) / np.sqrt(2.0),
                   np.max(np.abs(s2)) / np.sqrt(2.0))
    return ResidualReport(res_sup, float(bsup), res_l2)


# -- boundary data presets -----------------------------------------------------

def boundary_spinor_preset(grid: PolarGrid, name: str, seed: int = 0) -> BoundarySpinor:
    th = grid.thetas
    e = lambda k: np.exp(1j * k * th)
    if name == "zero":
        return BoundarySpinor.zeros(grid.n_theta)
    if name == "constant":
        b = BoundarySpinor.zeros(grid.n_theta)
        b.f_plus = np.ones(grid.n_theta, dtype=complex)
        return b
    if name == "mode":
        return BoundarySpinor(
            1.0 + 0.3 * e(1) + 0.1 * e(-2),
            0.2 * e(-1) + 0.1j * e(2),
            0.5 - 0.2 * e(3),
            0.3 * e(1),
        )
    if name == "random":
        rng = np.random.default_rng(seed)
        def band():
            ks = np.arange(-5, 6)
            c = rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks))
            return sum(ck * e(k) for ck, k in zip(c, ks)) / len(ks)
        return BoundarySpinor(band(), band(), band(), band())
    raise ValueError(f"unknown boundary data preset {name!r}")
