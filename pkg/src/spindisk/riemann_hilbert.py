"""Boundary integrals and Riemann-Hilbert solvers on the unit disk.

Boundary data lives on the uniform angle grid of a PolarGrid. Cauchy-type
boundary integrals admit two evaluation routes that agree spectrally:

* trapezoid quadrature in the angle, with Fourier upsampling of the density
  when the target comes close to the circle (this is `cauchy_integral`, the
  route for arbitrary off-grid targets);
* exact evaluation of the Cauchy integral of the trigonometric interpolant,
  mode k of the density contributing r^k inside (k >= 0) and -R^k outside
  (k < 0).  The whole-grid solvers use this modal route.

The two-kernel area transform (the Pompeiu-type part of the g-problem) is a
punctured polar quadrature with the constant singularity subtracted; on grid
targets it is evaluated ring-pair-wise by circular convolutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disk_geometry import PolarGrid, as_field


class SymbolError(ValueError):
    """Degenerate or undersampled boundary symbol."""


class TargetError(ValueError):
    """Evaluation point on the unit circle, where the kernel is singular."""


@dataclass(frozen=True)
class BoundarySymbol:
    """Nonvanishing complex boundary samples on uniform angles."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if np.min(np.abs(v)) <= 0.0:
            raise SymbolError("boundary symbol vanishes at a sample")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class HolomorphicPair:
    """Fields of the holomorphic pair (A+, A-) sampled on a PolarGrid."""

    a_plus: np.ndarray
    a_minus: np.ndarray


def _phase_increments(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    if np.min(np.abs(v)) <= 0.0:
        raise SymbolError("boundary symbol vanishes at a sample")
    d = np.angle(np.roll(v, -1) / v)
    if np.max(np.abs(d)) >= np.pi * (1.0 - 1e-9):
        raise SymbolError("phase jump >= pi between samples; symbol undersampled")
    return d


def winding_index(phi) -> int:
    """Total argument increment of a nonvanishing boundary symbol, over 2*pi.

    Jumps at or beyond pi between consecutive samples are rejected as
    undersampled; jumps strictly inside (-pi, pi) are trusted, so a symbol
    winding faster than half a turn per sample aliases silently (sample
    finer to rule that out).
    """
    if isinstance(phi, BoundarySymbol):
        phi = phi.values
    total = np.sum(_phase_increments(phi)) / (2.0 * np.pi)
    k = round(float(total))
    if abs(total - k) > 0.1:
        raise SymbolError(f"argument increment {total} is not close to an integer")
    return k


def continuous_log(values: np.ndarray) -> np.ndarray:
    """log of boundary samples with the phase accumulated continuously."""
    v = np.asarray(values, dtype=complex)
    d = _phase_increments(v)
    phase = np.angle(v[0]) + np.concatenate([[0.0], np.cumsum(d[:-1])])
    return np.log(np.abs(v)) + 1j * phase


# -- Cauchy integrals ---------------------------------------------------------

def _upsample_density(f: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation of complex boundary data onto factor*n angles."""
    n = len(f)
    if factor <= 1:
        return np.asarray(f, dtype=complex)
    m = factor * n
    spec = np.fft.fft(f)
    padded = np.zeros(m, dtype=complex)
    half = n // 2
    padded[:half] = spec[:half]
    padded[-half + 1:] = spec[half + 1:]
    padded[half] = 0.5 * spec[half]     # split the Nyquist mode symmetrically
    padded[-half] = 0.5 * spec[half]
    return np.fft.ifft(padded) * factor


def cauchy_integral(f: np.ndarray, targets, upsample_cap: int = 64) -> np.ndarray:
    """(1/2 pi i) * contour integral of f(zeta)/(zeta - z) over the unit circle.

    Trapezoid rule in the angle; densities are Fourier-upsampled by a factor
    growing like 1/dist(z, circle) (capped) so the quadrature stays spectral
    for near-boundary targets.  Targets must avoid the circle itself.
    """
    f = np.asarray(f, dtype=complex)
    n = len(f)
    z = np.atleast_1d(np.asarray(targets, dtype=complex))
    dist = np.abs(np.abs(z) - 1.0)
    if np.min(dist) < 1e-12:
        raise TargetError("cauchy_integral target lies on the unit circle")
    need = np.ceil(40.0 / (n * dist)).astype(int)
    factors = np.clip(need, 1, upsample_cap)
    out = np.empty(z.shape, dtype=complex)
    for fac in np.unique(factors):
        sel = factors == fac
        dens = _upsample_density(f, int(fac))
        m = len(dens)
        zeta = np.exp(2j * np.pi * np.arange(m) / m)
        out[sel] = (dens * zeta / (zeta[None, :] - z[sel, None])).sum(axis=1) / m
    return out if np.ndim(targets) else out[0]


def _mode_numbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n).astype(int)


def cauchy_modal_interior(grid: PolarGrid, fhat: np.ndarray,
                          radii=None) -> np.ndarray:
    """Interior values of the Cauchy integral on full rings, mode-by-mode.

    fhat are the trig-interpolant coefficients (fft(f)/n); ring r picks up
    sum_{k>=0} fhat_k r^k e^{ik theta}.  Valid for 0 <= r <= 1.
    """
    n = grid.n_theta
    k = _mode_numbers(n)
    rr = grid.radii if radii is None else np.asarray(radii)
    pos = k >= 0
    powers = np.where(pos[None, :], rr[:, None] ** np.abs(k)[None, :], 0.0)
    return np.fft.ifft(n * fhat[None, :] * powers, axis=1)


def cauchy_modal_exterior(grid: PolarGrid, fhat: np.ndarray,
                          radii) -> np.ndarray:
    """Exterior values on rings of radius R >= 1: -sum_{k<0} fhat_k R^k e^{ik theta}."""
    n = grid.n_theta
    k = _mode_numbers(n)
    rr = np.asarray(radii)
    neg = k < 0
    powers = np.where(neg[None, :], (1.0 / rr)[:, None] ** np.abs(k)[None, :], 0.0)
    return -np.fft.ifft(n * fhat[None, :] * powers, axis=1)


def schwarz_operator(h: np.ndarray, targets) -> np.ndarray:
    """Holomorphic extension with Re = harmonic extension of real h, Im(0) = 0."""
    h = np.asarray(h)
    if np.max(np.abs(np.imag(h))) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise ValueError("schwarz_operator expects real boundary data")
    n = len(h)
    hhat = np.fft.fft(np.real(h).astype(complex)) / n
    z = np.atleast_1d(np.asarray(targets, dtype=complex))
    out = np.full(z.shape, hhat[0], dtype=complex)
    zp = np.ones_like(z)
    for k in range(1, n // 2 + 1):
        zp = zp * z
        coef = 2.0 * hhat[k] if k < n // 2 else hhat[k]
        out += coef * zp
    return out if np.ndim(targets) else out[0]


def schwarz_on_grid(grid: PolarGrid, h: np.ndarray) -> np.ndarray:
    """schwarz_operator evaluated on every grid ring (boundary included)."""
    n = grid.n_theta
    hhat = np.fft.fft(np.real(h).astype(complex)) / n
    k = _mode_numbers(n)
    mult = np.where(k > 0, 2.0, 0.0)
    mult[0] = 1.0
    mult[n // 2] = 1.0  # Nyquist: e^{i(n/2)th} and e^{-i(n/2)th} agree on the grid
    powers = grid.radii[:, None] ** np.abs(k)[None, :]
    return np.fft.ifft(n * (mult * hhat)[None, :] * powers, axis=1)


# -- two-kernel area transform ------------------------------------------------

def _area_weights(grid: PolarGrid) -> np.ndarray:
    return (grid.radial_weights() * grid.radii)[:, None] \
        * np.full(grid.n_theta, grid.d_theta)[None, :]


def area_cauchy_transform(grid: PolarGrid, w: np.ndarray, targets,
                          w_at_targets=None) -> np.ndarray:
    """T(w)(z) = -(1/2 pi) int_D [ w K1 + conj(w) K2 ] dA for the kernel pair

        K1 = (1/zeta)(zeta+z)/(zeta-z),   K2 = (1/conj(zeta))(1+z conj(zeta))/(1-z conj(zeta)),

    the particular solution of d/dzbar T = w with Re T = 0 on the circle and
    Im T(0) = 0.  Quadrature: polar tensor rule, the node coinciding with a
    target skipped, and the constant w(z) subtracted (T of a constant c is
    c*zbar - conj(c)*z in closed form), which keeps the rule second order up
    to the boundary.
    """
    w = as_field(grid, w)
    z = np.atleast_1d(np.asarray(targets, dtype=complex))
    zeta = grid.nodes_z().ravel()
    wa = (w * _area_weights(grid)).ravel()
    aw = _area_weights(grid).ravel()
    wflat = w.ravel()
    if w_at_targets is None:
        # nearest grid node supplies the subtraction constant
        ji = np.clip(np.round(np.abs(z) / grid.h_r - 0.5).astype(int), 0, grid.n_r - 1)
        ki = np.round(np.angle(z) / grid.d_theta).astype(int) % grid.n_theta
        c = w[ji, ki]
    else:
        c = np.atleast_1d(np.asarray(w_at_targets, dtype=complex))
    out = np.empty(z.shape, dtype=complex)
    chunk = max(1, int(2e6 / max(len(zeta), 1)))
    for lo in range(0, len(z), chunk):
        zs = z[lo:lo + chunk, None]
        cs = c[lo:lo + chunk, None]
        diff = zeta[None, :] - zs
        coincide = np.abs(diff) < 1e-14
        diff = np.where(coincide, 1.0, diff)
        denom2 = 1.0 - zs * np.conj(zeta[None, :])
        denom2 = np.where(coincide, 1.0, denom2)  # vanishes only at a skipped node
        k1 = (zeta[None, :] + zs) / (zeta[None, :] * diff)
        k2 = (1.0 + zs * np.conj(zeta[None, :])) / (np.conj(zeta[None, :]) * denom2)
        t1 = (wa[None, :] - cs * aw[None, :]) * k1
        t2 = np.conj(wflat[None, :] - cs) * aw[None, :] * k2
        vals = np.where(coincide, 0.0, t1 + t2).sum(axis=1)
        out[lo:lo + chunk] = -vals / (2.0 * np.pi) \
            + cs[:, 0] * np.conj(zs[:, 0]) - np.conj(cs[:, 0]) * zs[:, 0]
    return out if np.ndim(targets) else out[0]


def _circ_corr(fhat_rows: np.ndarray, kernel_rows: np.ndarray) -> np.ndarray:
    """Row-wise C_l = sum_j F_j K_{j-l} via FFT, F given by its fft."""
    ktil = np.roll(kernel_rows[:, ::-1], 1, axis=1)
    return np.fft.ifft(fhat_rows * np.fft.fft(ktil, axis=1), axis=1)


def area_transform_on_grid(grid: PolarGrid, w: np.ndarray) -> np.ndarray:
    """area_cauchy_transform evaluated at every grid node (fast path).

    Uses the ring-pair circulant structure of both kernels: identical to the
    punctured, subtracted quadrature of area_cauchy_transform up to roundoff.
    """
    w = as_field(grid, w)
    nr, nt = grid.n_r, grid.n_theta
    r = grid.radii
    aw = grid.radial_weights() * r * grid.d_theta   # per-ring node weight
    eith = np.exp(1j * grid.thetas)
    beta = grid.thetas

    f_w = np.fft.fft(w * aw[:, None], axis=1)        # densities w*A per ring
    f_a = np.fft.fft(np.broadcast_to(aw[:, None], (nr, nt)).copy(), axis=1)
    f_wc = np.fft.fft(np.conj(w) * aw[:, None], axis=1)

    # z-independent pieces: C1 = sum A w / zeta, C2 = sum A conj(w) / conj(zeta)
    zeta = grid.nodes_z()
    c1 = complex(np.sum(aw[:, None] * w / zeta))
    c2 = complex(np.sum(aw[:, None] * np.conj(w) / np.conj(zeta)))
    ca1 = complex(np.sum(aw[:, None] / zeta))
    ca2 = np.conj(ca1)

    s_w1 = np.zeros((nr, nt), dtype=complex)   # sum' w A * 2/(zeta-z)
    s_a1 = np.zeros((nr, nt), dtype=complex)   # sum'   A * 2/(zeta-z)
    s_w2 = np.zeros((nr, nt), dtype=complex)   # sum' conj(w) A * 2z/(1-z conj(zeta))
    s_a2 = np.zeros((nr, nt), dtype=complex)
    for t in range(nr):
        rt = r[t]
        kden = r[:, None] * np.exp(1j * beta)[None, :] - rt   # rho e^{i b} - r_t
        kden[t, 0] = 1.0
        kap = 1.0 / kden
        kap[t, 0] = 0.0                                        # punctured node
        denom = 1.0 - rt * r[:, None] * np.exp(1j * beta)[None, :]
        denom[t, 0] = 1.0          # punctured node (vanishes when r_t = 1)
        eta = 1.0 / denom
        eta[t, 0] = 0.0            # target-node term of the convolution
        corr = _circ_corr(f_w, kap)
        corr_a = _circ_corr(f_a, kap)
        ketahat = np.fft.fft(eta, axis=1)
        conv = np.fft.ifft(f_wc * ketahat, axis=1)
        conv_a = np.fft.ifft(f_a * ketahat, axis=1)
        s_w1[t] = 2.0 * np.conj(eith) * corr.sum(axis=0)
        s_a1[t] = 2.0 * np.conj(eith) * corr_a.sum(axis=0)
        s_w2[t] = 2.0 * rt * eith * conv.sum(axis=0)
        s_a2[t] = 2.0 * rt * eith * conv_a.sum(axis=0)

    z = grid.nodes_z()
    c = w  # subtraction constant at a grid target is the field value itself
    # punctured sums of the full kernels, assembled from the split pieces;
    # the 1/zeta pieces lose their target-node term too
    corr1_w = s_w1 - (c1 - aw[:, None] * w / zeta)
    corr1_a = s_a1 - (ca1 - aw[:, None] / zeta)
    corr2_w = s_w2 + (c2 - aw[:, None] * np.conj(w) / np.conj(zeta))
    corr2_a = s_a2 + (ca2 - aw[:, None] / np.conj(zeta))
    total = (corr1_w - c * corr1_a) + (corr2_w - np.conj(c) * corr2_a)
    return -total / (2.0 * np.pi) + c * np.conj(z) - np.conj(c) * z


# -- the g-problem ------------------------------------------------------------

def solve_g_problem(grid: PolarGrid, metric, map_data) -> np.ndarray:
    """Explicit solution of d/dzbar g = (log lambda)_zbar/4 + (log rho)_phi phi_zbar
    with Re g = log(lambda^(1/4) rho(phi)^(1/2)) on the circle and Im g(0) = 0.

    Assembled as log lambda^(1/4) + Schwarz term + two-kernel area term; each
    summand already has vanishing imaginary part at the origin.
    """
    lam = metric.lam
    rho = map_data.rho_at_phi
    if np.min(lam) <= 0 or np.min(rho) <= 0:
        raise ValueError("metric densities must stay positive")
    w = map_data.dlog_rho_dphi * map_data.dphi_zbar
    h_b = 0.5 * np.log(np.real(rho[-1]))
    g = 0.25 * np.log(lam).astype(complex)
    g += schwarz_on_grid(grid, h_b)
    if np.max(np.abs(w)) > 0:
        g += area_transform_on_grid(grid, w)
    return g


# -- the index -1 Riemann-Hilbert problem -------------------------------------

def rh_solve_index_minus_one(grid: PolarGrid, phi, f) -> HolomorphicPair:
    """Unique holomorphic pair with A+ - phi * conj(A-) = f on the circle,
    for a symbol of winding index -1.

    Construction: gamma = Cauchy integral of log(zeta*phi) (a continuous
    branch exists since zeta*phi has index 0), psi = Cauchy integral of
    f e^{-gamma} with the interior boundary value of gamma in the density;
    then A+ = e^gamma psi inside and A-(z) = conj(e^gamma psi at 1/conj(z))/z,
    pulled back from the exterior.  The grid has no node at z = 0, where A-
    would need its (finite) limit value.
    """
    sym = phi.values if isinstance(phi, BoundarySymbol) else np.asarray(phi, dtype=complex)
    f = np.asarray(f, dtype=complex)
    n = grid.n_theta
    kappa = winding_index(sym)
    if kappa != -1:
        raise SymbolError(f"symbol has index {kappa}, solver requires -1")
    chi = grid.boundary_z() * sym
    logchi = continuous_log(chi)
    chihat = np.fft.fft(logchi) / n

    gamma_int = cauchy_modal_interior(grid, chihat)
    gamma_bdry = gamma_int[-1]
    dens = f * np.exp(-gamma_bdry)
    denshat = np.fft.fft(dens) / n
    psi_int = cauchy_modal_interior(grid, denshat)
    a_plus = np.exp(gamma_int) * psi_int

    ext_radii = 1.0 / grid.radii          # reflected points 1/conj(z), |z| = r
    gamma_ext = cauchy_modal_exterior(grid, chihat, ext_radii)
    psi_ext = cauchy_modal_exterior(grid, denshat, ext_radii)
    z = grid.nodes_z()
    a_minus = np.conj(np.exp(gamma_ext) * psi_ext) / z
    return HolomorphicPair(a_plus, a_minus)


def rh_boundary_residual(grid: PolarGrid, pair: HolomorphicPair, phi, f) -> float:
    """Sup-norm defect of A+ - phi*conj(A-) = f on the boundary ring."""
    sym = phi.values if isinstance(phi, BoundarySymbol) else np.asarray(phi, dtype=complex)
    res = pair.a_plus[-1] - sym * np.conj(pair.a_minus[-1]) - np.asarray(f)
    return float(np.max(np.abs(res)))
