"""Polar grid, discrete calculus, and quadrature on the unit disk.

Grid layout: tensor product of n_r radii and n_theta uniform angles.  The
radii are uniform and offset from the origin,

    r_j = (2j + 1) / (2 n_r - 1),   j = 0 .. n_r-1,

so there is no node at r = 0 and the last ring lies exactly on the boundary
circle.  The pole is handled by the parity extension u(-r, theta) =
u(r, theta + pi): a radial stencil reaching below r_0 folds onto the first
rings rotated by half a turn (exact on the grid because n_theta is even).

Angular derivatives are spectral (FFT); radial derivatives are 4th-order
finite differences, one-sided near r = 1.  Fields are plain complex ndarrays
of shape (n_r, n_theta), ring-major.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np


class GridError(ValueError):
    pass


def fornberg_weights(xs, x0, m):
    """Finite-difference weights for the m-th derivative at x0 on nodes xs.

    Classic recursive algorithm; returns an array w with
    f^(m)(x0) ~ sum_i w[i] f(xs[i]).
    """
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    w = np.zeros((n, m + 1))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[i, k] = c1 * (k * w[i - 1, k - 1] - c5 * w[i - 1, k]) / c2
                w[i, 0] = -c1 * c5 * w[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                w[j, k] = (c4 * w[j, k] - k * w[j, k - 1]) / c3
            w[j, 0] = c4 * w[j, 0] / c3
        c1 = c2
    return w[:, m]


@lru_cache(maxsize=None)
def _centered_weights(order: int, h: float):
    return fornberg_weights(h * np.arange(-2, 3), 0.0, order)


@lru_cache(maxsize=None)
def _edge_weights(order: int, h: float):
    """One-sided stencils for the two outermost rings, 4th order."""
    if order == 1:
        offs2 = np.arange(-3, 2)
        offs1 = np.arange(-4, 1)
    else:
        offs2 = np.arange(-4, 2)
        offs1 = np.arange(-5, 1)
    w2 = fornberg_weights(h * offs2, 0.0, order)
    w1 = fornberg_weights(h * offs1, 0.0, order)
    return (offs2, w2), (offs1, w1)


@dataclass(frozen=True)
class PolarGrid:
    n_r: int
    n_theta: int
    radii: np.ndarray = field(repr=False, compare=False, default=None)
    thetas: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.n_r < 4:
            raise GridError("need at least 4 radial rings")
        if self.n_theta < 8 or self.n_theta % 2:
            raise GridError("n_theta must be even and >= 8")
        object.__setattr__(
            self, "radii",
            (2.0 * np.arange(self.n_r) + 1.0) / (2.0 * self.n_r - 1.0))
        object.__setattr__(
            self, "thetas",
            2.0 * np.pi * np.arange(self.n_theta) / self.n_theta)

    @property
    def h_r(self) -> float:
        return 2.0 / (2.0 * self.n_r - 1.0)

    @property
    def d_theta(self) -> float:
        return 2.0 * np.pi / self.n_theta

    def nodes_z(self) -> np.ndarray:
        """Complex coordinates of all nodes, shape (n_r, n_theta)."""
        return self.radii[:, None] * np.exp(1j * self.thetas[None, :])

    def boundary_z(self) -> np.ndarray:
        return np.exp(1j * self.thetas)

    def theta_wavenumbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_theta, d=1.0 / self.n_theta)

    def zeros(self) -> np.ndarray:
        return np.zeros((self.n_r, self.n_theta), dtype=complex)

    # -- radial differentiation -------------------------------------------

    def radial_derivative(self, u: np.ndarray, order: int = 1) -> np.ndarray:
        """d^order u / dr^order with parity extension through the pole."""
        u = np.asarray(u)
        n = self.n_r
        h = self.h_r
        half = self.n_theta // 2
        out = np.empty_like(u, dtype=complex)
        # ext[j+2] = u[j]; ext[1], ext[0] are the parity ghosts below r_0
        ext = np.concatenate(
            [np.roll(u[1:2], half, axis=-1), np.roll(u[0:1], half, axis=-1), u],
            axis=0)
        c = _centered_weights(order, h)
        body = sum(c[m] * ext[m:m + n - 2] for m in range(5))
        out[: n - 2] = body
        (offs2, w2), (offs1, w1) = _edge_weights(order, h)
        out[n - 2] = sum(w * u[n - 2 + o] for o, w in zip(offs2, w2))
        out[n - 1] = sum(w * u[n - 1 + o] for o, w in zip(offs1, w1))
        return out

    def radial_derivative_matrix(self, order: int, parity_sign: int) -> np.ndarray:
        """Dense (n_r, n_r) radial derivative for one theta Fourier mode.

        parity_sign is (-1)^k: the factor a ghost ring picks up from the
        half-turn rotation of the mode e^{i k theta}.
        """
        n = self.n_r
        h = self.h_r
        mat = np.zeros((n, n))
        c = _centered_weights(order, h)
        for j in range(n - 2):
            for m, cm in zip(range(-2, 3), c):
                jj = j + m
                if jj < 0:
                    mat[j, -1 - jj] += cm * parity_sign
                else:
                    mat[j, jj] += cm
        (offs2, w2), (offs1, w1) = _edge_weights(order, h)
        for o, w in zip(offs2, w2):
            mat[n - 2, n - 2 + o] += w
        for o, w in zip(offs1, w1):
            mat[n - 1, n - 1 + o] += w
        return mat

    # -- angular differentiation ------------------------------------------

    def dtheta_apply(self, u: np.ndarray, order: int = 1) -> np.ndarray:
        """Spectral d/dtheta; the Nyquist mode of odd derivatives is zeroed."""
        k = self.theta_wavenumbers()
        mult = (1j * k) ** order
        if order % 2:
            mult[self.n_theta // 2] = 0.0
        return np.fft.ifft(mult * np.fft.fft(u, axis=-1), axis=-1)

    # -- quadrature ---------------------------------------------------------

    def radial_weights(self) -> np.ndarray:
        """Weights w_j with sum_j w_j f(r_j) ~ int_0^1 f(r) dr.

        Trapezoid on [r_0, 1] with Euler-Maclaurin end corrections, plus the
        [0, r_0] piece from the odd cubic through (r_0, f_0), (r_1, f_1).
        Valid for ring sums of smooth disk fields times r (whose theta-mean
        extends oddly through 0); exact for odd cubics.
        """
        n, h = self.n_r, self.h_r
        w = np.full(n, h)
        w[0] = w[-1] = h / 2.0
        w[0] += 51.0 * h / 192.0
        w[1] -= h / 192.0
        # + (h^2/12) f'(r_0) - (h^2/12) f'(1), both by 3-point stencils
        w[[0, 1, 2]] += (h / 24.0) * np.array([-3.0, 4.0, -1.0])
        w[[-1, -2, -3]] -= (h / 24.0) * np.array([3.0, -4.0, 1.0])
        return w


def as_field(grid: PolarGrid, values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.shape != (grid.n_r, grid.n_theta):
        raise GridError(f"field shape {arr.shape} does not match grid "
                        f"({grid.n_r}, {grid.n_theta})")
    return arr


# -- conformal metric -------------------------------------------------------

@dataclass(frozen=True)
class ConformalDiskMetric:
    """Metric lambda |dz|^2 with precomputed d(log lambda) and curvature data.

    boundary_h is the mean curvature of the boundary circle in the convention
    where -h is its geodesic curvature (flat disk: h = -1).
    """

    name: str
    lam: np.ndarray
    dlog_lambda_z: np.ndarray
    dlog_lambda_zbar: np.ndarray
    gauss_curvature: np.ndarray
    boundary_h: float


def flat_metric(grid: PolarGrid) -> ConformalDiskMetric:
    one = np.ones((grid.n_r, grid.n_theta))
    zero = grid.zeros()
    return ConformalDiskMetric("flat", one, zero, zero, 0.0 * one, -1.0)


def round_metric(grid: PolarGrid) -> ConformalDiskMetric:
    """Spherical metric 4/(1+|z|^2)^2 (curvature 1, geodesic boundary)."""
    z = grid.nodes_z()
    r2 = np.abs(z) ** 2
    lam = 4.0 / (1.0 + r2) ** 2
    dlz = -2.0 * np.conj(z) / (1.0 + r2)
    return ConformalDiskMetric("round", lam, dlz, np.conj(dlz),
                               np.ones_like(lam), 0.0)


def metric_preset(grid: PolarGrid, name: str) -> ConformalDiskMetric:
    if name == "flat":
        return flat_metric(grid)
    if name == "round":
        return round_metric(grid)
    raise GridError(f"unknown metric preset {name!r}")


def metric_from_lambda(grid: PolarGrid, lam: np.ndarray,
                       name: str = "custom") -> ConformalDiskMetric:
    """Build a metric from a sampled positive density; derivatives discrete."""
    lam = np.asarray(lam, dtype=float)
    if np.min(lam) <= 0:
        raise GridError("metric density must be positive")
    loglam = np.log(lam).astype(complex)
    dlz = dz_apply(grid, loglam)
    dlzb = dbar_apply(grid, loglam)
    kappa = (-laplacian_apply(grid, loglam).real / (2.0 * lam))
    dr_log = grid.radial_derivative(loglam, 1)[-1].real
    h = -np.mean((1.0 + 0.5 * dr_log) / np.sqrt(lam[-1]))
    return ConformalDiskMetric(name, lam, dlz, dlzb, kappa, float(h))


# -- first and second order operators ---------------------------------------

def dz_apply(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    """d/dz = e^{-i theta} (d_r - (i/r) d_theta) / 2."""
    u = as_field(grid, u)
    du = grid.radial_derivative(u, 1)
    dt = grid.dtheta_apply(u, 1)
    phase = np.exp(-1j * grid.thetas)[None, :]
    return 0.5 * phase * (du - 1j * dt / grid.radii[:, None])


def dbar_apply(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    """d/dzbar = e^{+i theta} (d_r + (i/r) d_theta) / 2."""
    u = as_field(grid, u)
    du = grid.radial_derivative(u, 1)
    dt = grid.dtheta_apply(u, 1)
    phase = np.exp(1j * grid.thetas)[None, :]
    return 0.5 * phase * (du + 1j * dt / grid.radii[:, None])


def gradient_apply(grid: PolarGrid, u: np.ndarray,
                   metric: ConformalDiskMetric | None = None):
    """Orthonormal-frame derivatives (e1 u, e2 u) = lambda^{-1/2} (u_x, u_y)."""
    u = as_field(grid, u)
    du = grid.radial_derivative(u, 1)
    dt = grid.dtheta_apply(u, 1) / grid.radii[:, None]
    ct = np.cos(grid.thetas)[None, :]
    st = np.sin(grid.thetas)[None, :]
    ux = ct * du - st * dt
    uy = st * du + ct * dt
    if metric is not None and metric.name != "flat":
        scale = 1.0 / np.sqrt(metric.lam)
        ux = scale * ux
        uy = scale * uy
    return ux, uy


def laplacian_apply(grid: PolarGrid, u: np.ndarray,
                    metric: ConformalDiskMetric | None = None) -> np.ndarray:
    """Metric Laplacian (1/lambda) (u_rr + u_r/r + u_tt/r^2); flat if metric None."""
    u = as_field(grid, u)
    r = grid.radii[:, None]
    out = (grid.radial_derivative(u, 2)
           + grid.radial_derivative(u, 1) / r
           + grid.dtheta_apply(u, 2) / r ** 2)
    if metric is not None and metric.name != "flat":
        out = out / metric.lam
    return out


# -- traces and integrals ----------------------------------------------------

def boundary_trace(grid: PolarGrid, u: np.ndarray) -> np.ndarray:
    return as_field(grid, u)[-1].copy()


def boundary_integral(grid: PolarGrid, b: np.ndarray,
                      metric: ConformalDiskMetric | None = None) -> complex:
    """Trapezoid rule for the boundary line integral (arclength measure)."""
    b = np.asarray(b)
    if b.shape[-1] != grid.n_theta:
        raise GridError("boundary trace length mismatch")
    ds = grid.d_theta
    if metric is not None and metric.name != "flat":
        return complex(np.sum(b * np.sqrt(metric.lam[-1])) * ds)
    return complex(np.sum(b) * ds)


def area_integral(grid: PolarGrid, u: np.ndarray,
                  metric: ConformalDiskMetric | None = None) -> complex:
    """Tensor quadrature of int_D u dA with weight r * lambda."""
    u = as_field(grid, u)
    w = grid.radial_weights()[:, None] * grid.radii[:, None] * grid.d_theta
    if metric is not None and metric.name != "flat":
        w = w * metric.lam
    return complex(np.sum(w * u))


# -- modal Helmholtz solver ---------------------------------------------------

_helmholtz_cache: dict = {}


def _helmholtz_factors(grid: PolarGrid, alpha: float, beta: float):
    """LU factors of (alpha I + beta Delta_flat) per theta mode, Dirichlet row
    at r = 1.  Cached on (dims, alpha, beta)."""
    import scipy.linalg as sla
    key = (grid.n_r, grid.n_theta, float(alpha), float(beta))
    if key in _helmholtz_cache:
        return _helmholtz_cache[key]
    n, m = grid.n_theta, grid.n_r
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    inv_r = 1.0 / grid.radii
    factors = []
    for i in range(n):
        par = 1 if k[i] % 2 == 0 else -1
        lap = (grid.radial_derivative_matrix(2, par)
               + np.diag(inv_r) @ grid.radial_derivative_matrix(1, par)
               - k[i] ** 2 * np.diag(inv_r ** 2))
        mat = alpha * np.eye(m) + beta * lap
        mat[m - 1, :] = 0.0
        mat[m - 1, m - 1] = 1.0
        factors.append(sla.lu_factor(mat))
    _helmholtz_cache[key] = factors
    return factors


def helmholtz_dirichlet_solve(grid: PolarGrid, alpha: float, beta: float,
                              rhs: np.ndarray, boundary_values: np.ndarray) -> np.ndarray:
    """Solve (alpha + beta Delta_flat) u = rhs in D, u = boundary_values on r=1.

    Same discretization as laplacian_apply (radial FD + spectral theta),
    solved exactly mode by mode.
    """
    import scipy.linalg as sla
    factors = _helmholtz_factors(grid, alpha, beta)
    rhat = np.fft.fft(np.asarray(rhs, dtype=complex), axis=1)
    bhat = np.fft.fft(np.asarray(boundary_values, dtype=complex))
    out = np.empty_like(rhat)
    for i in range(grid.n_theta):
        r = rhat[:, i].copy()
        r[-1] = bhat[i]
        out[:, i] = sla.lu_solve(factors[i], r)
    return np.fft.ifft(out, axis=1)


def poisson_dirichlet_solve(grid: PolarGrid, rhs: np.ndarray,
                            boundary_values=None,
                            metric: ConformalDiskMetric | None = None) -> np.ndarray:
    """Metric Poisson problem Delta_lambda u = rhs with Dirichlet data."""
    if boundary_values is None:
        boundary_values = np.zeros(grid.n_theta, dtype=complex)
    rr = np.asarray(rhs, dtype=complex)
    if metric is not None and metric.name != "flat":
        rr = rr * metric.lam
    return helmholtz_dirichlet_solve(grid, 0.0, 1.0, rr, boundary_values)


# -- serialization -----------------------------------------------------------

def save_field(path, grid: PolarGrid, u: np.ndarray,
               metric_preset_name: str = "flat") -> None:
    """CSV dump (r, theta, re, im) plus a JSON sidecar describing the grid."""
    u = as_field(grid, u)
    path = Path(path)
    rr = np.repeat(grid.radii, grid.n_theta)
    tt = np.tile(grid.thetas, grid.n_r)
    data = np.column_stack([rr, tt, u.real.ravel(), u.imag.ravel()])
    np.savetxt(path, data, fmt="%.17g", delimiter=",",
               header="r,theta,re,im", comments="")
    sidecar = {"n_r": grid.n_r, "n_theta": grid.n_theta,
               "metric_preset": metric_preset_name}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=1) + "\n")


def load_field(path):
    """Inverse of save_field; returns (grid, field, metric_preset_name)."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = PolarGrid(sidecar["n_r"], sidecar["n_theta"])
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    u = (data[:, 2] + 1j * data[:, 3]).reshape(grid.n_r, grid.n_theta)
    return grid, u, sidecar["metric_preset"]
