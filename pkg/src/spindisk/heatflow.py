"""Dirac-harmonic map heat flow on the flat disk into a sphere.

Extrinsic formulation: the map runs through the ambient space of the target,
the nearest-point projection supplies the coupling matrices, and each step

  1. solves the constrained Dirac problem for the spinor along the current
     map (coupling form Omega = [nu, d nu]),
  2. assembles the nonlinear source (second-fundamental-form term plus the
     spinor curvature term),
  3. advances the map by one backward-Euler step of the Dirichlet heat
     semigroup with that source (the one-step discretization of the Duhamel
     operator behind the short-time existence argument).

The time-lagged coupling mirrors the fixed-point structure: the spinor is
resolved from the current map before the map moves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import disk_geometry as dg
from .disk_geometry import PolarGrid, helmholtz_dirichlet_solve
from .dirac_solver import CouplingForm, DiscreteDiracSolver


class TubularNeighborhoodError(RuntimeError):
    pass


@dataclass(frozen=True)
class TargetManifold:
    """Submanifold of R^q given by its nearest-point projection and the
    first two derivative tensors of the projection (vectorized over grids)."""

    q: int
    pi: callable          # (q, ...) -> (q, ...)
    dpi: callable         # (q, ...) -> (q, q, ...)
    d2pi: callable        # (q, ...) -> (q, q, q, ...)
    tube_radius: float = 0.5


def sphere_target(q: int, tube_radius: float = 0.5) -> TargetManifold:
    """Unit sphere S^{q-1} with closed-form projection derivatives."""

    def pi(y):
        s = np.sqrt(np.sum(y ** 2, axis=0))
        return y / s

    def dpi(y):
        s = np.sqrt(np.sum(y ** 2, axis=0))
        eye = np.eye(q).reshape((q, q) + (1,) * (y.ndim - 1))
        return eye / s - np.einsum("a...,b...->ab...", y, y) / s ** 3

    def d2pi(y):
        s = np.sqrt(np.sum(y ** 2, axis=0))
        eye = np.eye(q).reshape((q, q) + (1,) * (y.ndim - 1))
        yyy = np.einsum("a...,b...,c...->abc...", y, y, y)
        t = -(np.einsum("ab...,c...->abc...", eye, y)
              + np.einsum("ac...,b...->abc...", eye, y)
              + np.einsum("bc...,a...->abc...", eye, y))
        return t / s ** 3 + 3.0 * yyy / s ** 5

    return TargetManifold(q, pi, dpi, d2pi, tube_radius)


def generic_target(q: int, pi_fn, eps: float = 1e-5,
                   tube_radius: float = 0.5) -> TargetManifold:
    """Finite-difference fallback for targets given only by the projection."""

    def dpi(y):
        out = np.empty((q, q) + y.shape[1:])
        for b in range(q):
            e = np.zeros_like(y)
            e[b] = eps
            out[:, b] = (pi_fn(y + e) - pi_fn(y - e)) / (2 * eps)
        return out

    def d2pi(y):
        out = np.empty((q, q, q) + y.shape[1:])
        for c in range(q):
            e = np.zeros_like(y)
            e[c] = eps
            out[:, :, c] = (dpi(y + e) - dpi(y - e)) / (2 * eps)
        return out

    return TargetManifold(q, pi_fn, dpi, d2pi, tube_radius)


def constraint_distance(phi: np.ndarray, target: TargetManifold) -> float:
    """sup over nodes of |Phi - pi(Phi)|."""
    return float(np.max(np.sqrt(np.sum((phi - target.pi(phi)) ** 2, axis=0))))


def _check_tube(phi, target):
    d = constraint_distance(phi, target)
    if d > target.tube_radius:
        raise TubularNeighborhoodError(
            f"map left the tubular neighborhood: distance {d:.3g} exceeds "
            f"radius {target.tube_radius:.3g}")


def _gradients(grid: PolarGrid, phi: np.ndarray):
    """Flat (d_x, d_y) of each real component; shapes (q, n_r, n_theta)."""
    gx = np.empty_like(phi)
    gy = np.empty_like(phi)
    for a in range(phi.shape[0]):
        ux, uy = dg.gradient_apply(grid, phi[a].astype(complex))
        gx[a], gy[a] = ux.real, uy.real
    return gx, gy


def omega_of(grid: PolarGrid, phi: np.ndarray,
             target: TargetManifold) -> CouplingForm:
    """Coupling 1-form [nu(Phi), d(nu(Phi))] by the chain rule through dPhi."""
    _check_tube(phi, target)
    q = target.q
    dpi = target.dpi(phi)
    eye = np.eye(q).reshape((q, q, 1, 1))
    nu = eye - dpi
    d2 = target.d2pi(phi)
    gx, gy = _gradients(grid, phi)
    dnu_x = -np.einsum("abc...,c...->ab...", d2, gx)
    dnu_y = -np.einsum("abc...,c...->ab...", d2, gy)
    om_x = (np.einsum("ac...,cb...->ab...", nu, dnu_x)
            - np.einsum("ac...,cb...->ab...", dnu_x, nu))
    om_y = (np.einsum("ac...,cb...->ab...", nu, dnu_y)
            - np.einsum("ac...,cb...->ab...", dnu_y, nu))
    return CouplingForm.from_real_xy(om_x.astype(complex), om_y.astype(complex))


def _spinor_bilinears(psi: np.ndarray):
    """J_i[D,F] = Re <Psi^D, e_i . Psi^F> for pairs psi (q, 2, ...)."""
    u, v = psi[:, 0], psi[:, 1]
    uv = np.einsum("d...,f...->df...", u, np.conj(v))
    vu = np.einsum("d...,f...->df...", v, np.conj(u))
    j1 = (-uv + vu).real
    j2 = (uv + vu).imag
    return j1, j2


def curvature_term(grid: PolarGrid, phi: np.ndarray, psi: np.ndarray,
                   target: TargetManifold) -> np.ndarray:
    """<Omega-tilde^A_B, d Phi^B>: the spinor curvature source of the flow,
    assembled through the antisymmetrized tensor R^A_{GDF}."""
    _check_tube(phi, target)
    dpi = target.dpi(phi)
    d2 = target.d2pi(phi)
    s = np.einsum("ab...,cbd...->acd...", dpi, d2)     # S^{AC}_D
    r = (np.einsum("acd...,gcf...->agdf...", s, s)
         - np.einsum("gcd...,acf...->agdf...", s, s))  # R^A_{GDF}
    j1, j2 = _spinor_bilinears(psi)
    omt_x = 0.5 * np.einsum("agdf...,df...->ag...", r, j1)
    omt_y = 0.5 * np.einsum("agdf...,df...->ag...", r, j2)
    gx, gy = _gradients(grid, phi)
    return (np.einsum("ag...,g...->a...", omt_x, gx)
            + np.einsum("ag...,g...->a...", omt_y, gy))


def flow_nonlinear(grid: PolarGrid, phi: np.ndarray, psi: np.ndarray | None,
                   target: TargetManifold) -> np.ndarray:
    """-(second fundamental form term + spinor coupling term).

    The coupling term here is the direct contraction
    pi^A_B pi^C_{BD} pi^C_{EF} Re<Psi^D, grad Phi^E . Psi^F>; the
    curvature_term route must agree with it on maps into the target.
    """
    _check_tube(phi, target)
    d2 = target.d2pi(phi)
    gx, gy = _gradients(grid, phi)
    quad = (np.einsum("abc...,b...,c...->a...", d2, gx, gx)
            + np.einsum("abc...,b...,c...->a...", d2, gy, gy))
    out = -quad
    if psi is not None and np.max(np.abs(psi)) > 0:
        dpi = target.dpi(phi)
        s = np.einsum("ab...,cbd...->acd...", dpi, d2)
        j1, j2 = _spinor_bilinears(psi)
        p_cd = (np.einsum("cef...,e...,df...->cd...", d2, gx, j1)
                + np.einsum("cef...,e...,df...->cd...", d2, gy, j2))
        out = out - np.einsum("acd...,cd...->a...", s, p_cd)
    return out


def flow_rhs(grid: PolarGrid, phi: np.ndarray, psi: np.ndarray | None,
             target: TargetManifold) -> np.ndarray:
    """Full right-hand side Delta Phi - (nonlinear terms)."""
    lap = np.stack([dg.laplacian_apply(grid, phi[a].astype(complex)).real
                    for a in range(phi.shape[0])])
    return lap + flow_nonlinear(grid, phi, psi, target)


def dirac_substep(grid: PolarGrid, phi: np.ndarray, bpsi_pairs,
                  target: TargetManifold, solver: DiscreteDiracSolver,
                  rtol: float = 1e-11):
    """Spinor along the current map: solve the Omega-coupled Dirac problem.

    Returns (psi pairs (q,2,n_r,n_theta), tangency_sup), the latter being
    sup |nu(Phi) Psi|, the size of the normal part that the continuous
    theory proves to vanish.
    """
    omega = omega_of(grid, phi, target)
    psi, _ = solver.solve(omega, None, bpsi_pairs, target.q, rtol=rtol)
    nu = np.eye(target.q).reshape((target.q, target.q, 1, 1)) - target.dpi(phi)
    normal = np.einsum("ab...,bs...->as...", nu, psi)
    tangency = float(np.max(np.sqrt(np.sum(np.abs(normal) ** 2, axis=(0, 1)))))
    return psi, tangency


def heat_substep(grid: PolarGrid, phi: np.ndarray, source: np.ndarray | None,
                 dt: float, boundary_next: np.ndarray) -> np.ndarray:
    """One backward-Euler Dirichlet heat step (Id - dt Delta) Phi' = Phi + dt S."""
    q = phi.shape[0]
    out = np.empty_like(phi)
    for a in range(q):
        rhs = phi[a].astype(complex)
        if source is not None:
            rhs = rhs + dt * source[a]
        out[a] = helmholtz_dirichlet_solve(grid, 1.0, -dt, rhs,
                                           boundary_next[a].astype(complex)).real
    return out


# -- flow driver ----------------------------------------------------------------

@dataclass
class FlowConfig:
    n_r: int = 24
    n_theta: int = 48
    q: int = 3
    dt: float = 2e-3
    t_end: float = 0.1
    phi_preset: str = "bump"
    phi_amplitude: float = 0.9
    bpsi_preset: str = "projected"
    bpsi_scale: float = 0.5
    sign: int = 1
    variant: str = "chiral"
    blowup_threshold: float = 1e3
    tube_radius: float = 0.5
    keep_fields: bool = False
    seed: int = 0


@dataclass
class FlowState:
    t: float
    monitors: dict
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None


@dataclass
class FlowResult:
    states: list
    status: str            # completed | blowup | constraint_abort
    final_phi: np.ndarray
    final_psi: np.ndarray


def initial_map(grid: PolarGrid, name: str, q: int,
                amplitude: float = 0.9) -> np.ndarray:
    """Preset initial/boundary maps with values exactly on S^{q-1}."""
    x = grid.nodes_z().real
    y = grid.nodes_z().imag
    phi = np.zeros((q, grid.n_r, grid.n_theta))
    if name == "constant":
        phi[q - 1] = 1.0
    elif name == "bump":
        if q < 3:
            raise ValueError("bump preset needs q >= 3")
        al = amplitude * x
        be = amplitude * y
        phi[0] = np.cos(al)
        phi[1] = np.sin(al) * np.cos(be)
        phi[2] = np.sin(al) * np.sin(be)
    else:
        raise ValueError(f"unknown map preset {name!r}")
    return phi


def boundary_spinor_pairs(grid: PolarGrid, name: str, phi_boundary: np.ndarray,
                          target: TargetManifold, scale: float = 0.5):
    """Boundary data for the spinor, tangent along the boundary map."""
    q = target.q
    n = grid.n_theta
    if name == "zero":
        return [(np.zeros(n, complex), np.zeros(n, complex)) for _ in range(q)]
    if name == "projected":
        dpi = target.dpi(phi_boundary)     # (q, q, n)
        xi = np.array([1.0, 0.5, -0.3, 0.8, -0.2][:q] + [0.0] * max(0, q - 5))
        coef = np.einsum("ab...,b->a...", dpi, xi)
        mod = 1.0 + 0.3 * np.cos(grid.thetas)
        pair_u = scale * mod * (1.0 + 0.0j)
        pair_v = scale * mod * 0.4j
        return [(coef[a] * pair_u, coef[a] * pair_v) for a in range(q)]
    raise ValueError(f"unknown spinor boundary preset {name!r}")


def monitors_of(grid: PolarGrid, phi, psi, target, tangency: float) -> dict:
    gx, gy = _gradients(grid, phi)
    gsq = np.sum(gx ** 2 + gy ** 2, axis=0)
    energy = 0.5 * dg.area_integral(grid, gsq.astype(complex)).real
    return {
        "constraint_sup": constraint_distance(phi, target),
        "tangency_sup": tangency,
        "energy": energy,
        "grad_sup": float(np.sqrt(np.max(gsq))),
    }


def run_flow(config: FlowConfig) -> FlowResult:
    """Time-lagged coupled loop; halts on t_end, blow-up, or tube exit."""
    grid = PolarGrid(config.n_r, config.n_theta)
    metric = dg.flat_metric(grid)
    target = sphere_target(config.q, config.tube_radius)
    solver = DiscreteDiracSolver(grid, metric, config.sign, config.variant,
                                 None, tilde=False)
    phi = initial_map(grid, config.phi_preset, config.q, config.phi_amplitude)
    phi_b = phi[:, -1, :].copy()          # static boundary values
    bpsi = boundary_spinor_pairs(grid, config.bpsi_preset, phi_b, target,
                                 config.bpsi_scale)
    states = []
    psi = np.zeros((config.q, 2, grid.n_r, grid.n_theta), dtype=complex)
    t = 0.0
    status = "completed"
    nsteps = int(round(config.t_end / config.dt))
    for k in range(nsteps + 1):
        if constraint_distance(phi, target) > config.tube_radius:
            status = "constraint_abort"
            break
        psi, tangency = dirac_substep(grid, phi, bpsi, target, solver)
        mon = monitors_of(grid, phi, psi, target, tangency)
        states.append(FlowState(
            t, mon,
            phi.copy() if config.keep_fields else None,
            psi.copy() if config.keep_fields else None))
        if mon["grad_sup"] > config.blowup_threshold:
            status = "blowup"
            break
        if k == nsteps:
            break
        source = flow_nonlinear(grid, phi, psi, target)
        phi = heat_substep(grid, phi, source, config.dt, phi_b)
        t += config.dt
    return FlowResult(states, status, phi, psi)
