"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  Each test also enforces its wall-clock budget.
"""

import json
import time
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0

from spindisk import cli
from spindisk import disk_geometry as dg
from spindisk import dirac_solver as ds
from spindisk import heatflow as hf
from spindisk import identity_lab as il
from spindisk import riemann_hilbert as rh
from spindisk import spinor_core as sc


def report(num, name, ok, detail):
    line = f"[ACCEPTANCE {num}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print("\n" + line)
    assert ok, line


# -- 1: exact pointwise algebra --------------------------------------------------

def test_criterion_1_clifford_projector_algebra():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    n_samples = 1200
    worst = 0.0
    eye = np.eye(2, dtype=complex)
    # exact matrix relations once (integer/unit entries)
    assert np.array_equal(sc.E1 @ sc.E1, -eye)
    assert np.array_equal(sc.E2 @ sc.E2, -eye)
    assert np.array_equal(sc.E1 @ sc.E2 + sc.E2 @ sc.E1, np.zeros((2, 2)))
    assert np.array_equal(sc.G @ sc.G, eye)
    assert np.array_equal(sc.G.conj().T, sc.G)
    for e in (sc.E1, sc.E2):
        assert np.array_equal(sc.G @ e + e @ sc.G, np.zeros((2, 2)))
    for _ in range(n_samples):
        a, b = rng.standard_normal(2)
        s = sc.SpinorValue(*(rng.standard_normal(2) + 1j * rng.standard_normal(2)))
        t = sc.SpinorValue(*(rng.standard_normal(2) + 1j * rng.standard_normal(2)))
        x = sc.CliffordVector(a, b)
        theta = rng.uniform(0, 2 * np.pi)
        p = sc.BoundaryPoint(theta)
        scl = 1.0 + s.norm() * t.norm() + x.norm_sq()
        # Clifford square, chirality anticommutation, skew-adjointness
        xx = sc.clifford_mul(x, sc.clifford_mul(x, s))
        worst = max(worst, np.max(np.abs(
            xx.as_vector() + x.norm_sq() * s.as_vector())) / scl)
        gx = sc.chirality_apply(sc.clifford_mul(x, s)).as_vector() \
            + sc.clifford_mul(x, sc.chirality_apply(s)).as_vector()
        worst = max(worst, np.max(np.abs(gx)) / scl)
        worst = max(worst, abs(sc.hermitian_inner(sc.clifford_mul(x, s), t)
                               + sc.hermitian_inner(s, sc.clifford_mul(x, t))) / scl)
        # projector families: idempotent, complementary, self-adjoint,
        # intertwined with n.X for tangent X
        for proj in (sc.chiral_projector, sc.mit_projector):
            for sign in (1, -1):
                once = proj(sign, p, s)
                worst = max(worst, np.max(np.abs(
                    proj(sign, p, once).as_vector() - once.as_vector())) / scl)
                worst = max(worst, np.max(np.abs(
                    proj(-sign, p, once).as_vector())) / scl)
                total = proj(1, p, s).as_vector() + proj(-1, p, s).as_vector()
                worst = max(worst, np.max(np.abs(total - s.as_vector())) / scl)
        worst = max(worst, abs(
            sc.hermitian_inner(sc.chiral_projector(1, p, s), t)
            - sc.hermitian_inner(s, sc.chiral_projector(1, p, t))) / scl)
        z = np.exp(1j * theta)
        nmat = sc.normal_clifford_matrix(z)
        tmat = -np.sin(theta) * sc.E1 + np.cos(theta) * sc.E2
        lhs = nmat @ tmat @ sc.chiral_projector_matrix(1, z)
        rhs = sc.chiral_projector_matrix(-1, z) @ nmat @ tmat
        worst = max(worst, np.max(np.abs((lhs - rhs) @ s.as_vector())) / scl)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    report(1, "Clifford/projector algebra", ok,
           f"{n_samples} samples, worst defect {worst:.2e}, {elapsed:.1f}s")


# -- 2: Riemann-Hilbert oracles ---------------------------------------------------

def test_criterion_2_riemann_hilbert_oracles():
    t0 = time.perf_counter()
    grid = dg.PolarGrid(32, 256)
    zeta = grid.boundary_z()
    worst = 0.0
    # cauchy_integral examples against residue calculus
    z0 = 0.3 + 0.1j
    worst = max(worst, abs(rh.cauchy_integral(zeta ** 2, z0) - z0 ** 2))
    worst = max(worst, abs(rh.cauchy_integral(1.0 / zeta, 0.2 - 0.4j)))
    z_out = 1.9 + 0.3j
    worst = max(worst, abs(rh.cauchy_integral(1.0 / zeta, z_out) + 1.0 / z_out))
    worst = max(worst, abs(rh.cauchy_integral(1.0 / (zeta - 2.0), z0)
                           - 1.0 / (z0 - 2.0)))
    # rh_solve examples for the symbol 1/zeta
    z = grid.nodes_z()
    pair = rh.rh_solve_index_minus_one(grid, 1.0 / zeta, np.ones(256))
    worst = max(worst, np.max(np.abs(pair.a_plus - 1.0)),
                np.max(np.abs(pair.a_minus)))
    pair = rh.rh_solve_index_minus_one(grid, 1.0 / zeta, 1.0 / zeta)
    worst = max(worst, np.max(np.abs(pair.a_plus)),
                np.max(np.abs(pair.a_minus + 1.0)))
    pair = rh.rh_solve_index_minus_one(grid, 1.0 / zeta, zeta)
    worst = max(worst, np.max(np.abs(pair.a_plus - z)),
                np.max(np.abs(pair.a_minus)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    report(2, "Riemann-Hilbert oracle suite", ok,
           f"worst defect {worst:.2e} at n_theta=256, {elapsed:.1f}s")


# -- 3: closed form vs discrete -----------------------------------------------------

def test_criterion_3_closed_vs_discrete():
    t0 = time.perf_counter()
    presets = [("flat", "id", "flat"), ("flat", "id", "round"),
               ("round", "warp", "round")]
    details = []
    ok = True
    for met_name, map_name, rho_name in presets:
        diffs = []
        for n in ((64, 128), (128, 256)):
            grid = dg.PolarGrid(*n)
            met = dg.metric_preset(grid, met_name)
            mp = ds.map_preset(grid, map_name, rho_name)
            b = ds.boundary_spinor_preset(grid, "mode")
            cf = ds.solve_chiral_bvp_closed_form(grid, met, mp, b, +1)
            fields, _, _ = ds.solve_bvp_discrete(grid, met, None, None, [b],
                                                 sign=+1, map_data=mp, q=1)
            diffs.append(max(np.max(np.abs(a - c)) for a, c in
                             zip(fields[0].components(), cf.components())))
        ok &= diffs[0] <= 1e-3
        floor = 1e-11  # flat presets agree to rounding; no ratio demanded there
        ok &= diffs[0] < floor or diffs[1] <= diffs[0] / 3.0
        details.append(f"{met_name}/{map_name}/{rho_name}: "
                       f"{diffs[0]:.2e}->{diffs[1]:.2e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120.0
    report(3, "closed-form vs discrete cross-validation", ok,
           "; ".join(details) + f", {elapsed:.0f}s")


# -- 4: identity suite ---------------------------------------------------------------

def test_criterion_4_identity_suite():
    t0 = time.perf_counter()
    ladder = [(32, 64), (64, 128), (128, 256)]
    hs = [dg.PolarGrid(*lv).h_r for lv in ladder]
    rates = {}
    floors = {}
    for check in ("green", "twistor", "weitzenbock", "reilly"):
        defects = []
        for lv in ladder:
            grid = dg.PolarGrid(*lv)
            met = dg.round_metric(grid)
            psi = il.random_spinor(grid, 3)
            if check == "green":
                d = il.check_green(grid, met, psi, il.random_spinor(grid, 4))
            elif check == "twistor":
                d = il.check_twistor(grid, met, psi)
            elif check == "weitzenbock":
                d = il.check_weitzenbock(grid, met, psi)
            else:
                f = il.solve_weight_f(grid, met,
                                      np.abs(met.gauss_curvature) / 2.0)
                d = il.check_weighted_reilly(grid, met, psi, f)
            defects.append(max(d.defect, d.sup_defect if check == "twistor" else 0.0))
        floors[check] = max(defects) < 1e-11
        rates[check] = (float("inf") if floors[check]
                        else np.log(defects[0] / defects[-1]) / np.log(hs[0] / hs[-1]))
    thresholds = {"green": 1.7, "twistor": 1.7, "weitzenbock": 1.7, "reilly": 0.7}
    ok = all(rates[c] >= thresholds[c] for c in thresholds)
    # prop31 over 1000 random spinors
    grid = dg.PolarGrid(32, 64)
    met = dg.round_metric(grid)
    violations = 0
    for k in range(1000):
        d = il.check_prop31(grid, met, il.random_spinor(grid, k), +1)
        if d.defect > 1e-8 * max(1.0, d.rhs):
            violations += 1
    ok &= violations == 0
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300.0
    rate_str = ", ".join(f"{c}={rates[c]:.2f}" for c in thresholds)
    report(4, "identity suite", ok,
           f"rates {rate_str}; prop31 violations {violations}/1000, {elapsed:.0f}s")


# -- 5: kernel triviality ---------------------------------------------------------------

def test_criterion_5_kernel_triviality():
    t0 = time.perf_counter()
    levels = [(24, 48), (32, 64), (48, 96)]
    details = []
    ok = True
    cases = [("omega=0", None, 1),
             ("omega seed 3", lambda g: ds.random_coupling_preset(
                 g, q=2, seed=3, amplitude=0.7), 2),
             ("omega seed 11", lambda g: ds.random_coupling_preset(
                 g, q=2, seed=11, amplitude=0.4), 2)]
    for label, builder, q in cases:
        recs = il.kernel_triviality_scan(levels, "flat", builder, q=q)
        sigmas = [r["sigma_min"] for r in recs]
        spread = max(sigmas) / min(sigmas)
        ok &= spread <= 2.0 and min(sigmas) > 0.0
        details.append(f"{label}: sigma {min(sigmas):.3f}..{max(sigmas):.3f} "
                       f"spread {spread:.2f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 180.0
    report(5, "uniqueness/kernel scan", ok, "; ".join(details) + f", {elapsed:.0f}s")


# -- 6: flow suite -----------------------------------------------------------------------

def test_criterion_6_flow_suite():
    t0 = time.perf_counter()
    details = []
    # (a) constant map is stationary
    cfg = hf.FlowConfig(n_r=12, n_theta=24, q=3, dt=5e-3, t_end=0.05,
                        phi_preset="constant", bpsi_preset="zero",
                        keep_fields=True)
    res = hf.run_flow(cfg)
    drift = max(np.max(np.abs(s.phi - res.states[0].phi)) for s in res.states)
    ok = drift < 1e-12
    details.append(f"stationary drift {drift:.1e}")
    # (b) zero-spinor flow vs independent harmonic-map oracle
    from test_heatflow import harmonic_flow_oracle
    cfg_b = hf.FlowConfig(n_r=16, n_theta=32, q=3, dt=2e-3, t_end=0.02,
                          bpsi_preset="zero")
    res_b = hf.run_flow(cfg_b)
    oracle = harmonic_flow_oracle(cfg_b)
    diff_b = max(abs(s.monitors[k] - o[k]) for s, o in zip(res_b.states, oracle)
                 for k in ("energy", "grad_sup", "constraint_sup"))
    ok &= diff_b <= 1e-6
    details.append(f"oracle sup-diff {diff_b:.1e}")
    # (c) constraint halves with dt
    finals = []
    for dt in (4e-3, 2e-3):
        cfg_c = hf.FlowConfig(n_r=16, n_theta=32, q=3, dt=dt, t_end=0.04)
        finals.append(hf.run_flow(cfg_c).states[-1].monitors["constraint_sup"])
    ratio = finals[0] / finals[1]
    ok &= 1.4 <= ratio <= 2.6
    details.append(f"dt-halving ratio {ratio:.2f}")
    # (d) heat step against the Bessel eigenvalue oracle
    j01 = brentq(j0, 2.0, 3.0, xtol=1e-14)
    grid = dg.PolarGrid(64, 16)
    mode = j0(j01 * grid.radii)[None, :, None] * np.ones((1, 1, grid.n_theta))
    dt = 1e-3
    out = hf.heat_substep(grid, mode, None, dt, np.zeros((1, grid.n_theta)))
    factor = np.sum(out * mode) / np.sum(mode * mode)
    expect = 1.0 / (1.0 + dt * j01 ** 2)
    rel = abs(factor - expect) / expect
    ok &= rel <= 1e-6
    details.append(f"Bessel decay rel err {rel:.1e}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300.0
    report(6, "flow suite", ok, "; ".join(details) + f", {elapsed:.0f}s")


# -- 7: determinism ----------------------------------------------------------------------

SOLVE_CFG = """
[grid]
n_r = 16
n_theta = 32

[solve]
method = both
map = warp
rho = round
boundary = mode
cross_tolerance = 1e-1
tolerance_interior = 1e-3
"""

VERIFY_CFG = """
[verify]
checks = green,prop31,kernel
ladder = 24,32
prop31_samples = 25
"""

FLOW_CFG = """
[grid]
n_r = 12
n_theta = 24

[flow]
dt = 4e-3
t_end = 0.02
dump_every = 3
"""


def test_criterion_7_determinism(tmp_path):
    t0 = time.perf_counter()
    ok = True
    details = []
    for command, text in (("solve", SOLVE_CFG), ("verify", VERIFY_CFG),
                          ("flow", FLOW_CFG)):
        cfgfile = tmp_path / f"{command}.ini"
        cfgfile.write_text(text)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{command}_{tag}"
            rc = cli.main([command, str(cfgfile), "--out", str(out)])
            ok &= rc == 0
            outs.append(out)
        same = True
        names = sorted(p.name for p in outs[0].iterdir())
        ok &= names == sorted(p.name for p in outs[1].iterdir())
        for nm in names:
            if nm == "manifest.json":
                m0 = json.loads((outs[0] / nm).read_text())
                m1 = json.loads((outs[1] / nm).read_text())
                m0.pop("wall_time_s"), m1.pop("wall_time_s")
                same &= m0 == m1
            else:
                same &= (outs[0] / nm).read_bytes() == (outs[1] / nm).read_bytes()
        ok &= same
        details.append(f"{command}: {'identical' if same else 'DIFFERS'}")
    elapsed = time.perf_counter() - t0
    report(7, "determinism", ok, "; ".join(details) + f", {elapsed:.0f}s")
