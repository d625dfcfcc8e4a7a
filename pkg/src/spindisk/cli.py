"""Batch entry point: spindisk solve|verify|flow <config> [--out DIR] [--seed N].

Configs are INI files (flat key = value lines under [sections]); every run
writes its artifacts plus a manifest.json echoing the parsed config, so a
run can be reproduced exactly.  Exit codes are a stable contract:

    0  success          3  tolerance failure      5  blow-up halt (flow)
    2  config error     4  solver failure         6  tube-exit abort (flow)
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import disk_geometry as dg
from . import dirac_solver as ds
from . import heatflow as hf
from . import identity_lab as il

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_SOLVER = 4
EXIT_BLOWUP = 5
EXIT_CONSTRAINT = 6


class ConfigError(ValueError):
    pass


def parse_config(path) -> dict:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    return {s: dict(cp.items(s)) for s in cp.sections()}


def _get(cfg, section, key, default=None, cast=str):
    try:
        raw = cfg.get(section, {}).get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return default
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc


def _grid_from(cfg) -> dg.PolarGrid:
    n_r = _get(cfg, "grid", "n_r", 64, int)
    n_theta = _get(cfg, "grid", "n_theta", 128, int)
    try:
        return dg.PolarGrid(n_r, n_theta)
    except dg.GridError as exc:
        raise ConfigError(str(exc)) from exc


def _write_manifest(outdir: Path, command: str, cfg: dict, grid, tolerances,
                    summary, artifacts, seed, wall_time):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "grid": None if grid is None else {"n_r": grid.n_r, "n_theta": grid.n_theta},
        "tolerances": tolerances,
        "summary": summary,
        "artifacts": sorted(artifacts),
        "seed": seed,
        "wall_time_s": wall_time,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2, default=float) + "\n")


def _report_dict(rep: ds.ResidualReport) -> dict:
    return {"interior_sup": rep.interior_sup, "boundary_sup": rep.boundary_sup,
            "l2_interior": rep.l2_interior}


# -- solve ----------------------------------------------------------------------

def cmd_solve(cfg: dict, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    grid = _grid_from(cfg)
    metric_name = _get(cfg, "solve", "metric", "flat")
    rho_name = _get(cfg, "solve", "rho", "flat")
    map_name = _get(cfg, "solve", "map", "id")
    boundary = _get(cfg, "solve", "boundary", "mode")
    sign = _get(cfg, "solve", "sign", 1, int)
    variant = _get(cfg, "solve", "variant", "chiral")
    method = _get(cfg, "solve", "method", "both")
    tol_int = _get(cfg, "solve", "tolerance_interior", 1e-4, float)
    tol_bdry = _get(cfg, "solve", "tolerance_boundary", 1e-7, float)
    tol_cross = _get(cfg, "solve", "cross_tolerance", 1e-3, float)
    if method not in ("closed_form", "discrete", "both"):
        raise ConfigError(f"unknown method {method!r}")
    if sign not in (1, -1):
        raise ConfigError("sign must be 1 or -1")
    if variant not in ("chiral", "mit"):
        raise ConfigError(f"unknown variant {variant!r}")
    try:
        metric = dg.metric_preset(grid, metric_name)
        map_data = ds.map_preset(grid, map_name, rho_name)
        psi0 = ds.boundary_spinor_preset(grid, boundary, seed)
    except (ValueError, dg.GridError) as exc:
        raise ConfigError(str(exc)) from exc

    artifacts = []
    residuals = {}
    slots = ("f_plus", "f_minus", "ft_plus", "ft_minus")
    solutions = {}

    def dump(tag, psi):
        for slot in slots:
            name = f"psi_{tag}_{slot}.csv"
            dg.save_field(outdir / name, grid, getattr(psi, slot), metric_name)
            artifacts.extend([name, name + ".json"])

    try:
        if method in ("closed_form", "both"):
            psi_cf = ds.solve_chiral_bvp_closed_form(grid, metric, map_data,
                                                     psi0, sign, variant)
            rep = ds.residual_report(grid, metric, psi_cf, map_data=map_data,
                                     bdata=[psi0], sign=sign, variant=variant)
            residuals["closed_form"] = _report_dict(rep)
            solutions["closed_form"] = psi_cf
            dump("closed_form", psi_cf)
        if method in ("discrete", "both"):
            fields, rep, info = ds.solve_bvp_discrete(
                grid, metric, None, None, [psi0], sign=sign, variant=variant,
                map_data=map_data, q=1)
            residuals["discrete"] = _report_dict(rep)
            residuals["discrete"]["cg_iterations"] = info["iterations"]
            solutions["discrete"] = fields[0]
            dump("discrete", fields[0])
    except ds.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    ok = True
    if "discrete" in residuals:
        ok &= residuals["discrete"]["interior_sup"] <= tol_int
        ok &= residuals["discrete"]["boundary_sup"] <= tol_bdry
    if "closed_form" in residuals:
        ok &= residuals["closed_form"]["boundary_sup"] <= tol_bdry
    if method == "both":
        cross = max(np.max(np.abs(getattr(solutions["closed_form"], s)
                                  - getattr(solutions["discrete"], s)))
                    for s in slots)
        residuals["cross_sup_diff"] = float(cross)
        ok &= cross <= tol_cross

    name = "residuals.json"
    (outdir / name).write_text(json.dumps(residuals, sort_keys=True, indent=2) + "\n")
    artifacts.append(name)
    _write_manifest(outdir, "solve", cfg, grid,
                    {"tolerance_interior": tol_int, "tolerance_boundary": tol_bdry,
                     "cross_tolerance": tol_cross},
                    residuals, artifacts, seed, time.perf_counter() - t0)
    if not ok:
        print(f"tolerance failure: {json.dumps(residuals, sort_keys=True)}",
              file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# -- verify ----------------------------------------------------------------------

KNOWN_CHECKS = ("green", "twistor", "weitzenbock", "prop31", "reilly", "kernel")
RATE_THRESHOLDS = {"green": 1.7, "twistor": 1.7, "weitzenbock": 1.7, "reilly": 0.7}
DEFECT_FLOOR = 1e-11  # defects at rounding level pass regardless of slope


def _measured_rate(hs, defects):
    if max(defects) < DEFECT_FLOOR:
        return float("inf")
    return float(np.log(defects[0] / defects[-1])
                 / np.log(hs[0] / hs[-1]))


def cmd_verify(cfg: dict, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    checks = [c.strip() for c in
              _get(cfg, "verify", "checks", ",".join(KNOWN_CHECKS)).split(",")]
    for c in checks:
        if c not in KNOWN_CHECKS:
            raise ConfigError(f"unknown check name {c!r}")
    ladder = [int(v) for v in _get(cfg, "verify", "ladder", "16,32,64").split(",")]
    metric_name = _get(cfg, "verify", "metric", "round")
    sign = _get(cfg, "verify", "sign", 1, int)
    n_prop = _get(cfg, "verify", "prop31_samples", 1000, int)
    levels = [(n, 2 * n) for n in ladder]

    artifacts = []
    summary = {}
    records = []
    passed = True

    def run_identity(check):
        rows = []
        for n_r, n_theta in levels:
            grid = dg.PolarGrid(n_r, n_theta)
            metric = dg.metric_preset(grid, metric_name)
            psi = il.random_spinor(grid, seed)
            if check == "green":
                d = il.check_green(grid, metric, psi, il.random_spinor(grid, seed + 1))
            elif check == "twistor":
                d = il.check_twistor(grid, metric, psi)
            elif check == "weitzenbock":
                d = il.check_weitzenbock(grid, metric, psi)
            else:
                norm_r = np.abs(metric.gauss_curvature) / 2.0
                f = il.solve_weight_f(grid, metric, norm_r)
                d = il.check_weighted_reilly(grid, metric, psi, f, sign)
            rows.append((n_r, n_theta, grid.h_r, d.defect))
            records.append(d)
        return rows

    for check in checks:
        if check in RATE_THRESHOLDS:
            rows = run_identity(check)
            hs = [r[2] for r in rows]
            defects = [r[3] for r in rows]
            rate = _measured_rate(hs, defects)
            summary[check] = {"rate": rate, "defects": defects,
                              "threshold": RATE_THRESHOLDS[check]}
            passed &= rate >= RATE_THRESHOLDS[check]
            name = f"verify_{check}.csv"
            with open(outdir / name, "w") as fh:
                fh.write("n_r,n_theta,h,defect\n")
                for r in rows:
                    fh.write("%d,%d,%.17g,%.17g\n" % r)
            artifacts.append(name)
        elif check == "prop31":
            grid = dg.PolarGrid(levels[0][0], levels[0][1])
            metric = dg.metric_preset(grid, metric_name)
            violations = 0
            worst = 0.0
            for k in range(n_prop):
                d = il.check_prop31(grid, metric,
                                    il.random_spinor(grid, seed + k), sign)
                worst = max(worst, d.defect)
                if d.defect > 1e-8 * max(1.0, d.rhs):
                    violations += 1
            summary["prop31"] = {"samples": n_prop, "violations": violations,
                                 "worst_slack": worst}
            passed &= violations == 0
            name = "verify_prop31.csv"
            with open(outdir / name, "w") as fh:
                fh.write("samples,violations,worst_slack\n")
                fh.write("%d,%d,%.17g\n" % (n_prop, violations, worst))
            artifacts.append(name)
        elif check == "kernel":
            recs = il.kernel_triviality_scan(levels, metric_name="flat")
            sigmas = [r["sigma_min"] for r in recs]
            spread = max(sigmas) / min(sigmas)
            summary["kernel"] = {"sigma_min": sigmas, "spread": spread}
            passed &= spread <= 2.0
            name = "verify_kernel.csv"
            with open(outdir / name, "w") as fh:
                fh.write("n_r,n_theta,sigma_min\n")
                for r in recs:
                    fh.write("%d,%d,%.17g\n" % (r["n_r"], r["n_theta"],
                                                r["sigma_min"]))
            artifacts.append(name)

    name = "verify_records.jsonl"
    with open(outdir / name, "w") as fh:
        for d in records:
            fh.write(json.dumps({
                "name": d.name, "lhs": d.lhs, "rhs": d.rhs, "defect": d.defect,
                "grid": list(d.grid_size), "sup_defect": d.sup_defect},
                sort_keys=True, default=float) + "\n")
    artifacts.append(name)
    _write_manifest(outdir, "verify", cfg, None,
                    {"rates": RATE_THRESHOLDS, "kernel_spread": 2.0},
                    summary, artifacts, seed, time.perf_counter() - t0)
    return EXIT_OK if passed else EXIT_TOLERANCE


# -- flow ------------------------------------------------------------------------

def cmd_flow(cfg: dict, outdir: Path, seed: int) -> int:
    t0 = time.perf_counter()
    grid_nr = _get(cfg, "grid", "n_r", 24, int)
    grid_nt = _get(cfg, "grid", "n_theta", 48, int)
    fc = hf.FlowConfig(
        n_r=grid_nr, n_theta=grid_nt,
        q=_get(cfg, "flow", "q", 3, int),
        dt=_get(cfg, "flow", "dt", 2e-3, float),
        t_end=_get(cfg, "flow", "t_end", 0.1, float),
        phi_preset=_get(cfg, "flow", "phi", "bump"),
        phi_amplitude=_get(cfg, "flow", "phi_amplitude", 0.9, float),
        bpsi_preset=_get(cfg, "flow", "bpsi", "projected"),
        bpsi_scale=_get(cfg, "flow", "bpsi_scale", 0.5, float),
        sign=_get(cfg, "flow", "sign", 1, int),
        variant=_get(cfg, "flow", "variant", "chiral"),
        blowup_threshold=_get(cfg, "flow", "blowup_threshold", 1e3, float),
        tube_radius=_get(cfg, "flow", "tube_radius", 0.5, float),
        seed=seed,
    )
    dump_every = _get(cfg, "flow", "dump_every", 0, int)
    if fc.dt <= 0 or fc.t_end <= 0:
        raise ConfigError("dt and t_end must be positive")
    fc.keep_fields = dump_every > 0
    try:
        result = hf.run_flow(fc)
    except ds.SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    artifacts = []
    grid = dg.PolarGrid(fc.n_r, fc.n_theta)
    name = "flow_monitors.jsonl"
    with open(outdir / name, "w") as fh:
        for s in result.states:
            rec = {"t": s.t}
            rec.update(s.monitors)
            fh.write(json.dumps(rec, sort_keys=True, default=float) + "\n")
    artifacts.append(name)
    if dump_every > 0:
        for k, s in enumerate(result.states):
            if k % dump_every or s.phi is None:
                continue
            for a in range(fc.q):
                fname = f"phi_step{k:05d}_comp{a}.csv"
                dg.save_field(outdir / fname, grid, s.phi[a].astype(complex),
                              "flat")
                artifacts.extend([fname, fname + ".json"])
    summary = {"status": result.status, "steps": len(result.states),
               "final_monitors": result.states[-1].monitors}
    _write_manifest(outdir, "flow", cfg, grid,
                    {"blowup_threshold": fc.blowup_threshold,
                     "tube_radius": fc.tube_radius},
                    summary, artifacts, seed, time.perf_counter() - t0)
    if result.status == "blowup":
        print("flow halted: blow-up criterion tripped", file=sys.stderr)
        return EXIT_BLOWUP
    if result.status == "constraint_abort":
        print("flow aborted: map left the tubular neighborhood", file=sys.stderr)
        return EXIT_CONSTRAINT
    return EXIT_OK


# -- entry point -------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spindisk",
        description="Dirac boundary-value problems and heat flow on the disk")
    parser.add_argument("command", choices=["solve", "verify", "flow"])
    parser.add_argument("config", help="INI config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed (default 0)")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
        seed = args.seed if args.seed is not None else \
            _get(cfg, "run", "seed", 0, int)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        handler = {"solve": cmd_solve, "verify": cmd_verify, "flow": cmd_flow}
        return handler[args.command](cfg, outdir, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
