#!/usr/bin/env python3
"""Convergence study: identity defects and solver cross-validation vs h.

Prints one table per experiment; pass --csv DIR to also dump them.
"""

import argparse
from pathlib import Path

import numpy as np

from spindisk import disk_geometry as dg
from spindisk import dirac_solver as ds
from spindisk import identity_lab as il


def identity_table(ladder, metric_name="round", seed=3):
    rows = []
    for n in ladder:
        grid = dg.PolarGrid(n, 2 * n)
        met = dg.metric_preset(grid, metric_name)
        psi = il.random_spinor(grid, seed)
        f = il.solve_weight_f(grid, met, np.abs(met.gauss_curvature) / 2.0)
        rows.append((
            n, grid.h_r,
            il.check_green(grid, met, psi, il.random_spinor(grid, seed + 1)).defect,
            il.check_twistor(grid, met, psi).sup_defect,
            il.check_weitzenbock(grid, met, psi).defect,
            il.check_weighted_reilly(grid, met, psi, f).defect,
        ))
    return rows


def crossval_table(ladder, met_name="round", map_name="warp", rho_name="round"):
    rows = []
    for n in ladder:
        grid = dg.PolarGrid(n, 2 * n)
        met = dg.metric_preset(grid, met_name)
        mp = ds.map_preset(grid, map_name, rho_name)
        b = ds.boundary_spinor_preset(grid, "mode")
        cf = ds.solve_chiral_bvp_closed_form(grid, met, mp, b, +1)
        fields, rep, info = ds.solve_bvp_discrete(grid, met, None, None, [b],
                                                  sign=+1, map_data=mp, q=1)
        diff = max(np.max(np.abs(a - c)) for a, c in
                   zip(fields[0].components(), cf.components()))
        rows.append((n, grid.h_r, diff, rep.interior_sup, info["iterations"]))
    return rows


def show(title, header, rows):
    print(f"\n== {title}")
    print("  ".join(f"{h:>12}" for h in header))
    for r in rows:
        print("  ".join(f"{v:12.4g}" if isinstance(v, float) else f"{v:>12}"
                        for v in r))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ladder", default="16,32,64")
    ap.add_argument("--csv", default=None, help="directory for CSV output")
    args = ap.parse_args()
    ladder = [int(v) for v in args.ladder.split(",")]

    ident = identity_table(ladder)
    show("identity defects (round metric)",
         ("n_r", "h", "green", "twistor", "weitzenb.", "reilly"), ident)
    xval = crossval_table(ladder)
    show("closed form vs discrete (round/warp/round)",
         ("n_r", "h", "sup diff", "interior res", "cg iters"), xval)

    if args.csv:
        outdir = Path(args.csv)
        outdir.mkdir(parents=True, exist_ok=True)
        np.savetxt(outdir / "identity_defects.csv", np.array(ident),
                   delimiter=",", fmt="%.17g",
                   header="n_r,h,green,twistor,weitzenbock,reilly", comments="")
        np.savetxt(outdir / "crossval.csv", np.array(xval),
                   delimiter=",", fmt="%.17g",
                   header="n_r,h,sup_diff,interior_residual,cg_iters", comments="")
        print(f"\nwrote CSVs to {outdir}")


if __name__ == "__main__":
    main()
