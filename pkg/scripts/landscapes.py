"""Energy landscapes of free negative charges against positives at -4, 0, 4.

Writes CSV + SVG per kernel and prints the local-minima count of each
one-charge scan and the global-minimum cells of the two-charge Coulomb scan.

    python scripts/landscapes.py --out-dir runs/landscapes
"""
import argparse
from pathlib import Path

import numpy as np

from coulae.data import write_table
from coulae.kernel import KernelSpec
from coulae.mmd import ChargeSystem, count_local_minima, landscape_scan
from coulae.svg import heatmap, line_plot


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="runs/landscapes")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fixed = ChargeSystem.from_points([-4.0, 0.0, 4.0])
    grid = np.round(np.arange(-600, 601) * 0.01, 12)
    kernels = {
        "coulomb": KernelSpec("coulomb", h=1, epsilon=0.0),
        "gaussian": KernelSpec("gaussian", h=1, sigma=1.0),
        "imq": KernelSpec("imq", h=1, c=2.0),
    }
    for name, spec in kernels.items():
        E = landscape_scan(spec, fixed, 1, grid)
        write_table(out / f"{name}_1.csv", ["z", "energy"], zip(grid, E))
        line_plot(out / f"{name}_1.svg", grid, E, f"{name}: one free charge")
        print(f"{name:9s} one free charge: {count_local_minima(E)} local minima, "
              f"global at z={grid[np.nanargmin(E)]:g}")

    # eps > 0: the unsmoothed h=1 two-charge landscape has a flat bottom
    coarse = grid[::5]
    for name, spec in (("coulomb", KernelSpec("coulomb", h=1, epsilon=1e-3)),
                       ("gaussian", kernels["gaussian"]), ("imq", kernels["imq"])):
        E2 = landscape_scan(spec, fixed, 2, coarse)
        ii, jj = np.meshgrid(coarse, coarse, indexing="ij")
        write_table(out / f"{name}_2.csv", ["z1", "z2", "energy"], zip(ii.ravel(), jj.ravel(), E2.ravel()))
        heatmap(out / f"{name}_2.svg", coarse, E2, f"{name}: two free charges")
        cells = np.argwhere(E2 == E2.min())
        print(f"{name:9s} two free charges: global minimum cells "
              + ", ".join(f"({coarse[i]:g}, {coarse[j]:g})" for i, j in cells))


if __name__ == "__main__":
    main()
