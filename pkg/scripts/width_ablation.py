"""Capacity ablation on the grid dataset: width factors x seeds.

    python scripts/width_ablation.py --out-dir runs/ablation
"""
import argparse
import json
from pathlib import Path

import numpy as np

from coulae.experiments import run_grid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="runs/ablation")
    ap.add_argument("--factors", default="0.25,0.5,1")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--iters", type=int, default=20_000)
    args = ap.parse_args()

    rows = []
    for wf in (float(x) for x in args.factors.split(",")):
        for seed in (int(x) for x in args.seeds.split(",")):
            run = run_grid(seed=seed, width_factor=wf, iters=args.iters)
            run.save(Path(args.out_dir) / f"w{wf:g}_s{seed}")
            rows.append(run.summary())
            print(json.dumps(rows[-1]), flush=True)

    for wf in sorted({r["width_factor"] for r in rows}):
        sel = [r for r in rows if r["width_factor"] == wf]
        print(f"x{wf:g}: median loglik {np.median([r['kde_loglik'] for r in sel]):.3f}  "
              f"median xi {np.median([r['xi_holdout'] for r in sel]):.3f}  "
              f"modes {[r['modes_covered'] for r in sel]}")


if __name__ == "__main__":
    main()
