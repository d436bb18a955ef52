"""Desk-scale grid experiment: train, generate 10^4 samples, score them.

    python scripts/grid_experiment.py --seed 0 --out-dir runs/grid_s0
    python scripts/grid_experiment.py --lam 1 --iters 100000
"""
import argparse
import dataclasses
import json
import time

from coulae.evaluation import mode_coverage
from coulae.experiments import run_grid
from coulae.trainer import TrainConfig


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iters", type=int, default=20_000)
    ap.add_argument("--lam", type=float, default=100.0)
    ap.add_argument("--width-factor", type=float, default=1.0)
    ap.add_argument("--out-dir", default=None)
    args = ap.parse_args()

    t0 = time.perf_counter()
    config = dataclasses.replace(TrainConfig(), lam=args.lam)
    run = run_grid(seed=args.seed, width_factor=args.width_factor, iters=args.iters, config=config)
    summary = run.summary()
    summary["seconds"] = round(time.perf_counter() - t0, 1)
    cov = mode_coverage(run.generated)
    summary["per_mode_mean_dist_median"] = float(sorted(cov.mean_dist)[12])
    print(json.dumps(summary, indent=2))
    if args.out_dir:
        run.save(args.out_dir)


if __name__ == "__main__":
    main()
