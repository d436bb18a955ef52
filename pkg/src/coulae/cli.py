"""Command-line entry point: ``coulae <command> ...``.

Every command that writes files also writes ``<output>.manifest.json``
recording the fully resolved argument list; ``coulae rerun MANIFEST``
replays it.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bound import BoundInputs, theorem2_bound
from .data import GRID_CENTERS, DataFormatError, gaussian_prior_sample, grid_dataset, read_csv, \
    write_csv, write_table
from .evaluation import DEFAULT_BANDWIDTHS, kde_loglik, mode_coverage
from .gradcheck import loss_gradcheck
from .kernel import KernelSpec
from .mmd import ChargeSystem, count_local_minima, landscape_scan
from .net import load_checkpoint, save_checkpoint
from .particles import match_permutation, particle_descent, seeded_problem
from .svg import heatmap, line_plot
from .trainer import TrainConfig, TrainingDiverged, generate, train

EXIT_USAGE = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str):
    return [int(x) for x in text.split(",") if x.strip()]


def _kernel_args(p, default_family="coulomb", default_eps=1e-3):
    p.add_argument("--kernel", choices=["coulomb", "gaussian", "imq"], default=default_family)
    p.add_argument("--epsilon", type=float, default=default_eps)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--c", type=float, default=None, help="IMQ offset (default 2h)")


def _kernel_from(args) -> KernelSpec:
    try:
        return KernelSpec(args.kernel, h=args.h, epsilon=args.epsilon, sigma=args.sigma, c=args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def grid_points(lo: float, hi: float, step: float) -> np.ndarray:
    """Grid ``lo, lo+step, ..., hi`` built from integer multiples, rounded so 0 lands exactly."""
    if step <= 0 or hi <= lo:
        raise UsageError("need grid-max > grid-min and grid-step > 0")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12) + 0.0


def _write_manifest(out_path, argv, extra=None):
    data = {"version": __version__, "argv": list(argv)}
    if extra:
        data.update(extra)
    Path(str(out_path) + ".manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _resolved_argv(args, parser_map) -> list[str]:
    """Rebuild a complete argv for the chosen subcommand from parsed values."""
    sub = parser_map[args.command]
    argv = [args.command]
    for action in sub._actions:
        if not action.option_strings or action.dest == "help":
            continue
        val = getattr(args, action.dest)
        if val is None:
            continue
        flag = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if val:
                argv.append(flag)
            continue
        # flag=value keeps negative numbers from being read as options
        argv.append(f"{flag}={val}")
    return argv


def cmd_landscape(args):
    if args.kernel == "coulomb" and args.h != 1:
        raise UsageError("coulomb landscapes are one-dimensional: use --h 1")
    spec = _kernel_from(args)
    grid = grid_points(args.grid_min, args.grid_max, args.grid_step)
    fixed = ChargeSystem.from_points(positive=_floats(args.positives))
    E = landscape_scan(spec, fixed, args.free, grid)
    out = Path(args.out)
    if args.free == 1:
        write_table(out, ["z", "energy"], zip(grid, E))
        line_plot(out.with_suffix(".svg"), grid, E, f"{spec.family} landscape, one free charge")
        print(f"local_minima={count_local_minima(E)}")
        print(f"global_min_at={grid[np.nanargmin(E)]:.6g}")
    else:
        ii, jj = np.meshgrid(np.arange(len(grid)), np.arange(len(grid)), indexing="ij")
        write_table(out, ["z1", "z2", "energy"],
                    zip(grid[ii.ravel()], grid[jj.ravel()], E.ravel()))
        heatmap(out.with_suffix(".svg"), grid, E, f"{spec.family} landscape, two free charges")
        n_min = int(np.count_nonzero(E == np.nanmin(E)))
        print(f"global_min_cells={n_min}")
    return 0


def cmd_descent(args):
    if args.n <= args.h:
        raise UsageError(f"need n > h (got n={args.n}, h={args.h})")
    spec = _kernel_from(args)
    targets, init = seeded_problem(args.n, args.h, args.seed)
    res = particle_descent(spec, targets, init, lr=args.lr, iters=args.iters,
                           record_every=args.record_every, keep_trajectory=True,
                           max_step=args.max_step)
    if args.out:
        header = ["iter", "energy"] + [f"q{i}_{k}" for i in range(args.n) for k in range(args.h)]
        write_table(args.out, header,
                    ([it, e, *pos.ravel()] for it, e, pos in zip(res.iters, res.energies, res.trajectory)))
    perm = match_permutation(res.positions, targets, args.tol)
    print(f"final_energy={res.energies[-1]:.17g}")
    if perm is None:
        print("match=none")
        return 1
    print("match=" + ",".join(map(str, perm)))
    return 0


def cmd_make_data(args):
    if args.kind == "grid":
        X = grid_dataset(args.n, args.seed)
    else:
        X = gaussian_prior_sample(args.n, args.h, args.seed)
    write_csv(args.out, X)
    return 0


def cmd_train(args):
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.iters is not None or args.seed is not None or args.width_factor is not None:
        changes = {k: v for k, v in (("iters", args.iters), ("seed", args.seed),
                                     ("width_factor", args.width_factor)) if v is not None}
        config = dataclasses.replace(config, **changes)
    X = read_csv(args.data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.to_text())
    try:
        res = train(config, X)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    save_checkpoint(res.enc, out / "encoder.ckpt")
    save_checkpoint(res.dec, out / "decoder.ckpt")
    write_table(out / "history.csv", ["iter", "total", "recon", "mmd"], res.history)
    last = res.history[-1]
    print(f"final total={last[1]:.6g} recon={last[2]:.6g} mmd={last[3]:.6g}")
    return 0


def cmd_generate(args):
    dec = load_checkpoint(args.ckpt)
    write_csv(args.out, generate(dec, args.n, args.seed))
    return 0


def cmd_eval(args):
    G = read_csv(args.gen)
    T = read_csv(args.test)
    bws = _floats(args.bandwidths) if args.bandwidths else DEFAULT_BANDWIDTHS
    res = kde_loglik(G, T, bws)
    rows = list(zip(res.bandwidths, res.mean_logliks))
    summary = f"best_bandwidth={res.best_bandwidth:.6g} mean_loglik={res.mean_loglik:.6g}"
    if G.shape[1] == 2:
        cov = mode_coverage(G, GRID_CENTERS)
        summary += f" modes_covered={cov.covered}/{len(GRID_CENTERS)}"
    if args.out:
        write_table(args.out, ["bandwidth", "mean_loglik"], rows)
        with open(args.out, "a") as fh:
            fh.write(f"# {summary}\n")
    for b, ll in rows:
        print(f"{b:.6g},{ll:.6g}")
    print(summary)
    return 0


def cmd_bound(args):
    try:
        inp = BoundInputs(args.N, args.K, args.xi, args.lam, args.s, args.u, args.v, args.t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = theorem2_bound(inp)
    header = ["threshold", "probability", "raw", "term_recon", "term_prior", "term_encoded", "term_cross"]
    row = [res.threshold, res.probability, res.raw, *res.terms]
    print(",".join(header))
    print(",".join(f"{x:.4g}" for x in row))
    if args.out:
        write_table(args.out, header, [row])
    return 0


def cmd_gradcheck(args):
    widths = _ints(args.widths)
    err = loss_gradcheck(widths, batch=args.batch, seed=args.seed)
    print(f"max_rel_error={err:.3e}")
    if args.out:
        write_table(args.out, ["max_rel_error"], [[err]])
    return 0 if err < 1e-4 else 1


def cmd_rerun(args):
    data = json.loads(Path(args.manifest).read_text())
    return main(data["argv"])


def build_parser():
    parser = argparse.ArgumentParser(prog="coulae", description="Coulomb autoencoder experiments")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    pm = {}

    p = pm["landscape"] = subs.add_parser("landscape", help="energy landscape of free negative charges")
    _kernel_args(p, default_eps=0.0)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("--free", type=int, choices=[1, 2], default=1)
    p.add_argument("--positives", default="-4,0,4")
    p.add_argument("--grid-min", type=float, default=-6.0)
    p.add_argument("--grid-max", type=float, default=6.0)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_landscape)

    p = pm["descent"] = subs.add_parser("descent", help="particle descent onto seeded targets")
    _kernel_args(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--h", type=int, default=2)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=20_000)
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--max-step", type=float, default=None)
    p.add_argument("--tol", type=float, default=5e-2)
    p.add_argument("--out")
    p.set_defaults(func=cmd_descent)

    p = pm["make-data"] = subs.add_parser("make-data", help="write a synthetic sample set")
    p.add_argument("--kind", choices=["grid", "prior"], default="grid")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--h", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_data)

    p = pm["train"] = subs.add_parser("train", help="train a Coulomb autoencoder")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--width-factor", type=float)
    p.set_defaults(func=cmd_train)

    p = pm["generate"] = subs.add_parser("generate", help="sample from a trained decoder")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = pm["eval"] = subs.add_parser("eval", help="KDE test log-likelihood and mode coverage")
    p.add_argument("--gen", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--bandwidths")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = pm["bound"] = subs.add_parser("bound", help="evaluate the generalization bound")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    for name in ("s", "u", "v", "t"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = pm["gradcheck"] = subs.add_parser("gradcheck", help="finite-difference check of the loss gradient")
    p.add_argument("--widths", default="2,8,8,2")
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gradcheck)

    p = pm["rerun"] = subs.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser, pm


def _manifest_target(args):
    if args.command == "train":
        return Path(args.out_dir) / "run"
    return getattr(args, "out", None)


def main(argv=None) -> int:
    parser, pm = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (FileNotFoundError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    target = _manifest_target(args)
    if args.command != "rerun" and target:
        _write_manifest(target, _resolved_argv(args, pm), {"exit_code": code})
    return code


if __name__ == "__main__":
    sys.exit(main())
