"""Finite-difference checks of the hand-written gradients."""
from __future__ import annotations

import numpy as np

from .data import gaussian_prior_sample, grid_dataset
from .kernel import KernelSpec
from .net import MlpParams, mlp_init
from .trainer import loss_eval, loss_grads


def central_diff(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return g


def rel_error(analytic, numeric) -> float:
    """``max |a - n| / max |n|``, the error relative to the gradient's scale."""
    a = np.asarray(analytic, dtype=float)
    n = np.asarray(numeric, dtype=float)
    scale = max(np.abs(n).max(), np.abs(a).max(), 1e-300)
    return float(np.abs(a - n).max() / scale)


def loss_gradcheck(widths=(2, 8, 8, 2), batch: int = 8, seed: int = 0, lam: float = 100.0,
                   kernel: KernelSpec | None = None, step: float = 1e-5) -> float:
    """Worst per-tensor relative error of the full autoencoder loss gradient.

    Encoder and decoder both use ``widths`` (so input and latent dims are
    equal); data come from the grid dataset when the input is 2-D, otherwise
    from a standard normal.
    """
    widths = tuple(int(w) for w in widths)
    h = widths[-1]
    kernel = kernel or KernelSpec("coulomb", h=h, epsilon=1e-3)
    rng = np.random.default_rng(seed)
    enc = mlp_init(widths, rng.integers(2**31))
    dec = mlp_init(widths[::-1], rng.integers(2**31))
    if widths[0] == 2:
        X = grid_dataset(batch, int(rng.integers(2**31)))
    else:
        X = rng.standard_normal((batch, widths[0]))
    Z = gaussian_prior_sample(batch, h, int(rng.integers(2**31)))
    _, g_enc, g_dec = loss_grads(enc, dec, X, Z, kernel, lam)

    worst = 0.0
    for which, params, grads in (("enc", enc, g_enc), ("dec", dec, g_dec)):
        arrays = params.arrays()
        for k, (arr, garr) in enumerate(zip(arrays, grads.arrays())):
            def f(a, k=k):
                trial = MlpParams.from_arrays(arrays[:k] + [a] + arrays[k + 1:])
                e, d = (trial, dec) if which == "enc" else (enc, trial)
                return loss_eval(e, d, X, Z, kernel, lam).total
            worst = max(worst, rel_error(garr, central_diff(f, arr, step)))
    return worst
