"""Coulomb autoencoder training: reconstruction + lambda * MMD(prior, encoded)."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .data import gaussian_prior_sample
from .kernel import KernelSpec
from .mmd import mmd_grad_q, mmd_unbiased
from .net import AdamState, MlpParams, adam_step, mlp_apply, mlp_backward, mlp_forward, mlp_init

HISTORY_EVERY = 100


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    h: int = 2
    lam: float = 100.0
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("coulomb", h=2, epsilon=1e-3))
    enc_widths: tuple = (2, 128, 128, 2)
    dec_widths: tuple = (2, 128, 128, 2)
    lr: float = 1e-3
    iters: int = 20_000
    batch: int = 128
    seed: int = 0
    width_factor: float = 1.0

    def __post_init__(self):
        self.enc_widths = tuple(int(w) for w in self.enc_widths)
        self.dec_widths = tuple(int(w) for w in self.dec_widths)
        if self.enc_widths[-1] != self.h or self.dec_widths[0] != self.h:
            raise ValueError(f"encoder must end and decoder must start with h={self.h}")
        if self.kernel.family == "coulomb" and self.kernel.h != self.h:
            raise ValueError(f"coulomb kernel h={self.kernel.h} != latent dim h={self.h}")
        if self.batch < 2 or self.batch <= self.h:
            raise ValueError(f"batch must be >= 2 and > h, got {self.batch}")
        if self.lam < 0 or self.lr <= 0 or self.iters < 1 or self.width_factor <= 0:
            raise ValueError("lam must be >= 0; lr, iters and width_factor positive")

    def scaled_widths(self):
        """Encoder/decoder widths with hidden layers scaled by ``width_factor``."""
        def scale(ws):
            return (ws[0],) + tuple(max(1, int(round(w * self.width_factor))) for w in ws[1:-1]) + (ws[-1],)
        return scale(self.enc_widths), scale(self.dec_widths)

    # key=value config files use the field names; kernel parameters are flattened
    def to_text(self) -> str:
        k = self.kernel
        items = {
            "h": self.h, "lambda": self.lam, "kernel": k.family, "epsilon": k.epsilon,
            "sigma": k.sigma, "c": k.c, "enc_widths": ",".join(map(str, self.enc_widths)),
            "dec_widths": ",".join(map(str, self.dec_widths)), "lr": self.lr, "iters": self.iters,
            "batch": self.batch, "seed": self.seed, "width_factor": self.width_factor,
        }
        return "".join(f"{key}={val!r}\n" if isinstance(val, float) else f"{key}={val}\n"
                       for key, val in items.items())

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            raw[key] = val
        known = {"h", "lambda", "kernel", "epsilon", "sigma", "c", "enc_widths", "dec_widths",
                 "lr", "iters", "batch", "seed", "width_factor"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        h = int(raw.get("h", 2))
        kernel = KernelSpec(
            raw.get("kernel", "coulomb"), h=h, epsilon=float(raw.get("epsilon", 1e-3)),
            sigma=float(raw.get("sigma", 1.0)), c=float(raw["c"]) if "c" in raw else None,
        )
        kw = dict(h=h, kernel=kernel)
        if "lambda" in raw:
            kw["lam"] = float(raw["lambda"])
        for key in ("enc_widths", "dec_widths"):
            if key in raw:
                kw[key] = tuple(int(w) for w in raw[key].split(","))
        for key, typ in (("lr", float), ("iters", int), ("batch", int), ("seed", int),
                         ("width_factor", float)):
            if key in raw:
                kw[key] = typ(raw[key])
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_text(Path(path).read_text())


class LossTerms(NamedTuple):
    total: float
    recon: float
    mmd: float


def _loss_and_grads(enc, dec, X, Z, kernel, lam):
    Zf, enc_cache = mlp_forward(enc, X)
    Y, dec_cache = mlp_forward(dec, Zf)
    n = len(X)
    resid = Y - X
    recon = float((resid**2).sum() / n)
    mmd = mmd_unbiased(kernel, Z, Zf)
    g_dec, g_zf = mlp_backward(dec, dec_cache, 2.0 * resid / n)
    if lam:
        g_zf = g_zf + lam * mmd_grad_q(kernel, Z, Zf)
    g_enc, _ = mlp_backward(enc, enc_cache, g_zf)
    return LossTerms(recon + lam * mmd, recon, mmd), g_enc, g_dec


def _check_batch(enc, X, Z):
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if len(X) != len(Z):
        raise ValueError(f"data batch has {len(X)} rows but prior batch has {len(Z)}")
    if len(X) < 2:
        raise ValueError("need a batch of at least 2")
    if Z.shape[1] != enc.widths[-1]:
        raise ValueError(f"prior dim {Z.shape[1]} != latent dim {enc.widths[-1]}")
    return X, Z


def loss_eval(enc: MlpParams, dec: MlpParams, X, Z, kernel: KernelSpec, lam: float) -> LossTerms:
    """Mean squared reconstruction error plus ``lam`` times ``mmd_unbiased(Z, enc(X))``."""
    X, Z = _check_batch(enc, X, Z)
    Zf = mlp_apply(enc, X)
    Y = mlp_apply(dec, Zf)
    recon = float(((Y - X) ** 2).sum() / len(X))
    mmd = mmd_unbiased(kernel, Z, Zf)
    return LossTerms(recon + lam * mmd, recon, mmd)


def loss_grads(enc: MlpParams, dec: MlpParams, X, Z, kernel: KernelSpec, lam: float):
    """Loss terms and parameter gradients ``(terms, enc_grads, dec_grads)``.

    The prior batch Z is a constant; the MMD gradient enters through the
    encoded points only.
    """
    X, Z = _check_batch(enc, X, Z)
    return _loss_and_grads(enc, dec, X, Z, kernel, lam)


@dataclass
class TrainResult:
    enc: MlpParams
    dec: MlpParams
    history: np.ndarray  # rows of (iter, total, recon, mmd)
    config: TrainConfig


def train(config: TrainConfig, dataset, history_every: int = HISTORY_EVERY) -> TrainResult:
    """Adam on both networks with fresh minibatches (with replacement) and prior draws each step.

    History rows are the loss terms of the step's own minibatch, recorded
    at iteration 1 and then every ``history_every`` iterations.
    """
    X_all = np.asarray(dataset, dtype=float)
    enc_w, dec_w = config.scaled_widths()
    if X_all.ndim != 2 or X_all.shape[1] != enc_w[0]:
        raise ValueError(f"dataset must be (n, {enc_w[0]}), got {X_all.shape}")
    if len(X_all) < config.batch:
        raise ValueError(f"dataset has {len(X_all)} samples, fewer than batch {config.batch}")
    enc_seq, dec_seq, loop_seq = np.random.SeedSequence(config.seed).spawn(3)
    enc = mlp_init(enc_w, enc_seq)
    dec = mlp_init(dec_w, dec_seq)
    enc_state, dec_state = AdamState.zeros_like(enc), AdamState.zeros_like(dec)
    rng = np.random.default_rng(loop_seq)
    history = []
    for it in range(1, config.iters + 1):
        X = X_all[rng.integers(0, len(X_all), size=config.batch)]
        Z = rng.standard_normal((config.batch, config.h))
        # let overflow surface as a nonfinite loss rather than a floating-point trap
        with np.errstate(over="ignore", invalid="ignore"):
            terms, g_enc, g_dec = _loss_and_grads(enc, dec, X, Z, config.kernel, config.lam)
        if not np.isfinite(terms.total):
            raise TrainingDiverged(f"nonfinite loss at iteration {it}: total={terms.total}, "
                                   f"recon={terms.recon}, mmd={terms.mmd}")
        if it == 1 or it % history_every == 0:
            history.append((it, *terms))
        enc, enc_state = adam_step(enc, g_enc, enc_state, config.lr)
        dec, dec_state = adam_step(dec, g_dec, dec_state, config.lr)
    return TrainResult(enc, dec, np.array(history), dataclasses.replace(config))


def generate(dec: MlpParams, n: int, seed: int) -> np.ndarray:
    """Decode ``n`` seeded standard-normal latent draws."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return mlp_apply(dec, gaussian_prior_sample(n, dec.widths[0], seed))


class Reconstruction(NamedTuple):
    recon: np.ndarray
    errors: np.ndarray
    max: float
    mean: float


def reconstruct(enc: MlpParams, dec: MlpParams, X) -> Reconstruction:
    """Reconstructions, per-sample squared errors and their max/mean."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != enc.widths[0] or dec.widths[-1] != X.shape[1]:
        raise ValueError(f"data shape {X.shape} does not fit networks {enc.widths} / {dec.widths}")
    if enc.widths[-1] != dec.widths[0]:
        raise ValueError("encoder output and decoder input widths differ")
    Y = mlp_apply(dec, mlp_apply(enc, X))
    err = ((X - Y) ** 2).sum(axis=1)
    return Reconstruction(Y, err, float(err.max()), float(err.mean()))
