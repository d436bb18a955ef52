"""Hoeffding-type bound on the deviation between empirical and population loss.

For sample count N, kernel bound K, reconstruction-error bound xi and
slacks s, u, v, t > 0,

    P(|L_hat - L| > t + lam (s + u + v))
        <= 2 exp(-2 N t^2 / xi^2)
         + 2 exp(-2 floor(N/2) s^2 / K^2)
         + 2 exp(-2 floor(N/2) u^2 / K^2)
         + 2 exp(-2 N v^2 / K^2)

The first term controls the reconstruction average, the next two the
within-set U-statistics of the MMD term and the last the cross term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernel import KernelSpec, profile
from .trainer import reconstruct


@dataclass(frozen=True)
class BoundInputs:
    N: int
    K: float
    xi: float
    lam: float
    s: float
    u: float
    v: float
    t: float

    def __post_init__(self):
        for name in ("K", "xi", "lam", "s", "u", "v", "t"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be positive and finite, got {val}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")


class BoundResult(NamedTuple):
    probability: float  # clamped to [0, 1]
    raw: float  # unclamped sum of the four terms
    terms: tuple  # (recon, prior U-stat, encoded U-stat, cross)
    threshold: float  # deviation t + lam (s + u + v) the probability refers to


def theorem2_bound(inp: BoundInputs) -> BoundResult:
    N, half = inp.N, inp.N // 2
    K2 = inp.K**2
    terms = (
        2.0 * math.exp(-2.0 * N * inp.t**2 / inp.xi**2),
        2.0 * math.exp(-2.0 * half * inp.s**2 / K2),
        2.0 * math.exp(-2.0 * half * inp.u**2 / K2),
        2.0 * math.exp(-2.0 * N * inp.v**2 / K2),
    )
    raw = math.fsum(terms)
    return BoundResult(min(1.0, raw), raw, terms, inp.t + inp.lam * (inp.s + inp.u + inp.v))


def estimate_xi(enc, dec, train, holdout):
    """Largest and mean squared reconstruction error over ``train`` and ``holdout`` together.

    This only bounds the error on observed points, not on the whole data
    support the bound assumes.
    """
    train = np.asarray(train, dtype=float)
    holdout = np.asarray(holdout, dtype=float)
    if len(train) == 0 or len(holdout) == 0:
        raise ValueError("train and holdout sets must be nonempty")
    rec = reconstruct(enc, dec, np.concatenate([train, holdout]))
    return rec.max, rec.mean


def effective_K(spec: KernelSpec) -> float:
    """Kernel value on the diagonal, or ``inf`` when the kernel is unbounded.

    Gaussian and IMQ kernels give 1. Smoothed Coulomb kernels with h > 2
    peak at ``epsilon^-(h-2) / ((h-2) S_h)``. Coulomb kernels with
    ``epsilon = 0``, or with h <= 2 (which are unbounded below), return inf.
    """
    if spec.family in ("gaussian", "imq"):
        return 1.0
    if spec.epsilon == 0 or spec.h <= 2:
        return math.inf
    return float(profile(spec, 0.0))
