"""Unbiased MMD estimator, its gradient, and signed charge systems.

Sample sets are plain ``(n, d)`` float arrays. A 1-D array is read as n
scalar samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import (
    KernelSpec,
    SingularityError,
    check_samples,
    grad_factor,
    kernel_matrix,
    profile,
    sq_dists,
)


def _pair(spec, P, Q):
    P = check_samples(spec, P, "P")
    Q = check_samples(spec, Q, "Q")
    if P.shape[1] != Q.shape[1]:
        raise ValueError(f"dimension mismatch: P has dim {P.shape[1]}, Q has dim {Q.shape[1]}")
    if len(P) < 2 or len(Q) < 2:
        raise ValueError(f"unbiased MMD needs at least 2 samples per set, got {len(P)} and {len(Q)}")
    return P, Q


def mmd_unbiased(spec: KernelSpec, P, Q) -> float:
    """Unbiased estimate of MMD^2 between the distributions behind P and Q.

    The within-set sums skip the diagonal (U-statistic), the cross sum is
    the full V-statistic with weight ``-2 / (n_p n_q)``. Sample sizes may
    differ.
    """
    P, Q = _pair(spec, P, Q)
    n, m = len(P), len(Q)
    kpp = kernel_matrix(spec, P, P, exclude_diagonal=True).sum()
    kqq = kernel_matrix(spec, Q, Q, exclude_diagonal=True).sum()
    kpq = kernel_matrix(spec, P, Q).sum()
    return float(kpp / (n * (n - 1)) - 2.0 * kpq / (n * m) + kqq / (m * (m - 1)))


def mmd_grad_q(spec: KernelSpec, P, Q) -> np.ndarray:
    """Gradient of :func:`mmd_unbiased` with respect to every point of Q.

    Returns an array shaped like Q.
    """
    P, Q = _pair(spec, P, Q)
    if spec.family == "coulomb" and spec.epsilon == 0:
        # the h=1 profile is finite at zero but has no gradient there
        if (sq_dists(P, Q) == 0).any():
            raise SingularityError("coincident cross pair with unsmoothed Coulomb kernel")
        d2 = sq_dists(Q, Q)
        np.fill_diagonal(d2, 1.0)
        if (d2 == 0).any():
            raise SingularityError("coincident points in Q with unsmoothed Coulomb kernel")
    return _grad_free(spec, P[None], Q[None])[0]


def _grad_free(spec: KernelSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Batched gradient w.r.t. Q for stacks ``P: (s, n, d)``, ``Q: (s, m, d)``."""
    n, m = P.shape[1], Q.shape[1]
    dqq = Q[:, :, None, :] - Q[:, None, :, :]
    gqq = grad_factor(spec, np.einsum("sijk,sijk->sij", dqq, dqq))
    diag = np.arange(m)
    gqq[:, diag, diag] = 0.0
    dqp = Q[:, :, None, :] - P[:, None, :, :]
    gqp = grad_factor(spec, np.einsum("sijk,sijk->sij", dqp, dqp))
    self_term = np.einsum("sij,sijk->sik", gqq, dqq) * (2.0 / (m * (m - 1)))
    cross_term = np.einsum("sij,sijk->sik", gqp, dqp) * (2.0 / (n * m))
    return self_term - cross_term


def _mmd_batch(spec: KernelSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Batched :func:`mmd_unbiased` without validation; returns shape ``(s,)``."""
    n, m = P.shape[1], Q.shape[1]
    kpp = profile(spec, sq_dists(P, P))
    kqq = profile(spec, sq_dists(Q, Q))
    diag_p, diag_q = np.arange(n), np.arange(m)
    kpp[:, diag_p, diag_p] = 0.0
    kqq[:, diag_q, diag_q] = 0.0
    kpq = profile(spec, sq_dists(P, Q))
    return (
        kpp.sum(axis=(1, 2)) / (n * (n - 1))
        - 2.0 * kpq.sum(axis=(1, 2)) / (n * m)
        + kqq.sum(axis=(1, 2)) / (m * (m - 1))
    )


@dataclass
class ChargeSystem:
    """Signed point charges; positive for prior samples, negative for encoded ones."""

    positions: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[:, None]
        self.charges = np.asarray(self.charges, dtype=float).reshape(-1)
        if len(self.positions) != len(self.charges):
            raise ValueError(f"{len(self.positions)} positions but {len(self.charges)} charges")

    @classmethod
    def from_points(cls, positive=(), negative=()):
        pos = np.asarray(positive, dtype=float).reshape(len(positive), -1) if len(positive) else None
        neg = np.asarray(negative, dtype=float).reshape(len(negative), -1) if len(negative) else None
        parts = [x for x in (pos, neg) if x is not None]
        charges = np.concatenate([np.ones(len(positive)), -np.ones(len(negative))])
        return cls(np.concatenate(parts), charges)


def charge_energy(spec: KernelSpec, system: ChargeSystem) -> float:
    """Interaction energy ``sum_{i<j} q_i q_j k(z_i, z_j)``; self-energies are dropped."""
    if len(system.charges) < 2:
        return 0.0
    K = kernel_matrix(spec, system.positions, system.positions, exclude_diagonal=True)
    qq = np.outer(system.charges, system.charges)
    return float(np.triu(qq * K, k=1).sum())


def landscape_scan(spec: KernelSpec, fixed: ChargeSystem, n_free: int, grid) -> np.ndarray:
    """Energy of ``fixed`` plus ``n_free`` unit negative charges placed on a grid.

    Returns a 1-D array over ``grid`` for one free charge and a 2-D array over
    ``grid x grid`` for two. The free charges live in R^1. Cells where a free
    charge sits on a singular point are NaN.
    """
    if n_free not in (1, 2):
        raise ValueError(f"n_free must be 1 or 2, got {n_free}")
    if (fixed.charges <= 0).any():
        raise ValueError("fixed system must contain only positive charges")
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if len(grid) < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing with at least 2 points")
    if fixed.positions.shape[1] != 1:
        raise ValueError("landscape scans are one-dimensional")
    if spec.family == "coulomb" and spec.h != 1:
        raise ValueError("coulomb landscape scans need h=1")

    base = charge_energy(spec, fixed)
    d2 = (grid[:, None] - fixed.positions[None, :, 0]) ** 2
    with np.errstate(invalid="ignore"):
        K = profile(spec, d2)
    # one free unit negative charge against the fixed set
    single = -(K * fixed.charges[None, :]).sum(axis=1)
    if spec.singular:
        single[(d2 == 0).any(axis=1)] = np.nan
    if n_free == 1:
        return base + single
    pair = profile(spec, (grid[:, None] - grid[None, :]) ** 2)
    if spec.singular:
        np.fill_diagonal(pair, np.nan)
    # single[i] + single[j] commutes exactly, so the scan is bitwise swap-symmetric
    return base + (single[:, None] + single[None, :]) + pair


def count_local_minima(values) -> int:
    """Number of strict interior local minima, counting each flat-bottomed plateau once.

    NaN cells are never minima and never neighbour one.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) < 3:
        raise ValueError("need at least 3 values")
    # collapse runs of equal values so a plateau acts as one cell
    keep = np.ones(len(values), dtype=bool)
    keep[1:] = values[1:] != values[:-1]
    v = values[keep]
    if len(v) < 3:
        return 0
    mid = v[1:-1]
    return int(np.count_nonzero((mid < v[:-2]) & (mid < v[2:])))
