"""Gradient descent of free particles on the MMD landscape.

The free set Q is pulled towards a fixed target set by descending
``mmd_unbiased(targets, Q)``. With a Coulomb kernel every run should end on
a permutation of the targets; with Gaussian or IMQ kernels it need not.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .kernel import KernelSpec, check_samples
from .mmd import _grad_free, _mmd_batch

DEFAULT_LR = 0.05
DEFAULT_ITERS = 20_000
EXHAUSTIVE_MAX_N = 8


@dataclass
class DescentResult:
    positions: np.ndarray  # final free points, shape (n, h) or (s, n, h)
    iters: np.ndarray  # iteration numbers at which energies were recorded
    energies: np.ndarray  # shape (k,) or (k, s)
    trajectory: np.ndarray | None = None  # positions at each record, (k, ...) when kept


def _check_descent(spec: KernelSpec, targets: np.ndarray, init: np.ndarray, stacklevel: int = 3):
    n, h = targets.shape[-2:]
    if init.shape != targets.shape:
        raise ValueError(f"init shape {init.shape} does not match targets shape {targets.shape}")
    if n <= h:
        raise ValueError(f"need more particles than dimensions (N > h), got N={n}, h={h}")
    d2 = np.einsum("...ijk,...ijk->...ij", targets[..., :, None, :] - targets[..., None, :, :],
                   targets[..., :, None, :] - targets[..., None, :, :])
    d2[..., np.arange(n), np.arange(n)] = 1.0
    if (d2 == 0).any():
        raise ValueError("targets must be pairwise distinct")
    if spec.family != "coulomb":
        warnings.warn(f"particle descent with a {spec.family} kernel: no permutation guarantee",
                      stacklevel=stacklevel)


def seeded_problem(n: int, h: int, seed: int):
    """Targets and initial free points, both ``n`` standard-normal draws in R^h."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, h)), rng.standard_normal((n, h))


def particle_descent_batch(spec: KernelSpec, targets, init, lr: float = DEFAULT_LR,
                           iters: int = DEFAULT_ITERS, record_every: int = 100,
                           keep_trajectory: bool = False,
                           max_step: float | None = None, _stacklevel: int = 3) -> DescentResult:
    """Run independent descents side by side.

    ``targets`` and ``init`` are ``(s, n, h)`` stacks; each slice evolves
    exactly as a separate call to :func:`particle_descent` would.
    """
    T = np.asarray(targets, dtype=float)
    Q = np.array(init, dtype=float)
    if T.ndim != 3:
        raise ValueError(f"expected (s, n, h) targets, got shape {T.shape}")
    if spec.family == "coulomb" and T.shape[2] != spec.h:
        raise ValueError(f"coulomb kernel with h={spec.h} needs points in R^{spec.h}")
    _check_descent(spec, T, Q, _stacklevel)
    if lr <= 0 or iters < 1 or record_every < 1:
        raise ValueError("lr, iters and record_every must be positive")

    rec_iters, energies, traj = [0], [_mmd_batch(spec, T, Q)], [Q.copy()] if keep_trajectory else None
    for it in range(1, iters + 1):
        step = lr * _grad_free(spec, T, Q)
        if max_step is not None:
            norm = np.sqrt((step**2).sum(-1, keepdims=True))
            step = step * np.minimum(1.0, max_step / np.maximum(norm, 1e-300))
        Q = Q - step
        if it % record_every == 0 or it == iters:
            rec_iters.append(it)
            energies.append(_mmd_batch(spec, T, Q))
            if keep_trajectory:
                traj.append(Q.copy())
    return DescentResult(Q, np.array(rec_iters), np.array(energies),
                         np.array(traj) if keep_trajectory else None)


def particle_descent(spec: KernelSpec, targets, init, lr: float = DEFAULT_LR,
                     iters: int = DEFAULT_ITERS, record_every: int = 100,
                     keep_trajectory: bool = False,
                     max_step: float | None = None) -> DescentResult:
    """Synchronous gradient descent of ``init`` on ``mmd_unbiased(targets, .)``.

    Energies (the MMD value) are recorded at iteration 0, every
    ``record_every`` steps, and at the last step.

    ``max_step`` optionally caps each particle's displacement per step.
    Plain descent (the default) is unstable inside the smoothed Coulomb
    wells once ``lr`` exceeds roughly ``2 pi eps^2 N^2`` (h=2), which is far
    below the default ``lr``; the cap keeps captured particles in their wells.
    """
    T = check_samples(spec, targets, "targets")
    Q = check_samples(spec, init, "init")
    res = particle_descent_batch(spec, T[None], Q[None], lr, iters, record_every, keep_trajectory,
                                 max_step, _stacklevel=4)
    return DescentResult(res.positions[0], res.iters, res.energies[:, 0],
                         res.trajectory[:, 0] if keep_trajectory else None)


def match_permutation(Q, targets, tol: float):
    """Find ``perm`` with ``|Q[i] - targets[perm[i]]| <= tol`` for all i, or None.

    Small sets (n <= 8) are searched exhaustively with backtracking. Larger
    ones solve an assignment problem whose cost is 1 for pairs beyond
    ``tol``; a zero-cost assignment exists exactly when a matching does.
    """
    Q = np.asarray(Q, dtype=float)
    T = np.asarray(targets, dtype=float)
    if Q.ndim == 1:
        Q, T = Q[:, None], T.reshape(-1, 1)
    if Q.shape != T.shape:
        raise ValueError(f"size mismatch: {Q.shape} vs {T.shape}")
    dist = np.sqrt(((Q[:, None, :] - T[None, :, :]) ** 2).sum(-1))
    ok = dist <= tol
    n = len(Q)
    if n <= EXHAUSTIVE_MAX_N:
        return _search(ok)
    rows, cols = linear_sum_assignment((~ok).astype(float) + 1e-9 * dist)
    if ok[rows, cols].all():
        return tuple(int(c) for c in cols)
    return None


def _search(ok: np.ndarray):
    n = len(ok)
    perm: list[int] = []
    used = [False] * n

    def extend(i):
        if i == n:
            return True
        for j in range(n):
            if ok[i, j] and not used[j]:
                used[j] = True
                perm.append(j)
                if extend(i + 1):
                    return True
                perm.pop()
                used[j] = False
        return False

    return tuple(perm) if extend(0) else None
