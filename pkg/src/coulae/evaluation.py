"""KDE test log-likelihood and mode coverage for generated samples."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .data import GRID_CENTERS

DEFAULT_BANDWIDTHS = np.logspace(-3, 1.5, 10)
CHUNK = 512


class KdeResult(NamedTuple):
    best_bandwidth: float
    mean_loglik: float
    bandwidths: np.ndarray
    mean_logliks: np.ndarray


def kde_mean_logliks(generated, test, bandwidths) -> np.ndarray:
    """Mean Gaussian-KDE log-density of ``test`` under ``generated``, one value per bandwidth."""
    G = np.asarray(generated, dtype=float)
    T = np.asarray(test, dtype=float)
    if G.ndim == 1:
        G, T = G[:, None], T.reshape(-1, 1)
    if len(G) == 0 or len(T) == 0:
        raise ValueError("generated and test sets must be nonempty")
    if G.shape[1] != T.shape[1]:
        raise ValueError(f"dimension mismatch: {G.shape[1]} vs {T.shape[1]}")
    bw = np.asarray(bandwidths, dtype=float).reshape(-1)
    if len(bw) == 0 or (bw <= 0).any():
        raise ValueError("bandwidths must be a nonempty sequence of positive values")
    m, d = G.shape
    g2 = (G**2).sum(1)
    totals = np.zeros(len(bw))
    # fixed chunk order keeps the float sums bit-stable
    for start in range(0, len(T), CHUNK):
        Tc = T[start:start + CHUNK]
        d2 = np.maximum((Tc**2).sum(1)[:, None] + g2[None, :] - 2.0 * Tc @ G.T, 0.0)
        for k, b in enumerate(bw):
            lp = logsumexp(-d2 / (2.0 * b * b), axis=1)
            totals[k] += lp.sum()
    norm = np.log(m) + 0.5 * d * np.log(2.0 * np.pi * bw**2)
    return totals / len(T) - norm


def kde_loglik(generated, test, bandwidths=DEFAULT_BANDWIDTHS) -> KdeResult:
    """Pick the bandwidth with the highest mean test log-likelihood (chosen on the test set itself)."""
    bw = np.asarray(bandwidths, dtype=float).reshape(-1)
    means = kde_mean_logliks(generated, test, bw)
    k = int(np.argmax(means))
    return KdeResult(float(bw[k]), float(means[k]), bw, means)


class Coverage(NamedTuple):
    covered: int
    counts: np.ndarray
    mean_dist: np.ndarray


def mode_coverage(samples, centers=GRID_CENTERS, radius: float = 0.15, min_count: int = 10) -> Coverage:
    """Assign samples to the nearest center; a mode is covered if it has at least
    ``min_count`` samples whose mean distance to the center is at most ``radius``.
    """
    S = np.asarray(samples, dtype=float)
    C = np.asarray(centers, dtype=float)
    if len(S) == 0 or len(C) == 0:
        raise ValueError("samples and centers must be nonempty")
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = np.sqrt(((S[:, None, :] - C[None, :, :]) ** 2).sum(-1))
    nearest = d.argmin(1)
    dist = d[np.arange(len(S)), nearest]
    counts = np.bincount(nearest, minlength=len(C))
    sums = np.bincount(nearest, weights=dist, minlength=len(C))
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_dist = np.where(counts > 0, sums / np.maximum(counts, 1), np.inf)
    covered = int(((counts >= min_count) & (mean_dist <= radius)).sum())
    return Coverage(covered, counts, mean_dist)
