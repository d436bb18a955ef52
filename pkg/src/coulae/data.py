"""Synthetic datasets and CSV persistence for sample sets."""
from __future__ import annotations

from pathlib import Path

import numpy as np

GRID_SPACING = 2.0
GRID_NOISE = 0.05
GRID_CENTERS = np.array([(x, y) for x in (-4.0, -2.0, 0.0, 2.0, 4.0)
                         for y in (-4.0, -2.0, 0.0, 2.0, 4.0)])


class DataFormatError(ValueError):
    pass


def grid_dataset(n: int, seed: int, return_labels: bool = False):
    """Mixture of 25 isotropic Gaussians (std 0.05) on the lattice {-4,-2,0,2,4}^2."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, len(GRID_CENTERS), size=n)
    X = GRID_CENTERS[labels] + GRID_NOISE * rng.standard_normal((n, 2))
    return (X, labels) if return_labels else X


def gaussian_prior_sample(n: int, h: int, seed: int) -> np.ndarray:
    """n draws from N(0, I_h) as an (n, h) array."""
    if n < 1 or h < 1:
        raise ValueError(f"n and h must be positive, got n={n}, h={h}")
    return np.random.default_rng(seed).standard_normal((n, h))


def write_csv(path, X) -> None:
    """One sample per row, 17 significant digits so reading back is bit-exact."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    with open(path, "w") as fh:
        for row in X:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")


def read_csv(path, dim: int | None = None) -> np.ndarray:
    """Read a sample CSV written by :func:`write_csv`.

    An empty file yields an empty ``(0, dim)`` array when ``dim`` is given
    and is an error otherwise.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(x) for x in line.split(",")]
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric entry in {line!r}") from None
            width = dim if dim is not None else (len(rows[0]) if rows else len(row))
            if len(row) != width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        if dim is None:
            raise DataFormatError(f"{path}: empty file and no dimension declared")
        return np.empty((0, dim))
    return np.array(rows)


def write_table(path, header, rows) -> None:
    """Generic numeric CSV with a header line (histories, landscapes, trajectories)."""
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")
