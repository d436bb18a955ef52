"""Kernel functions for MMD regularisers.

Three families are supported:

* ``coulomb``: fundamental solution of the Poisson equation in R^h, i.e.
  ``-1/2 |r|`` for h=1, ``-(1/2pi) ln r`` for h=2 and
  ``r^-(h-2) / ((h-2) S_h)`` for h>2, with ``S_h`` the surface area of the
  unit sphere in R^h. The source strength is fixed to 1; any loss weight is
  applied by the caller.
* ``gaussian``: ``exp(-r^2 / (2 sigma^2))``.
* ``imq``: inverse multiquadric ``c / (c + r^2)``.

The Coulomb kernel is smoothed by replacing ``r^2`` with ``r^2 + epsilon^2``
so that gradients stay finite at coincident points.

All pairwise routines work on ``(n, d)`` float arrays and are written in
terms of a radial profile of the squared distance, so the same code serves
scalar evaluation, kernel matrices and batched particle systems.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("coulomb", "gaussian", "imq")


class SingularityError(ValueError):
    """Raised when an unsmoothed Coulomb kernel is evaluated at coincident points."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its parameters.

    ``h`` is the latent dimension. For the Coulomb family it fixes the
    exponent and the points must live in R^h. ``c`` defaults to ``2 h``
    for the IMQ family.
    """

    family: str = "coulomb"
    h: int = 2
    epsilon: float = 1e-3
    sigma: float = 1.0
    c: float | None = field(default=None)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if int(self.h) != self.h or self.h < 1:
            raise ValueError(f"h must be a positive integer, got {self.h}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.c is None:
            object.__setattr__(self, "c", 2.0 * self.h)
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")

    @property
    def singular(self) -> bool:
        """True if the kernel is infinite at zero distance (unsmoothed Coulomb, h >= 2)."""
        return self.family == "coulomb" and self.epsilon == 0 and self.h >= 2


def unit_ball_surface(h: int) -> float:
    """Surface area ``2 pi^(h/2) / Gamma(h/2)`` of the unit sphere bounding the h-ball."""
    if int(h) != h or h < 1:
        raise ValueError(f"h must be a positive integer, got {h}")
    return 2.0 * math.pi ** (h / 2) / math.gamma(h / 2)


def profile(spec: KernelSpec, d2):
    """Kernel value as a function of the squared distance ``d2`` (array-valued)."""
    d2 = np.asarray(d2, dtype=float)
    if spec.family == "gaussian":
        return np.exp(-d2 / (2.0 * spec.sigma**2))
    if spec.family == "imq":
        return spec.c / (spec.c + d2)
    r2 = d2 + spec.epsilon**2
    h = spec.h
    if h == 1:
        return -0.5 * np.sqrt(r2)
    with np.errstate(divide="ignore"):
        if h == 2:
            return -np.log(r2) / (4.0 * math.pi)
        beta = h - 2
        return r2 ** (-beta / 2) / (beta * unit_ball_surface(h))


def grad_factor(spec: KernelSpec, d2):
    """Scalar ``g(d2)`` such that the gradient in the first argument is ``g * (z - z')``."""
    d2 = np.asarray(d2, dtype=float)
    if spec.family == "gaussian":
        return -np.exp(-d2 / (2.0 * spec.sigma**2)) / spec.sigma**2
    if spec.family == "imq":
        return -2.0 * spec.c / (spec.c + d2) ** 2
    r2 = d2 + spec.epsilon**2
    with np.errstate(divide="ignore"):
        if spec.h == 1:
            return -0.5 / np.sqrt(r2)
        return -(r2 ** (-spec.h / 2)) / unit_ball_surface(spec.h)


def _as_point(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1:
        raise ValueError(f"expected a single point, got array of shape {z.shape}")
    return z


def _check_pair(spec: KernelSpec, z, zp):
    z, zp = _as_point(z), _as_point(zp)
    if z.shape != zp.shape:
        raise ValueError(f"dimension mismatch: {z.shape[0]} vs {zp.shape[0]}")
    if spec.family == "coulomb" and z.shape[0] != spec.h:
        raise ValueError(f"coulomb kernel with h={spec.h} needs points in R^{spec.h}, got dim {z.shape[0]}")
    return z, zp


def kernel_eval(spec: KernelSpec, z, zp) -> float:
    z, zp = _check_pair(spec, z, zp)
    diff = z - zp
    d2 = float(diff @ diff)
    if spec.singular and d2 == 0.0:
        raise SingularityError("unsmoothed Coulomb kernel evaluated at coincident points")
    return float(profile(spec, d2))


def kernel_grad(spec: KernelSpec, z, zp) -> np.ndarray:
    """Gradient of ``kernel_eval(spec, z, zp)`` with respect to ``z``."""
    z, zp = _check_pair(spec, z, zp)
    diff = z - zp
    d2 = float(diff @ diff)
    # h=1 is finite at coincidence but not differentiable there
    if spec.family == "coulomb" and spec.epsilon == 0 and d2 == 0.0:
        raise SingularityError("unsmoothed Coulomb kernel is not differentiable at coincident points")
    return grad_factor(spec, d2) * diff


def sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise squared distances via explicit differences (exact symmetry, no cancellation)."""
    diff = A[..., :, None, :] - B[..., None, :, :]
    return np.einsum("...ijk,...ijk->...ij", diff, diff)


def check_samples(spec: KernelSpec, X, name: str = "samples") -> np.ndarray:
    """Coerce to a float ``(n, d)`` array; 1-D input is read as n scalar samples."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be a 2-D (n, d) array, got shape {X.shape}")
    if spec.family == "coulomb" and X.shape[1] != spec.h:
        raise ValueError(f"{name}: coulomb kernel with h={spec.h} needs dim {spec.h}, got {X.shape[1]}")
    return X


def kernel_matrix(spec: KernelSpec, A, B, exclude_diagonal: bool = False) -> np.ndarray:
    """Matrix ``K[i, j] = k(a_i, b_j)``.

    With ``exclude_diagonal`` the diagonal is set to zero and never checked
    for singularity; this is what the U-statistic self-sums need.
    """
    A = check_samples(spec, A, "A")
    B = check_samples(spec, B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    d2 = sq_dists(A, B)
    mask = None
    if exclude_diagonal:
        if A.shape[0] != B.shape[0]:
            raise ValueError("exclude_diagonal needs square input")
        mask = ~np.eye(A.shape[0], dtype=bool)
    if spec.singular:
        zero = d2 == 0.0
        if mask is not None:
            zero &= mask
        if zero.any():
            i, j = np.argwhere(zero)[0]
            raise SingularityError(f"coincident points at pair ({i}, {j}) with unsmoothed Coulomb kernel")
    K = profile(spec, d2)
    if mask is not None:
        K = np.where(mask, K, 0.0)
    return K


def harmonicity_check(spec: KernelSpec, z, zp, step: float = 1e-3) -> float:
    """Central finite-difference Laplacian of ``k(., zp)`` at ``z``.

    Only meaningful for the unsmoothed Coulomb kernel, which is harmonic off
    the diagonal; the result should be close to zero.
    """
    if spec.family != "coulomb" or spec.epsilon != 0:
        raise ValueError("harmonicity_check needs an unsmoothed coulomb kernel (epsilon=0)")
    z, zp = _check_pair(spec, z, zp)
    if np.array_equal(z, zp):
        raise SingularityError("harmonicity_check at the singularity")
    k0 = kernel_eval(spec, z, zp)
    total = 0.0
    for i in range(z.shape[0]):
        e = np.zeros_like(z)
        e[i] = step
        total += (kernel_eval(spec, z + e, zp) - 2.0 * k0 + kernel_eval(spec, z - e, zp)) / step**2
    return total
