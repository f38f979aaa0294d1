"""Similarity estimators computed from pairs of sketches.

All estimators require the two sketches to share config and flavor (same
randomness); repetition-aware estimators compute one value per repetition
block and average over the m repetitions.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .sketch import Sketch, ZeroNormError, check_compatible


class Estimator(enum.Enum):
    """Names for the estimator choices exposed by the CLI and harnesses."""

    INNER = "inner"
    DISTANCE = "distance"
    COSINE = "cosine"
    NORMALIZED_INNER = "normalized_inner"
    MLE_INNER = "mle_inner"
    VSRP_INNER = "vsrp_inner"
    VSRP_COSINE = "vsrp_cosine"


class EstimationError(RuntimeError):
    """Numerical estimation failed (diagnostic; not expected on real data)."""


def inner_product_hat(x: Sketch, y: Sketch) -> float:
    """Unbiased inner-product estimate: per-repetition sum of products, averaged."""
    check_compatible(x, y)
    per_rep = np.einsum("ij,ij->i", x.reps, y.reps)
    return float(per_rep.mean())


def distance_hat(x: Sketch, y: Sketch) -> float:
    """Unbiased squared-distance estimate from the sketch difference."""
    check_compatible(x, y)
    diff = x.reps - y.reps
    return float(np.einsum("ij,ij->i", diff, diff).mean())


def _rep_cosines(x: Sketch, y: Sketch) -> np.ndarray:
    X, Y = x.reps, y.reps
    dots = np.einsum("ij,ij->i", X, Y)
    sxx = np.einsum("ij,ij->i", X, X)
    syy = np.einsum("ij,ij->i", Y, Y)
    denom = np.sqrt(sxx * syy)
    if np.any(denom == 0.0):
        raise ZeroNormError("cosine estimate undefined for a zero-norm repetition")
    return np.clip(dots / denom, -1.0, 1.0)


def cosine_hat(x: Sketch, y: Sketch) -> float:
    """Cosine estimate: per-repetition normalized inner product, averaged.

    Each repetition's value is a true cosine of two k-vectors, so the
    result always lies in [-1, 1] and equals 1 exactly when x is y.
    """
    check_compatible(x, y)
    return float(_rep_cosines(x, y).mean())


def normalized_inner_product(rho_hat: float, norm_u: float, norm_v: float) -> float:
    """Rescale a cosine estimate by the known (stored) data norms."""
    if norm_u < 0.0 or norm_v < 0.0:
        raise ValueError("norms must be nonnegative")
    return float(rho_hat) * float(norm_u) * float(norm_v)


def likelihood_root(sxy: float, sxx: float, syy: float, E: float, F: float) -> float:
    """Root of the sketch-likelihood cubic, restricted to the feasible interval.

    The cubic a^3 - a^2*sxy + a*(E*syy + F*sxx - E*F) - E*F*sxy always has a
    real root in [-sqrt(E*F), +sqrt(E*F)] (its values at the two endpoints
    have opposite signs); among feasible real roots we keep the one closest
    to the norm-rescaled cosine estimate.
    """
    roots = np.roots([1.0, -sxy, E * syy + F * sxx - E * F, -E * F * sxy])
    scale = np.maximum(1.0, np.abs(roots))
    real = roots.real[np.abs(roots.imag) <= 1e-6 * scale]
    bound = math.sqrt(E * F)
    feasible = real[np.abs(real) <= bound * (1.0 + 1e-9)]
    if feasible.size == 0:
        raise EstimationError(
            f"no admissible likelihood root in [-{bound:g}, {bound:g}]"
        )
    if sxx > 0.0 and syy > 0.0:
        rho = min(1.0, max(-1.0, sxy / math.sqrt(sxx * syy)))
    else:
        rho = 0.0
    anchor = rho * bound
    return float(feasible[np.argmin(np.abs(feasible - anchor))])


def mle_inner_product(x: Sketch, y: Sketch, sumsq_u: float, sumsq_v: float) -> float:
    """Likelihood-based inner-product estimate using known squared norms.

    Solves the estimating cubic per repetition from the raw sketch sums and
    the exact margins E = sum u^2, F = sum v^2, then averages over
    repetitions.
    """
    check_compatible(x, y)
    if sumsq_u <= 0.0 or sumsq_v <= 0.0:
        raise ValueError("squared norms must be positive")
    X, Y = x.reps, y.reps
    dots = np.einsum("ij,ij->i", X, Y)
    sxx = np.einsum("ij,ij->i", X, X)
    syy = np.einsum("ij,ij->i", Y, Y)
    roots = [
        likelihood_root(float(dots[t]), float(sxx[t]), float(syy[t]), sumsq_u, sumsq_v)
        for t in range(x.config.m)
    ]
    return float(np.mean(roots))


def _check_vsrp(x: Sketch, y: Sketch) -> None:
    check_compatible(x, y)
    if x.flavor != "vsrp":
        raise ValueError("vsrp estimators need sketches built by vsrp_sketch")


def vsrp_inner_product_hat(x: Sketch, y: Sketch) -> float:
    """Inner-product estimate from sparse-projection samples: mean of products."""
    _check_vsrp(x, y)
    return float(np.dot(x.values, y.values) / x.values.shape[0])


def vsrp_cosine_hat(x: Sketch, y: Sketch) -> float:
    """Cosine estimate pooled across all sparse-projection samples."""
    _check_vsrp(x, y)
    sxy = float(np.dot(x.values, y.values))
    sxx = float(np.dot(x.values, x.values))
    syy = float(np.dot(y.values, y.values))
    denom = math.sqrt(sxx * syy)
    if denom == 0.0:
        raise ZeroNormError("cosine estimate undefined for a zero-norm sketch")
    return float(np.clip(sxy / denom, -1.0, 1.0))
