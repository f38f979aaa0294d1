"""Differentially private sketch release.

Adjacency model: two vectors in [-1, 1]^D are adjacent when they differ in
a single coordinate by at most beta, so the l2 sensitivity of a sign-binned
sketch is delta2 = beta (one coordinate feeds exactly one bin and the
Rademacher multiplier has unit magnitude). Mechanisms therefore require
Rademacher multipliers, m = 1, and entries in [-1, 1]; anything else would
silently void the privacy analysis.

Three mechanisms:

* ``dp_oporp``: add i.i.d. Gaussian noise with the *minimal* sigma that
  satisfies (epsilon, delta)-DP, found by bisecting the exact Gaussian
  trade-off equation Phi(d/(2s) - es/d) - e^e * Phi(-d/(2s) - es/d) = delta.
* ``dp_sign_oporp_rr``: release sketch signs through randomized response
  with flip probability 1/(e^eps + 1).
* ``dp_sign_oporp_rr_smooth``: randomized response where a bin whose
  magnitude is L*beta away from zero flips with the smaller probability
  1/(e^(L*eps) + 1), since L adjacent steps are needed to change its sign.

Empty bins (exact zero) have no sign; their output bit is a fair coin drawn
as the final output bit, recorded with flip probability 0.5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .projection import ProjectionKind, check_seed
from .sketch import Sketch, SketchConfig, oporp_sketch


@dataclass(frozen=True)
class PrivacySpec:
    """Privacy budget (epsilon, delta) and the adjacency step size beta."""

    epsilon: float
    delta: float
    beta: float

    def __post_init__(self) -> None:
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @property
    def delta2(self) -> float:
        """l2 sensitivity of the sketch under the adjacency model."""
        return self.beta


@dataclass
class NoisySketch:
    """Gaussian-noised sketch values and the noise scale used."""

    values: np.ndarray
    sigma: float


@dataclass
class SignSketch:
    """Randomized-response sign bits and the per-bit flip probability used."""

    bits: np.ndarray
    flip_probs: np.ndarray


def std_normal_cdf(z):
    """Standard normal CDF, accurate to ~1e-16 over the real line."""
    out = ndtr(z)
    return float(out) if np.isscalar(z) or np.ndim(z) == 0 else out


def _tradeoff_gap(sigma: float, delta2: float, epsilon: float) -> float:
    a = delta2 / (2.0 * sigma) - epsilon * sigma / delta2
    b = -delta2 / (2.0 * sigma) - epsilon * sigma / delta2
    return float(ndtr(a) - math.exp(epsilon) * ndtr(b))


def solve_gaussian_sigma(delta2: float, epsilon: float, delta: float) -> float:
    """Minimal Gaussian noise scale achieving (epsilon, delta)-DP.

    Bisects the exact trade-off equation; its left side decreases strictly
    from 1 (sigma -> 0) to 0 (sigma -> inf), so the root is unique. The
    result is tight: unlike the classical sqrt(2 log(1.25/delta)) recipe it
    is valid for every epsilon > 0 and never larger where both apply.
    """
    if delta2 <= 0.0:
        raise ValueError(f"delta2 must be > 0, got {delta2}")
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"Gaussian mechanism needs delta in (0, 1), got {delta}")
    lo = delta2 / (10.0 * epsilon)
    hi = 10.0 * delta2 * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon
    for _ in range(200):
        if _tradeoff_gap(lo, delta2, epsilon) > delta:
            break
        lo /= 2.0
    for _ in range(200):
        if _tradeoff_gap(hi, delta2, epsilon) < delta:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _tradeoff_gap(mid, delta2, epsilon) > delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def _noise_rng(noise_seed: int | None) -> np.random.Generator:
    if noise_seed is None:
        return np.random.Generator(np.random.Philox())
    return np.random.Generator(np.random.Philox(check_seed(noise_seed)))


def _check_private_input(u: np.ndarray, config: SketchConfig) -> np.ndarray:
    if config.dist.kind is not ProjectionKind.RADEMACHER or config.m != 1:
        raise ValueError(
            "private release requires Rademacher multipliers and m = 1"
        )
    u = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u) > 1.0):
        raise ValueError("private release requires entries in [-1, 1]")
    return u


def dp_oporp(
    u: np.ndarray,
    config: SketchConfig,
    spec: PrivacySpec,
    noise_seed: int | None = None,
) -> NoisySketch:
    """Release an OPORP sketch under (epsilon, delta)-DP via Gaussian noise.

    Requires delta > 0. With ``noise_seed`` the noise stream is
    reproducible; by default it draws fresh entropy.
    """
    u = _check_private_input(u, config)
    if spec.delta == 0.0:
        raise ValueError("the Gaussian mechanism needs delta > 0")
    x = oporp_sketch(u, config)
    sigma = solve_gaussian_sigma(spec.delta2, spec.epsilon, spec.delta)
    noise = _noise_rng(noise_seed).normal(0.0, sigma, size=x.values.shape[0])
    return NoisySketch(x.values + noise, sigma)


def _sign_release(x: Sketch, flip_probs: np.ndarray, rng: np.random.Generator) -> SignSketch:
    """Flip sketch signs per-bit; empty bins become fair coins.

    One uniform per bit drives both branches: it decides the flip for a
    signed bin and doubles as the fair coin for an empty one.
    """
    values = x.values
    draws = rng.random(values.shape[0])
    bits = np.where(values < 0.0, -1, 1).astype(np.int8)
    bits[draws < flip_probs] *= -1
    empty = values == 0.0
    bits[empty] = np.where(draws[empty] < 0.5, 1, -1)
    probs = flip_probs.copy()
    probs[empty] = 0.5
    return SignSketch(bits, probs)


def dp_sign_oporp_rr(
    u: np.ndarray,
    config: SketchConfig,
    epsilon: float,
    noise_seed: int | None = None,
) -> SignSketch:
    """Release sketch signs through epsilon-DP randomized response."""
    u = _check_private_input(u, config)
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    x = oporp_sketch(u, config)
    p = 1.0 / (math.exp(epsilon) + 1.0)
    return _sign_release(x, np.full(x.values.shape[0], p), _noise_rng(noise_seed))


def dp_sign_oporp_rr_smooth(
    u: np.ndarray,
    config: SketchConfig,
    epsilon: float,
    beta: float,
    noise_seed: int | None = None,
) -> SignSketch:
    """Randomized response with per-bit flip probabilities scaled by magnitude.

    A bin at distance L*beta from zero cannot change sign in fewer than L
    adjacent steps, so it may use the larger budget L*epsilon; its flip
    probability 1/(e^(L*eps) + 1) never exceeds the plain RR one.
    """
    u = _check_private_input(u, config)
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if beta <= 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    x = oporp_sketch(u, config)
    levels = np.ceil(np.abs(x.values) / beta)
    with np.errstate(over="ignore"):
        probs = 1.0 / (np.exp(levels * epsilon) + 1.0)
    return _sign_release(x, probs, _noise_rng(noise_seed))


def sign_similarity(a, b) -> float:
    """Fraction of agreeing sign bits (raw agreement, no cosine calibration)."""
    bits_a = np.asarray(a.bits if isinstance(a, SignSketch) else a)
    bits_b = np.asarray(b.bits if isinstance(b, SignSketch) else b)
    if bits_a.shape != bits_b.shape:
        raise ValueError(
            f"sign sketches must have equal length, got {bits_a.shape} and {bits_b.shape}"
        )
    return float(np.mean(bits_a == bits_b))
