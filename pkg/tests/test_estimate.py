"""Estimator correctness: exact recovery, unbiasedness, and the cubic root.

The exact-recovery regime (k = D, unit fourth moment, fixed binning) makes
every sketch a signed shuffle, so all estimators must reproduce the true
values up to float rounding; the Monte-Carlo checks run small per-call
loops with 4-sigma bounds at frozen seeds.
"""

import math

import numpy as np
import pytest

from oporp.estimate import (
    EstimationError,
    Estimator,
    cosine_hat,
    distance_hat,
    inner_product_hat,
    likelihood_root,
    mle_inner_product,
    normalized_inner_product,
    vsrp_cosine_hat,
    vsrp_inner_product_hat,
)
from oporp.projection import derive_seed, rademacher
from oporp.sketch import (
    Binning,
    SketchConfig,
    SketchMismatchError,
    ZeroNormError,
    normalize_sketch,
    oporp_sketch,
    vsrp_sketch,
    with_seed,
)


def rademacher_config(D, k, m=1, seed=0, binning=Binning.FIXED):
    return SketchConfig(dim=D, k=k, binning=binning, dist=rademacher(), m=m, seed=seed)


def sketch_pair(u, v, config):
    return oporp_sketch(u, config), oporp_sketch(v, config)


# --- exact recovery -----------------------------------------------------------


def test_exact_recovery_at_k_equals_dim():
    rng = np.random.default_rng(0)
    for seed in range(5):
        u, v = rng.standard_normal(32), rng.standard_normal(32)
        x, y = sketch_pair(u, v, rademacher_config(32, 32, seed=seed))
        a = float(u @ v)
        d = float(np.sum((u - v) ** 2))
        rho = a / (np.linalg.norm(u) * np.linalg.norm(v))
        assert inner_product_hat(x, y) == pytest.approx(a, rel=1e-12)
        assert distance_hat(x, y) == pytest.approx(d, rel=1e-12)
        assert cosine_hat(x, y) == pytest.approx(rho, rel=1e-12)
        assert mle_inner_product(x, y, float(u @ u), float(v @ v)) == pytest.approx(
            a, rel=1e-9
        )


def test_cosine_of_a_vector_with_itself_is_exactly_one():
    rng = np.random.default_rng(1)
    for scale in (1.0, 1e-8, 1e8):
        u = scale * rng.standard_normal(64)
        x = oporp_sketch(u, rademacher_config(64, 8, m=3, seed=7))
        y = oporp_sketch(u, rademacher_config(64, 8, m=3, seed=7))
        # sqrt(sxx * syy) with sxx == syy is exact, so this is 1.0, not 1-eps
        assert cosine_hat(x, y) == 1.0


def test_vsrp_exact_style_identities():
    u = np.random.default_rng(2).standard_normal(48)
    x = vsrp_sketch(u, 48, 64, 2.0, 3)
    y = vsrp_sketch(u, 48, 64, 2.0, 3)
    assert vsrp_cosine_hat(x, y) == 1.0
    assert vsrp_inner_product_hat(x, y) >= 0.0


# --- unbiasedness (seeded Monte Carlo) -----------------------------------------


def _mc_estimates(u, v, D, k, trials, estimator, master=11):
    out = np.empty(trials)
    for t in range(trials):
        config = rademacher_config(D, k, seed=derive_seed(master, t))
        x, y = sketch_pair(u, v, config)
        out[t] = estimator(x, y)
    return out


def test_inner_estimate_unbiased():
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(24), rng.standard_normal(24)
    est = _mc_estimates(u, v, 24, 4, 3000, inner_product_hat)
    se = est.std(ddof=1) / math.sqrt(est.size)
    assert abs(est.mean() - u @ v) < 4 * se


def test_distance_estimate_unbiased():
    rng = np.random.default_rng(4)
    u, v = rng.standard_normal(24), rng.standard_normal(24)
    est = _mc_estimates(u, v, 24, 4, 3000, distance_hat, master=12)
    se = est.std(ddof=1) / math.sqrt(est.size)
    assert abs(est.mean() - np.sum((u - v) ** 2)) < 4 * se


def test_repetitions_reduce_spread():
    rng = np.random.default_rng(5)
    u, v = rng.standard_normal(32), rng.standard_normal(32)
    single, averaged = [], []
    for t in range(800):
        c1 = rademacher_config(32, 4, m=1, seed=derive_seed(13, t))
        c8 = rademacher_config(32, 4, m=8, seed=derive_seed(14, t))
        single.append(inner_product_hat(*sketch_pair(u, v, c1)))
        averaged.append(inner_product_hat(*sketch_pair(u, v, c8)))
    ratio = np.var(single) / np.var(averaged)
    assert 5.0 < ratio < 13.0  # expect about 8


# --- the likelihood cubic -------------------------------------------------------


def test_likelihood_root_exact_regime_factorization():
    """With sxy=a, sxx=E, syy=F the cubic factors (x - a)(x^2 + EF)."""
    rng = np.random.default_rng(6)
    for _ in range(50):
        u, v = rng.standard_normal(16), rng.standard_normal(16)
        E, F, a = float(u @ u), float(v @ v), float(u @ v)
        root = likelihood_root(a, E, F, E, F)
        assert root == pytest.approx(a, rel=1e-10)
        residual = root**3 - root**2 * a + root * (E * F + F * E - E * F) - E * F * a
        assert abs(residual) <= 1e-6 * max(1.0, abs(a) ** 3)


def test_likelihood_root_zero_inner_product():
    # sxy = 0 with matched margins: only real root of x(x^2 + EF) is 0
    assert likelihood_root(0.0, 2.0, 3.0, 2.0, 3.0) == 0.0


def test_likelihood_root_stays_feasible():
    rng = np.random.default_rng(7)
    for _ in range(200):
        E, F = float(rng.uniform(0.5, 4)), float(rng.uniform(0.5, 4))
        sxx, syy = E * rng.uniform(0.5, 1.5), F * rng.uniform(0.5, 1.5)
        sxy = rng.uniform(-1, 1) * math.sqrt(sxx * syy)
        root = likelihood_root(float(sxy), float(sxx), float(syy), E, F)
        assert abs(root) <= math.sqrt(E * F) * (1.0 + 1e-9)


def test_mle_uses_margins_and_beats_plain_inner_at_high_cosine():
    rng = np.random.default_rng(8)
    u = rng.standard_normal(64)
    v = 0.95 * u + math.sqrt(1 - 0.95**2) * rng.standard_normal(64)
    E, F = float(u @ u), float(v @ v)
    a = float(u @ v)
    plain, mle = [], []
    for t in range(1500):
        x, y = sketch_pair(u, v, rademacher_config(64, 8, seed=derive_seed(15, t)))
        plain.append(inner_product_hat(x, y))
        mle.append(mle_inner_product(x, y, E, F))
    mse_plain = np.mean((np.array(plain) - a) ** 2)
    mse_mle = np.mean((np.array(mle) - a) ** 2)
    assert mse_mle < 0.8 * mse_plain


def test_mle_rejects_bad_margins():
    u = np.random.default_rng(9).standard_normal(16)
    x, y = sketch_pair(u, u, rademacher_config(16, 4))
    with pytest.raises(ValueError):
        mle_inner_product(x, y, 0.0, 1.0)
    with pytest.raises(ValueError):
        mle_inner_product(x, y, 1.0, -2.0)


# --- normalized inner product ---------------------------------------------------


def test_normalized_inner_from_published_margins():
    # rho = 0.9623 with squared norms 13556 and 13395 rescales to 12967.24...
    got = normalized_inner_product(0.9623, math.sqrt(13556.0), math.sqrt(13395.0))
    assert got == pytest.approx(12967.24226711215, rel=1e-12)


def test_normalized_inner_validation():
    with pytest.raises(ValueError):
        normalized_inner_product(0.5, -1.0, 1.0)


def test_normalized_inner_recovers_inner_at_k_equals_dim():
    rng = np.random.default_rng(10)
    u = 3.0 * rng.standard_normal(32)
    v = 0.2 * rng.standard_normal(32)
    x, y = sketch_pair(u, v, rademacher_config(32, 32, seed=4))
    rho_hat = cosine_hat(x, y)
    got = normalized_inner_product(rho_hat, np.linalg.norm(u), np.linalg.norm(v))
    assert got == pytest.approx(float(u @ v), rel=1e-12)


# --- guards ----------------------------------------------------------------------


def test_zero_norm_cosine_raises():
    u = np.random.default_rng(11).standard_normal(16)
    x, y = sketch_pair(np.zeros(16), u, rademacher_config(16, 4))
    with pytest.raises(ZeroNormError):
        cosine_hat(x, y)
    a = vsrp_sketch(np.zeros(16), 16, 8, 1.0, 0)
    b = vsrp_sketch(u, 16, 8, 1.0, 0)
    with pytest.raises(ZeroNormError):
        vsrp_cosine_hat(a, b)


def test_mismatched_sketches_raise():
    u = np.random.default_rng(12).standard_normal(16)
    config = rademacher_config(16, 4, seed=1)
    x = oporp_sketch(u, config)
    y = oporp_sketch(u, with_seed(config, 2))
    for estimator in (inner_product_hat, distance_hat, cosine_hat):
        with pytest.raises(SketchMismatchError):
            estimator(x, y)


def test_vsrp_estimators_reject_plain_sketches():
    u = np.random.default_rng(13).standard_normal(16)
    config = SketchConfig(
        dim=16, k=1, binning=Binning.VARIABLE, dist=rademacher(), m=8, seed=0
    )
    x, y = sketch_pair(u, 2 * u, config)
    with pytest.raises(ValueError):
        vsrp_inner_product_hat(x, y)
    with pytest.raises(ValueError):
        vsrp_cosine_hat(x, y)


def test_normalized_sketches_give_cosine_via_inner():
    # after per-repetition normalization, the plain inner estimator on m=1
    # sketches is literally the cosine estimator
    rng = np.random.default_rng(14)
    u, v = rng.standard_normal(64), rng.standard_normal(64)
    x, y = sketch_pair(u, v, rademacher_config(64, 16, seed=6))
    lhs = inner_product_hat(normalize_sketch(x), normalize_sketch(y))
    assert lhs == pytest.approx(cosine_hat(x, y), rel=1e-12)


def test_estimator_enum_round_trip():
    for est in Estimator:
        assert Estimator(est.value) is est
    with pytest.raises(ValueError):
        Estimator("hamming")
