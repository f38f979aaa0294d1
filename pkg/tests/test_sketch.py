"""Sketch construction, binning structure, and the file format.

The reconstruction tests rebuild sketches from the public primitives and
the documented per-repetition stream layout, so any change to how
randomness is wired breaks here rather than silently shifting results.
"""

import numpy as np
import pytest

from oporp.projection import (
    derive_seed,
    gaussian,
    generate_permutation,
    generate_projection_vector,
    generator,
    rademacher,
    sparse,
)
from oporp.sketch import (
    _BINS,
    _PERM,
    _PROJ,
    _VSRP,
    Binning,
    Sketch,
    SketchConfig,
    SketchFileError,
    SketchMismatchError,
    ZeroNormError,
    bin_assignment,
    bins_from_permutation,
    check_compatible,
    load_sign_sketch,
    load_sketch,
    normalize_sketch,
    oporp_sketch,
    save_sign_sketch,
    save_sketch,
    vsrp_sketch,
    with_seed,
)


def cfg(**kw):
    base = dict(dim=16, k=4, binning=Binning.FIXED, dist=rademacher(), m=1, seed=0)
    base.update(kw)
    return SketchConfig(**base)


# --- config and binning structure --------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(k=0)
    with pytest.raises(ValueError):
        cfg(m=0)
    with pytest.raises(ValueError):
        cfg(dim=0)
    with pytest.raises(ValueError):
        cfg(k=17)  # fixed binning needs k <= dim
    with pytest.raises(ValueError):
        cfg(seed=-1)
    # variable binning is allowed to have more bins than coordinates
    c = cfg(k=32, binning=Binning.VARIABLE)
    assert c.padded_dim == 16
    with pytest.raises(ValueError):
        c.block_length


def test_padded_dim_and_block_length():
    c = SketchConfig(dim=10, k=4, binning=Binning.FIXED, dist=rademacher())
    assert c.padded_dim == 12
    assert c.block_length == 3
    assert cfg(dim=16, k=4).block_length == 4


def test_bins_from_permutation_hand_example():
    # position p holds coordinate perm[p]; blocks of length 2
    perm = np.array([2, 0, 3, 1])
    assert np.array_equal(bins_from_permutation(perm, 2), [0, 1, 0, 1])
    assert np.array_equal(bins_from_permutation(np.arange(4), 2), [0, 0, 1, 1])


def test_bins_from_permutation_rejects_non_divisor():
    with pytest.raises(ValueError):
        bins_from_permutation(np.arange(6), 4)


def test_fixed_bin_assignment_is_balanced():
    for D, k, seed in [(16, 4, 0), (12, 3, 5), (64, 64, 9)]:
        c = SketchConfig(dim=D, k=k, binning=Binning.FIXED, dist=rademacher(), seed=seed)
        bins = bin_assignment(c, 0)
        assert np.array_equal(np.sort(np.unique(bins)), np.arange(k))
        assert np.all(np.bincount(bins, minlength=k) == c.block_length)


def test_variable_bin_assignment_range_and_determinism():
    c = cfg(binning=Binning.VARIABLE, k=6, dim=200, seed=3)
    bins = bin_assignment(c, 0)
    assert bins.shape == (200,)
    assert bins.min() >= 0 and bins.max() < 6
    assert np.array_equal(bins, bin_assignment(c, 0))
    with pytest.raises(ValueError):
        bin_assignment(c, 1)  # m = 1, repetition out of range


def test_bin_assignment_differs_across_repetitions():
    c = cfg(m=3, seed=8)
    assignments = [bin_assignment(c, t) for t in range(3)]
    assert not np.array_equal(assignments[0], assignments[1])
    assert not np.array_equal(assignments[1], assignments[2])


# --- sketch values ------------------------------------------------------------


def test_oporp_matches_reconstruction_fixed():
    """Recompute from the primitives: coordinate i contributes u_i * r[pos(i)]
    to the bin of its post-permutation block."""
    rng = np.random.default_rng(1)
    u = rng.standard_normal(16)
    c = cfg(m=3, seed=21, dist=gaussian())
    sk = oporp_sketch(u, c)
    for t in range(3):
        perm = generate_permutation(16, derive_seed(21, t, _PERM))
        r = generate_projection_vector(16, gaussian(), derive_seed(21, t, _PROJ))
        positions = np.empty(16, dtype=np.int64)
        positions[perm] = np.arange(16)
        expected = np.bincount(
            bins_from_permutation(perm, 4), weights=u * r[positions], minlength=4
        )
        assert np.allclose(sk.rep(t), expected, rtol=0, atol=1e-12)


def test_oporp_matches_reconstruction_variable():
    rng = np.random.default_rng(2)
    u = rng.standard_normal(30)
    c = SketchConfig(dim=30, k=7, binning=Binning.VARIABLE, dist=rademacher(), m=2, seed=5)
    sk = oporp_sketch(u, c)
    for t in range(2):
        bins = generator(derive_seed(5, t, _BINS)).integers(0, 7, size=30)
        r = generate_projection_vector(30, rademacher(), derive_seed(5, t, _PROJ))
        expected = np.bincount(bins, weights=u * r, minlength=7)
        assert np.allclose(sk.rep(t), expected, rtol=0, atol=1e-12)


def test_oporp_linearity():
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal(20), rng.standard_normal(20)
    for binning in Binning:
        c = SketchConfig(dim=20, k=5, binning=binning, dist=gaussian(), m=2, seed=7)
        su = oporp_sketch(u, c).values
        sv = oporp_sketch(v, c).values
        sw = oporp_sketch(2.0 * u - 0.5 * v, c).values
        assert np.allclose(sw, 2.0 * su - 0.5 * sv, atol=1e-10)


def test_padding_equals_explicit_zero_padding():
    """dim=5, k=2 pads to 6; sketching the explicitly padded vector under
    dim=6 must give identical values (same derived streams)."""
    u = np.array([0.3, -1.2, 0.5, 2.0, -0.7])
    a = oporp_sketch(u, SketchConfig(dim=5, k=2, binning=Binning.FIXED, dist=rademacher(), seed=4))
    b = oporp_sketch(
        np.concatenate([u, [0.0]]),
        SketchConfig(dim=6, k=2, binning=Binning.FIXED, dist=rademacher(), seed=4),
    )
    assert np.array_equal(a.values, b.values)


def test_sketch_at_k_equals_dim_is_signed_shuffle():
    u = np.random.default_rng(6).standard_normal(32)
    sk = oporp_sketch(u, cfg(dim=32, k=32, seed=13))
    assert np.allclose(np.sort(np.abs(sk.values)), np.sort(np.abs(u)), atol=1e-12)


def test_repetition_layout():
    u = np.random.default_rng(7).standard_normal(16)
    sk = oporp_sketch(u, cfg(m=3, seed=2))
    assert sk.values.shape == (12,)
    assert sk.reps.shape == (3, 4)
    for t in range(3):
        assert np.array_equal(sk.rep(t), sk.values[t * 4 : (t + 1) * 4])


def test_sketch_stores_data_norm():
    u = np.array([3.0, 4.0] + [0.0] * 14)
    assert oporp_sketch(u, cfg()).stored_norm == pytest.approx(5.0, abs=1e-12)


def test_oporp_rejects_wrong_shape():
    with pytest.raises(ValueError):
        oporp_sketch(np.zeros((4, 4)), cfg())
    with pytest.raises(ValueError):
        oporp_sketch(np.zeros(15), cfg())


def test_vsrp_matches_manual_matrix():
    u = np.random.default_rng(8).standard_normal(24)
    s, k, seed = 4.0, 6, 31
    sk = vsrp_sketch(u, 24, k, s, seed)
    assert sk.flavor == "vsrp"
    assert sk.config.k == 1 and sk.config.m == k
    draws = generator(derive_seed(seed, _VSRP)).random((24, k))
    R = np.zeros((24, k))
    R[draws < 0.5 / s] = -np.sqrt(s)
    R[draws >= 1.0 - 0.5 / s] = np.sqrt(s)
    assert np.allclose(sk.values, u @ R, atol=1e-12)


def test_vsrp_s1_columns_are_dense_signs():
    # at s=1 the sparse family degenerates to pure signs, so every sample
    # is a full +-1 projection of u
    u = np.ones(10)
    sk = vsrp_sketch(u, 10, 50, 1.0, 3)
    assert np.all(np.abs(sk.values) <= 10.0)
    assert np.all(sk.values % 2 == 0)  # sum of ten odd signs is even


def test_vsrp_shares_randomness_across_vectors():
    rng = np.random.default_rng(9)
    u, v = rng.standard_normal(16), rng.standard_normal(16)
    su = vsrp_sketch(u, 16, 8, 2.0, 5)
    sv = vsrp_sketch(v, 16, 8, 2.0, 5)
    sw = vsrp_sketch(u + v, 16, 8, 2.0, 5)
    assert np.allclose(sw.values, su.values + sv.values, atol=1e-10)


def test_normalize_sketch_unit_blocks():
    u = np.random.default_rng(10).standard_normal(16)
    sk = normalize_sketch(oporp_sketch(u, cfg(m=4, seed=6)))
    assert np.allclose(np.linalg.norm(sk.reps, axis=1), 1.0, atol=1e-12)


def test_normalize_zero_sketch_raises():
    sk = oporp_sketch(np.zeros(16), cfg())
    with pytest.raises(ZeroNormError):
        normalize_sketch(sk)


def test_check_compatible():
    u = np.random.default_rng(11).standard_normal(16)
    a = oporp_sketch(u, cfg(seed=1))
    b = oporp_sketch(u, cfg(seed=2))
    with pytest.raises(SketchMismatchError):
        check_compatible(a, b)
    c = vsrp_sketch(u, 16, 4, 1.0, 1)
    d = Sketch(c.values, c.config, "oporp", c.stored_norm)
    with pytest.raises(SketchMismatchError):
        check_compatible(c, d)
    check_compatible(a, oporp_sketch(2 * u, cfg(seed=1)))


def test_with_seed():
    c = with_seed(cfg(seed=1), 99)
    assert c.seed == 99 and c.k == 4


# --- file format --------------------------------------------------------------


def test_value_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    u = rng.standard_normal(20)
    for sk in [
        oporp_sketch(u, SketchConfig(dim=20, k=5, binning=Binning.VARIABLE, dist=sparse(3.0), m=2, seed=17)),
        vsrp_sketch(u, 20, 9, 5.0, 23),
        Sketch(rng.standard_normal(4), cfg(dim=8, k=4, seed=2), "oporp", None),
    ]:
        path = tmp_path / "sk.bin"
        save_sketch(str(path), sk)
        back = load_sketch(str(path))
        assert np.array_equal(back.values, sk.values)
        assert back.config == sk.config
        assert back.flavor == sk.flavor
        if sk.stored_norm is None:
            assert back.stored_norm is None
        else:
            assert back.stored_norm == sk.stored_norm


def test_sign_round_trip(tmp_path):
    bits = np.array([1, -1, -1, 1], dtype=np.int8)
    path = tmp_path / "signs.bin"
    save_sign_sketch(str(path), bits, cfg(dim=8, k=4))
    back, config = load_sign_sketch(str(path))
    assert np.array_equal(back, bits)
    assert config == cfg(dim=8, k=4)


def test_sign_save_rejects_non_sign_values(tmp_path):
    with pytest.raises(ValueError):
        save_sign_sketch(str(tmp_path / "x"), np.array([1, 0, -1]), cfg(dim=8, k=3))


def test_file_error_cases(tmp_path):
    u = np.random.default_rng(13).standard_normal(16)
    good = tmp_path / "good.bin"
    save_sketch(str(good), oporp_sketch(u, cfg(seed=3)))
    raw = good.read_bytes()

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(SketchFileError):
        load_sketch(str(bad_magic))

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(raw[:40])
    with pytest.raises(SketchFileError):
        load_sketch(str(truncated))

    short_payload = tmp_path / "short.bin"
    short_payload.write_bytes(raw[:-8])
    with pytest.raises(SketchFileError):
        load_sketch(str(short_payload))

    bad_version = tmp_path / "ver.bin"
    bad_version.write_bytes(raw[:4] + b"\x63\x00" + raw[6:])
    with pytest.raises(SketchFileError):
        load_sketch(str(bad_version))


def test_payload_kind_is_enforced(tmp_path):
    u = np.random.default_rng(14).standard_normal(16)
    vpath, spath = tmp_path / "v.bin", tmp_path / "s.bin"
    save_sketch(str(vpath), oporp_sketch(u, cfg(seed=4)))
    save_sign_sketch(str(spath), np.array([1, -1, 1, -1], dtype=np.int8), cfg(seed=4))
    with pytest.raises(SketchFileError):
        load_sign_sketch(str(vpath))
    with pytest.raises(SketchFileError):
        load_sketch(str(spath))
