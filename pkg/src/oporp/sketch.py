"""Sketch construction: one permutation + one projection, binned into k sums.

An OPORP sketch of a vector u permutes the coordinates, multiplies
elementwise by an i.i.d. projection vector r, and sums within k bins;
m independent repetitions are stacked repetition-major, so values[t*k:(t+1)*k]
is repetition t. Two binning schemes are supported:

* fixed-length: after the permutation, consecutive blocks of padded_dim/k
  coordinates form the bins (the vector is zero-padded when k does not
  divide dim);
* variable-length: every coordinate is assigned independently and uniformly
  to one of the k bins, so bin lengths are jointly multinomial and k may
  exceed dim.

A VSRP sketch is the classical very sparse random projection: k independent
sparse columns, one output sample each. It is distribution-identical to an
OPORP sketch with k=1 bin and m=k repetitions and is stored under that
equivalent config, but it is computed by an independent code path and
tagged with its own flavor so the two stream layouts cannot be mixed.

Sketch file layout (little-endian, 64-byte header):

    offset  size  field
    0       4     magic b"OPRP"
    4       2     u16 format version (1)
    6       1     u8 payload kind (0 = float64 values, 1 = int8 sign bits)
    7       1     u8 flavor (0 = oporp, 1 = vsrp)
    8       1     u8 binning (0 = fixed, 1 = variable)
    9       1     u8 distribution (0 = rademacher, 1 = gaussian,
                                   2 = scaled_uniform, 3 = sparse)
    10      1     u8 has_norm flag
    11      5     zero padding
    16      8     u64 dim
    24      8     u64 k
    32      8     u64 m
    40      8     u64 seed
    48      8     f64 sparsity s
    56      8     f64 stored l2 norm (0.0 when has_norm = 0)
    64      ...   payload: k*m float64 values, or k*m int8 entries in {-1, +1}
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .projection import (
    ProjectionDistribution,
    ProjectionKind,
    check_seed,
    derive_seed,
    generate_permutation,
    generate_projection_vector,
    generator,
    sparse,
)

# Stream tags: every random draw is keyed by (seed, repetition, purpose).
_PERM = 0
_PROJ = 1
_BINS = 2
_VSRP = 3


class Binning(enum.Enum):
    FIXED = "fixed"
    VARIABLE = "variable"


class ZeroNormError(ValueError):
    """A vector or repetition block that must be nonzero has norm zero."""


class SketchMismatchError(ValueError):
    """Two sketches built under different configs or flavors were combined."""


class SketchFileError(ValueError):
    """A sketch file is truncated, has a bad magic, or an unknown layout."""


@dataclass(frozen=True)
class SketchConfig:
    """Everything needed to rebuild a sketch's randomness from the seed."""

    dim: int
    k: int
    binning: Binning
    dist: ProjectionDistribution
    m: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.binning is Binning.FIXED and self.k > self.dim:
            raise ValueError(
                f"fixed-length binning needs k <= dim, got k={self.k}, dim={self.dim}"
            )
        check_seed(self.seed)

    @property
    def padded_dim(self) -> int:
        """Working dimension: dim rounded up to a multiple of k for fixed bins."""
        if self.binning is Binning.FIXED:
            return self.k * math.ceil(self.dim / self.k)
        return self.dim

    @property
    def block_length(self) -> int:
        """Coordinates per bin after padding (fixed-length binning only)."""
        if self.binning is not Binning.FIXED:
            raise ValueError("block_length is only defined for fixed-length binning")
        return self.padded_dim // self.k


@dataclass
class Sketch:
    """k*m sketch values stored repetition-major, plus the config behind them."""

    values: np.ndarray
    config: SketchConfig
    flavor: str = "oporp"
    stored_norm: float | None = None

    def rep(self, t: int) -> np.ndarray:
        """View of repetition t's k values."""
        k = self.config.k
        return self.values[t * k : (t + 1) * k]

    @property
    def reps(self) -> np.ndarray:
        """(m, k) view of the values."""
        return self.values.reshape(self.config.m, self.config.k)


def bins_from_permutation(perm: np.ndarray, k: int) -> np.ndarray:
    """Bin index of every original coordinate under consecutive-block binning.

    ``perm`` is the shuffled index array (position p holds coordinate
    perm[p]); coordinate i lands in bin position_of(i) // (D/k).
    """
    perm = np.asarray(perm)
    D = perm.shape[0]
    if k < 1 or D % k != 0:
        raise ValueError(f"k must divide the (padded) dimension, got D={D}, k={k}")
    positions = np.empty(D, dtype=np.int64)
    positions[perm] = np.arange(D, dtype=np.int64)
    return positions // (D // k)


def _rep_seed(config: SketchConfig, repetition: int, purpose: int) -> int:
    return derive_seed(config.seed, repetition, purpose)


def bin_assignment(config: SketchConfig, repetition: int) -> np.ndarray:
    """Bin index per coordinate for one repetition (padded coords included).

    Fixed-length binning derives the repetition's permutation and cuts it
    into consecutive blocks; variable-length binning assigns each coordinate
    independently and uniformly. Pure function of (config, repetition).
    """
    if not 0 <= repetition < config.m:
        raise ValueError(f"repetition must be in [0, {config.m}), got {repetition}")
    if config.binning is Binning.FIXED:
        perm = generate_permutation(config.padded_dim, _rep_seed(config, repetition, _PERM))
        return bins_from_permutation(perm, config.k)
    rng = generator(_rep_seed(config, repetition, _BINS))
    return rng.integers(0, config.k, size=config.dim)


def _as_vector(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.shape[0] != dim:
        raise ValueError(f"expected a length-{dim} vector, got shape {u.shape}")
    return u


def oporp_sketch(u: np.ndarray, config: SketchConfig) -> Sketch:
    """Sketch ``u`` under ``config``; same config means shared randomness.

    Two vectors sketched under an identical config see the same
    permutations, projections, and bin draws, which is what makes the
    estimators in :mod:`oporp.estimate` work.
    """
    u = _as_vector(u, config.dim)
    k, m = config.k, config.m
    Dp = config.padded_dim
    if config.binning is Binning.FIXED and Dp != config.dim:
        w = np.zeros(Dp)
        w[: config.dim] = u
    else:
        w = u
    values = np.empty(m * k)
    for t in range(m):
        r = generate_projection_vector(Dp, config.dist, _rep_seed(config, t, _PROJ))
        if config.binning is Binning.FIXED:
            perm = generate_permutation(Dp, _rep_seed(config, t, _PERM))
            x = (w[perm] * r).reshape(k, config.block_length).sum(axis=1)
        else:
            bins = bin_assignment(config, t)
            x = np.bincount(bins, weights=w * r, minlength=k)
        values[t * k : (t + 1) * k] = x
    return Sketch(values, config, "oporp", stored_norm=float(np.linalg.norm(u)))


def _sparse_matrix(rng: np.random.Generator, dim: int, k: int, s: float) -> np.ndarray:
    """(dim, k) matrix of i.i.d. sparse multipliers, column-major in meaning."""
    u = rng.random((dim, k))
    half = 0.5 / s
    R = np.zeros((dim, k))
    root = np.sqrt(s)
    R[u < half] = -root
    R[u >= 1.0 - half] = root
    return R


def vsrp_sketch(u: np.ndarray, D: int, k: int, s: float, seed: int) -> Sketch:
    """Very sparse random projection: k independent samples u . r_col.

    Stored under the equivalent (k=1, m=k) config so repetition-wise
    estimators agree with the pooled VSRP ones, but computed by its own
    direct matrix path on an independent stream.
    """
    config = SketchConfig(
        dim=D, k=1, binning=Binning.VARIABLE, dist=sparse(s), m=int(k), seed=seed
    )
    u = _as_vector(u, D)
    rng = generator(derive_seed(seed, _VSRP))
    R = _sparse_matrix(rng, D, config.m, s)
    return Sketch(u @ R, config, "vsrp", stored_norm=float(np.linalg.norm(u)))


def normalize_sketch(sk: Sketch) -> Sketch:
    """Scale each repetition block to unit l2 norm.

    With m=1 a plain inner product of two normalized sketches is the
    cosine estimate; with m>1 it is m times the averaged estimate.
    """
    blocks = sk.reps
    norms = np.linalg.norm(blocks, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormError("cannot normalize a sketch with a zero-norm repetition")
    values = (blocks / norms[:, None]).reshape(-1)
    return Sketch(values, sk.config, sk.flavor, stored_norm=sk.stored_norm)


def check_compatible(x: Sketch, y: Sketch) -> None:
    """Raise unless two sketches share config and flavor (hence randomness)."""
    if x.config != y.config:
        raise SketchMismatchError(
            f"sketch configs differ: {x.config} vs {y.config}"
        )
    if x.flavor != y.flavor:
        raise SketchMismatchError(f"sketch flavors differ: {x.flavor} vs {y.flavor}")


# --- file format ------------------------------------------------------------

_MAGIC = b"OPRP"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBBBBB5xQQQQdd")
_PAYLOAD_VALUES = 0
_PAYLOAD_SIGNS = 1
_FLAVOR_CODES = {"oporp": 0, "vsrp": 1}
_BINNING_CODES = {Binning.FIXED: 0, Binning.VARIABLE: 1}
_DIST_CODES = {
    ProjectionKind.RADEMACHER: 0,
    ProjectionKind.GAUSSIAN: 1,
    ProjectionKind.SCALED_UNIFORM: 2,
    ProjectionKind.SPARSE: 3,
}
_FLAVORS = {v: n for n, v in _FLAVOR_CODES.items()}
_BINNINGS = {v: b for b, v in _BINNING_CODES.items()}
_DISTS = {v: d for d, v in _DIST_CODES.items()}


def _pack_header(config: SketchConfig, payload: int, flavor: str, norm: float | None) -> bytes:
    return _HEADER.pack(
        _MAGIC,
        _FORMAT_VERSION,
        payload,
        _FLAVOR_CODES[flavor],
        _BINNING_CODES[config.binning],
        _DIST_CODES[config.dist.kind],
        0 if norm is None else 1,
        config.dim,
        config.k,
        config.m,
        config.seed,
        config.dist.sparsity,
        0.0 if norm is None else float(norm),
    )


def _unpack_header(buf: bytes) -> tuple[SketchConfig, int, str, float | None]:
    if len(buf) < _HEADER.size:
        raise SketchFileError("sketch file shorter than its header")
    (magic, version, payload, flavor, binning, dist, has_norm,
     dim, k, m, seed, sparsity, norm) = _HEADER.unpack_from(buf)
    if magic != _MAGIC:
        raise SketchFileError(f"bad magic {magic!r}, not a sketch file")
    if version != _FORMAT_VERSION:
        raise SketchFileError(f"unsupported sketch format version {version}")
    try:
        kind = _DISTS[dist]
        config = SketchConfig(
            dim=int(dim),
            k=int(k),
            binning=_BINNINGS[binning],
            dist=ProjectionDistribution(kind, float(sparsity) if kind is ProjectionKind.SPARSE else _DEFAULT_SPARSITY[kind]),
            m=int(m),
            seed=int(seed),
        )
        flavor_name = _FLAVORS[flavor]
    except (KeyError, ValueError) as exc:
        raise SketchFileError(f"bad sketch header field: {exc}") from exc
    return config, payload, flavor_name, (float(norm) if has_norm else None)


_DEFAULT_SPARSITY = {
    ProjectionKind.RADEMACHER: 1.0,
    ProjectionKind.GAUSSIAN: 1.0,
    ProjectionKind.SCALED_UNIFORM: 1.0,
}


def save_sketch(path: str, sk: Sketch) -> None:
    """Write a sketch to ``path`` in the documented binary layout."""
    values = np.ascontiguousarray(sk.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_pack_header(sk.config, _PAYLOAD_VALUES, sk.flavor, sk.stored_norm))
        fh.write(values.tobytes())


def load_sketch(path: str) -> Sketch:
    """Read back a float-valued sketch written by :func:`save_sketch`."""
    with open(path, "rb") as fh:
        buf = fh.read()
    config, payload, flavor, norm = _unpack_header(buf)
    if payload != _PAYLOAD_VALUES:
        raise SketchFileError("file holds sign bits, not sketch values")
    expected = config.k * config.m
    values = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size)
    if values.shape[0] != expected:
        raise SketchFileError(
            f"expected {expected} values, file holds {values.shape[0]}"
        )
    return Sketch(values.astype(np.float64), config, flavor, stored_norm=norm)


def save_sign_sketch(path: str, bits: np.ndarray, config: SketchConfig) -> None:
    """Write +-1 sign bits under the same header as value sketches."""
    bits = np.asarray(bits)
    if not np.all(np.isin(bits, (-1, 1))):
        raise ValueError("sign bits must all be -1 or +1")
    with open(path, "wb") as fh:
        fh.write(_pack_header(config, _PAYLOAD_SIGNS, "oporp", None))
        fh.write(bits.astype(np.int8).tobytes())


def load_sign_sketch(path: str) -> tuple[np.ndarray, SketchConfig]:
    """Read back sign bits and the config they were sketched under."""
    with open(path, "rb") as fh:
        buf = fh.read()
    config, payload, _, _ = _unpack_header(buf)
    if payload != _PAYLOAD_SIGNS:
        raise SketchFileError("file holds sketch values, not sign bits")
    bits = np.frombuffer(buf, dtype=np.int8, offset=_HEADER.size)
    expected = config.k * config.m
    if bits.shape[0] != expected:
        raise SketchFileError(f"expected {expected} bits, file holds {bits.shape[0]}")
    return bits.astype(np.int8), config


def with_seed(config: SketchConfig, seed: int) -> SketchConfig:
    """Same config, different randomness."""
    return replace(config, seed=seed)
