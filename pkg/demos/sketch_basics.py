"""
First contact with OPORP sketches
=================================

Sketch two vectors with the same seed, estimate their inner product,
distance, and cosine, then push k all the way to D to watch every
estimate become exact.
"""

import numpy as np

from oporp import (
    Binning,
    SketchConfig,
    cosine_hat,
    distance_hat,
    inner_product_hat,
    load_sketch,
    oporp_sketch,
    rademacher,
    save_sketch,
)

rng = np.random.default_rng(7)
D = 256
u = rng.standard_normal(D)
v = 0.8 * u + 0.6 * rng.standard_normal(D)

print("true inner  ", float(u @ v))
print("true dist^2 ", float(np.sum((u - v) ** 2)))
print("true cosine ", float(u @ v) / (np.linalg.norm(u) * np.linalg.norm(v)))
print()

# The config carries all the randomness; sketches built from the same
# config are comparable, sketches from different seeds are not.
for k in (16, 64, 256):
    config = SketchConfig(dim=D, k=k, binning=Binning.FIXED, dist=rademacher(), seed=42)
    x = oporp_sketch(u, config)
    y = oporp_sketch(v, config)
    print(
        f"k={k:4d}  inner {inner_product_hat(x, y):10.4f}"
        f"  dist {distance_hat(x, y):10.4f}"
        f"  cosine {cosine_hat(x, y):8.4f}"
    )

print()
print("at k=D the sketch is just a signed shuffle, so the estimates are exact")

# sketches survive a round trip through disk, norms included
config = SketchConfig(dim=D, k=64, binning=Binning.FIXED, dist=rademacher(), seed=42)
save_sketch("/tmp/u.oporp", oporp_sketch(u, config))
back = load_sketch("/tmp/u.oporp")
print()
print("reloaded sketch matches:", np.array_equal(back.values, oporp_sketch(u, config).values))
print("stored norm:", back.stored_norm, "vs", float(np.linalg.norm(u)))
