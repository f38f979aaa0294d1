"""
Sketches in a toy retrieval pipeline
====================================

Clustered synthetic points with spread-out norms, 32-bin sketches, and
three scorers: estimated cosine, estimated inner product, and a sparse
dense projection. Gold sets are exact-cosine top-50. Ends with a KNN
sanity check.
"""

import numpy as np

from oporp import (
    Binning,
    SketchConfig,
    area_under_pr,
    knn_eval,
    make_clusters,
    rademacher,
    retrieval_eval,
    sparse,
)

D, k = 256, 32
points, labels = make_clusters(D, 2200, n_clusters=3, noise=0.6, seed=0,
                               norm_range=(0.5, 2.0))
base, queries = points[:2000], points[2000:]

config = SketchConfig(dim=D, k=k, binning=Binning.FIXED, dist=rademacher(), seed=4)
vsrp_config = SketchConfig(dim=D, k=k, binning=Binning.VARIABLE, dist=sparse(100.0), seed=4)

print(f"2000 base / 200 queries, D={D}, {k} bins, exact-cosine top-50 gold")
print()
for name, cfg in (("exact", config), ("cosine", config), ("inner", config),
                  ("vsrp_inner", vsrp_config)):
    curve = retrieval_eval(base, queries, cfg, name, top_n=50)
    print(f"  {name:11s} AUPR {area_under_pr(curve):.4f}"
          f"   recall@50 {curve[49].recall:.3f}")

print()
print("normalizing helps because the gold standard is cosine but the point")
print("norms vary by 4x; the un-normalized scores chase the longest vectors")
print()

# tighter clusters, now as a labeled classification problem
points2, labels2 = make_clusters(D, 1200, n_clusters=3, noise=0.25, seed=1)
train, train_labels = points2[:1000], labels2[:1000]
test, test_labels = points2[1000:], labels2[1000:]
acc = knn_eval(train, train_labels, test, test_labels, 5, config, "exact")
print(f"5-NN accuracy, exact cosine: {acc:.3f}")
for bins in (32, 64, 128):
    cfg = SketchConfig(dim=D, k=bins, binning=Binning.FIXED, dist=rademacher(), seed=4)
    acc = knn_eval(train, train_labels, test, test_labels, 5, cfg, "cosine")
    print(f"5-NN accuracy, {bins:3d}-bin sketch cosine: {acc:.3f}")
