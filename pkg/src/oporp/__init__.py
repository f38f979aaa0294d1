"""Binned random-projection sketches with exact variance oracles.

One permutation and one projection turn a length-D vector into k bin sums;
estimators recover inner products, squared distances, and cosines from
sketch pairs, closed-form oracles give their exact variances, and
differentially private release mechanisms cover the cases where sketches
leave the trust boundary.
"""

from .estimate import (
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
from .experiment import (
    ConvergenceError,
    PRPoint,
    SweepRow,
    area_under_pr,
    distribution_for_moment,
    generate_pair_with_cosine,
    knn_eval,
    make_clusters,
    mse_sweep,
    retrieval_eval,
    similarity_matrix,
)
from .privacy import (
    NoisySketch,
    PrivacySpec,
    SignSketch,
    dp_oporp,
    dp_sign_oporp_rr,
    dp_sign_oporp_rr_smooth,
    sign_similarity,
    solve_gaussian_sigma,
    std_normal_cdf,
)
from .projection import (
    ProjectionDistribution,
    ProjectionKind,
    derive_seed,
    fourth_moment,
    gaussian,
    generate_permutation,
    generate_projection_vector,
    rademacher,
    scaled_uniform,
    sparse,
)
from .sketch import (
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
)
from .variance import (
    DegeneratePairError,
    Lemma1Moments,
    PairStatistics,
    VarianceReport,
    lemma1_moments,
    pair_statistics,
    var_cosine,
    var_cosine_vsrp,
    var_distance,
    var_inner,
    var_inner_vsrp,
    var_normalized_inner,
    variance_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "Binning",
    "ConvergenceError",
    "DegeneratePairError",
    "EstimationError",
    "Estimator",
    "Lemma1Moments",
    "NoisySketch",
    "PRPoint",
    "PairStatistics",
    "PrivacySpec",
    "ProjectionDistribution",
    "ProjectionKind",
    "SignSketch",
    "Sketch",
    "SketchConfig",
    "SketchFileError",
    "SketchMismatchError",
    "SweepRow",
    "VarianceReport",
    "ZeroNormError",
    "area_under_pr",
    "bin_assignment",
    "bins_from_permutation",
    "check_compatible",
    "cosine_hat",
    "derive_seed",
    "distance_hat",
    "distribution_for_moment",
    "dp_oporp",
    "dp_sign_oporp_rr",
    "dp_sign_oporp_rr_smooth",
    "fourth_moment",
    "gaussian",
    "generate_pair_with_cosine",
    "generate_permutation",
    "generate_projection_vector",
    "inner_product_hat",
    "knn_eval",
    "lemma1_moments",
    "likelihood_root",
    "load_sign_sketch",
    "load_sketch",
    "make_clusters",
    "mle_inner_product",
    "mse_sweep",
    "normalize_sketch",
    "normalized_inner_product",
    "oporp_sketch",
    "pair_statistics",
    "rademacher",
    "retrieval_eval",
    "save_sign_sketch",
    "save_sketch",
    "scaled_uniform",
    "sign_similarity",
    "similarity_matrix",
    "sparse",
    "solve_gaussian_sigma",
    "std_normal_cdf",
    "var_cosine",
    "var_cosine_vsrp",
    "var_distance",
    "var_inner",
    "var_inner_vsrp",
    "var_normalized_inner",
    "variance_ratio",
    "vsrp_cosine_hat",
    "vsrp_inner_product_hat",
    "vsrp_sketch",
]
