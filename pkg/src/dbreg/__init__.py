"""Distance-based regression association tests.

Pseudo-F and square-root F statistics for relating an ``n x n`` similarity
(or distance) matrix of multivariate responses to predictors, with p-values
from the chi-squared-mixture null law (parametric bootstrap, scaled
chi-squared and generalized-gamma moment matching) and a permutation
reference.
"""

from .errors import (
    DbregError,
    DegenerateResidual,
    DegenerateSpectrum,
    GammaFitFailed,
    InvalidCorrelation,
    InvalidCumulants,
    InvalidInput,
    NotPSD,
    SingularCovariance,
    SingularDesign,
)
from .kernels import (
    SimilarityMatrix,
    center,
    distance_to_similarity,
    euclidean_distances,
    gram_gaussian,
    gram_linear,
)
from .null import (
    CumulantSet,
    GeneralizedGammaParams,
    NullSpectrum,
    bootstrap_pvalue,
    bootstrap_pvalues,
    box_pvalue,
    cumulants,
    fit_box_chi2,
    fit_generalized_gamma,
    gg_cumulants,
    mixture_draws,
    null_spectrum,
    sample_mixture,
    tail_pvalue_gamma,
)
from .permutation import (
    exact_permutation_pvalues,
    permutation_pvalue,
    permutation_pvalues,
    timing_benchmark,
)
from .pipeline import PValueReport, association_test
from .statistics import (
    DesignMatrix,
    TestStatistic,
    hat_matrix,
    matrix_sqrt,
    noncentrality_factor,
    pseudo_f,
    sqrt_f,
)

__version__ = "0.1.0"
