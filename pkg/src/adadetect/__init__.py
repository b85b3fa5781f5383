"""adadetect: semi-supervised novelty detection with finite-sample FDR control.

Given a sample of typical measurements and a test sample possibly
containing novelties, the pipeline learns a score function on the pooled
data (in a way that keeps the null scores exchangeable), converts scores to
rank-based empirical p-values against a held-out calibration split, and
applies the step-up rule.  The false discovery rate is controlled in finite
samples for any scorer, however poor.
"""

__version__ = "0.1.0"

from .conformal import ScoredSplit, break_ties, empirical_pvalues
from .detector import (
    AdaDetect,
    DetectionReport,
    SplitDataset,
    run_adadetect,
    run_adadetect_cv,
    run_quantile_adadetect,
    run_storey_adadetect,
    split_nts,
)
from .exceptions import (
    DegenerateEstimateError,
    InternalInvariantError,
    InvalidInputError,
)
from .mtest import (
    AdaptiveBHResult,
    KnockoffResult,
    Pi0Estimate,
    RejectionSet,
    adaptive_bh,
    bh_rejections,
    fdp_hat,
    knockoff_select,
    quantile_pi0,
    storey_pi0,
)
from .scorers import (
    BaseScorer,
    ChiSquareScorer,
    ConstantScorer,
    DensityRatioScorer,
    FixedScorer,
    GaussianShrinkageDensity,
    HistogramDensity,
    LinearScorer,
    OracleScorer,
    PUClassifierScorer,
    TwoComponentGaussianMixture,
    histogram_density,
)
from .simlab import (
    BoundEstimate,
    GeneratedData,
    GeneratorConfig,
    MonteCarloReport,
    adadetect_procedure,
    gen_dataset,
    linear_scorer_for,
    marginal_storey_bh,
    marginal_storey_bh_procedure,
    monte_carlo,
    oracle_scorer_for,
    sample_least_favorable,
    verify_adaptive_bound,
)

__all__ = [
    "__version__",
    "AdaDetect",
    "AdaptiveBHResult",
    "BaseScorer",
    "BoundEstimate",
    "ChiSquareScorer",
    "ConstantScorer",
    "DegenerateEstimateError",
    "DensityRatioScorer",
    "DetectionReport",
    "FixedScorer",
    "GaussianShrinkageDensity",
    "GeneratedData",
    "GeneratorConfig",
    "HistogramDensity",
    "InternalInvariantError",
    "InvalidInputError",
    "KnockoffResult",
    "LinearScorer",
    "MonteCarloReport",
    "OracleScorer",
    "PUClassifierScorer",
    "Pi0Estimate",
    "RejectionSet",
    "ScoredSplit",
    "SplitDataset",
    "TwoComponentGaussianMixture",
    "adaptive_bh",
    "adadetect_procedure",
    "bh_rejections",
    "break_ties",
    "empirical_pvalues",
    "fdp_hat",
    "gen_dataset",
    "histogram_density",
    "knockoff_select",
    "linear_scorer_for",
    "marginal_storey_bh",
    "marginal_storey_bh_procedure",
    "monte_carlo",
    "oracle_scorer_for",
    "quantile_pi0",
    "run_adadetect",
    "run_adadetect_cv",
    "run_quantile_adadetect",
    "run_storey_adadetect",
    "sample_least_favorable",
    "split_nts",
    "storey_pi0",
    "verify_adaptive_bound",
]
