"""Multiple imputation of skewed variables under a normal model, and the
bounding, transformation and truncated-regression modifications to it."""
from .core import mills_ratio, random_stream, sample_truncated_normal, truncation_geometry
from .design import CellConfig, delete_mcar, delete_peak, delete_tail, gen_bivariate, gen_trivariate
from .errors import (
    DegenerateFit, DegenerateSample, InfeasibleTarget, InsufficientData, InvalidData, MethodFailure,
    NearSingular, NonConvergence, SingularDesign, SkewImputeError, UnreachableBound,
)
from .estimands import analyze, mi_combine, sample_skewness, true_values
from .harness import CellResult, run_cell, run_experiment, summarize, univariate_demo
from .methods import METHODS, ImputationSpec, IncompleteDataset, TransformSpec, multiply_impute
from .moments import (
    BoundSpec, MomentPair, censored_moments, match_censored, match_truncated, truncated_moments,
)
from .regression import ols_fit, posterior_draw_regression, posterior_draw_univariate
from .truncreg import TruncRegFit, truncreg_fit, truncreg_impute

__version__ = "0.1.0"
