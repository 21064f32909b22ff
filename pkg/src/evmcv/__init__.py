"""Control variates fitted by empirical variance minimization."""

from .distributions import (
    CovarianceSpec,
    Dataset,
    Density,
    exponential_unit,
    lognormal_gbm,
    mvn,
    product_density,
    random_covariance,
    std_normal,
)
from .families import (
    CvFamily,
    additive_poly_family,
    basket_exp_family,
    gaussian_hermite_family,
    poly1d_family,
    rotated_poly_family,
)
from .fit import (
    FitError,
    FitMethod,
    FitResult,
    SearchOptions,
    basket_start_point,
    evm_fit_linear,
    evm_fit_nonlinear,
    ls_fit_linear,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    replicate,
    run_experiment,
    table_configs,
)
from .variance import CostModel, VarianceReport, efficiency, empirical_variance

__all__ = [name for name in dir() if not name.startswith("_")]
