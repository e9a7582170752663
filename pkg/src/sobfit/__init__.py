"""Sobolev-regularized function fitting on the periodic unit cube.

Fits a smooth periodic function to scattered zero-mean point data by
minimizing a convex objective: squared L2 norm, a pure k-th derivative
penalty weighted by lam, and the squared misfit at the data points.  Three
interchangeable solvers (gradient descent, exact linear solve, closed-form
kernel dual), automatic selection of the penalty strength by maximizing the
solution norm, and a sign-based binary classification pipeline.
"""

from .backend import HAVE_EXT, backend_name
from .classify import (
    ClassifierModel,
    FeatureTransform,
    extract_line_profile,
    fit_transform,
    load_model,
    predict,
    predict_many,
    save_model,
    train,
    training_metrics,
)
from .data import (
    DataFormatError,
    Dataset,
    ExtensionSpec,
    bin_to_grid,
    dataset_from_json,
    dataset_to_json,
    even_extension,
    load_csv,
    nearest_cell_indices,
    save_csv,
)
from .grid import GriddedData, GridSpec, SpectralField, random_band_limited_field
from .kernel import (
    KernelModel,
    default_truncation,
    gram_matrix,
    kernel_predict,
    kernel_predict_many,
    kernel_value,
    series_tail_bound,
    solve_kernel,
)
from .lambda_select import (
    DescentState,
    LambdaSweepResult,
    RootResult,
    log_lambda_grid,
    norm_derivative_root,
    select_lambda_descent,
    sweep_lambda,
)
from .solvers import (
    DivergenceError,
    FitReport,
    GDParams,
    LinearSystem,
    build_linear_system,
    gd_stability_limit,
    load_fit_report,
    save_fit_report,
    solve_gd,
    solve_linear,
)
from .spectral import (
    FrequencyWeight,
    bessel_sobolev_norm,
    el_residual,
    frequency_weight,
    kgrad_norm_sq,
    l2_norm_sq,
    l2_norm_sq_freq,
    mixed_sobolev_norm_sq,
    objective,
    objective_gradient,
    penalty_multipliers,
    sup_norm_bound_constant,
    weight_array,
)

__version__ = "0.1.0"
