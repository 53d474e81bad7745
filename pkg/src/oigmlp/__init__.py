"""Two-stage single-hidden-layer MLP training with optimal input gains.

The library pairs exact output-weight solves (orthogonal least squares with
dependence freezing) with gradient-based input-weight updates whose step
sizes come from second-order models: a scalar optimal learning factor, or a
per-input gain vector solved from a Gauss-Newton system.  Baseline scaled
conjugate gradient and Levenberg-Marquardt trainers, a k-fold benchmark
harness, scikit-learn style estimators, and a CLI round out the package.
"""

from .estimator import TwoStageMlpClassifier, TwoStageMlpRegressor
from .linalg import (DEFAULT_DEPENDENCE_TOL, LinearSolveReport, OlsFactor,
                     ols_error_decomposition, ols_factor, ols_solve,
                     orthonormal_weights, whitening_from_autocorrelation)
from .network import (Dataset, ForwardCache, MlpParams, classification_error,
                      correlations, forward, mse, net_control_init, owo_solve,
                      pad_params_for_new_inputs)
from .gradients import (HwoGradient, HwoTransform, bp_gradient, hwo_gradient,
                        hwo_transform, input_autocorrelation,
                        mean_removal_transform, optimal_learning_factor,
                        transform_gradient)
from .gains import (apply_gain_update, gain_gradient, gain_hessian,
                    gain_intermediate_v, gain_system, solve_gains)
from .trainers import (ALGORITHMS, MultiplyModel, TrainConfig, TrainTrace,
                       TrainingAbort, multiply_counts, per_iteration_cost,
                       train, train_lm, train_oig_bp, train_oig_hwo,
                       train_owo_bp, train_scg)
from .data import (FoldPlan, NormalizationSpec, RawTable, aggregate_reports,
                   augment_dependent, load_table, load_with_descriptor,
                   make_folds, normalize, report_metrics,
                   synthesize_regression, write_table)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "DEFAULT_DEPENDENCE_TOL", "Dataset", "FoldPlan",
    "ForwardCache", "HwoGradient", "LinearSolveReport", "MlpParams",
    "MultiplyModel", "NormalizationSpec", "OlsFactor", "RawTable",
    "TrainConfig", "TrainTrace", "TrainingAbort", "TwoStageMlpClassifier",
    "TwoStageMlpRegressor", "aggregate_reports", "apply_gain_update",
    "augment_dependent", "bp_gradient", "classification_error",
    "correlations", "forward", "gain_gradient", "gain_hessian",
    "gain_intermediate_v", "gain_system", "hwo_gradient", "hwo_transform",
    "HwoTransform", "input_autocorrelation", "load_table",
    "load_with_descriptor",
    "make_folds", "mean_removal_transform", "mse", "multiply_counts",
    "net_control_init", "normalize", "ols_error_decomposition", "ols_factor",
    "ols_solve", "optimal_learning_factor", "orthonormal_weights",
    "owo_solve", "pad_params_for_new_inputs", "per_iteration_cost",
    "report_metrics", "solve_gains", "synthesize_regression", "train",
    "train_lm", "train_oig_bp", "train_oig_hwo", "train_owo_bp", "train_scg",
    "transform_gradient", "whitening_from_autocorrelation", "write_table",
]
