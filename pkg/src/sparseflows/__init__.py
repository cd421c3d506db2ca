"""Sparse kernel dictionary learning with subsample-loss model selection."""

from .data import Dataset, gen_gp_dataset, load_csv, save_csv
from .estimators import ExhaustiveMDLSelector, SparseKernelFlows
from .exceptions import (
    AllPrunedError,
    ConditioningError,
    DataFormatError,
    DegenerateBatchError,
    DictionaryTooLargeError,
    OptimizationError,
    SingularGramError,
    SparseFlowsError,
)
from .experiment import ExperimentConfig, run_bench, run_experiment
from .interpolation import (
    RKHSInterpolant,
    error_bound,
    interpolate,
    load_model,
    posterior_variance,
    rkhs_norm_sq,
    save_model,
)
from .kernels import (
    BaseKernel,
    GramMatrix,
    KernelDictionary,
    constant,
    eval_base,
    eval_dictionary,
    gaussian,
    gram,
    laplace,
    linear,
    load_dictionary,
    locally_periodic,
    median_heuristic,
    polynomial,
    resolve_nugget,
    save_dictionary,
    triangular,
)
from .kf_loss import KFConfig, mean_rho, rho, rho_gradient
from .mdl import (
    OptConfig,
    SelectionReport,
    SupportSet,
    bic_score,
    exhaustive_mdl_select,
    mdl_objective,
    mdl_penalty,
)
from .sparse import (
    DEFAULT_LAMBDAS,
    extract_support,
    lambda_sweep,
    soft_threshold,
    sparse_fit,
)

__version__ = "0.1.0"

__all__ = [
    "AllPrunedError",
    "BaseKernel",
    "ConditioningError",
    "DEFAULT_LAMBDAS",
    "DataFormatError",
    "Dataset",
    "DegenerateBatchError",
    "DictionaryTooLargeError",
    "ExhaustiveMDLSelector",
    "ExperimentConfig",
    "GramMatrix",
    "KFConfig",
    "KernelDictionary",
    "OptConfig",
    "OptimizationError",
    "RKHSInterpolant",
    "SelectionReport",
    "SingularGramError",
    "SparseFlowsError",
    "SparseKernelFlows",
    "SupportSet",
    "bic_score",
    "constant",
    "error_bound",
    "eval_base",
    "eval_dictionary",
    "exhaustive_mdl_select",
    "extract_support",
    "gaussian",
    "gen_gp_dataset",
    "gram",
    "interpolate",
    "lambda_sweep",
    "laplace",
    "linear",
    "load_csv",
    "load_dictionary",
    "load_model",
    "locally_periodic",
    "mdl_objective",
    "mdl_penalty",
    "mean_rho",
    "median_heuristic",
    "polynomial",
    "posterior_variance",
    "resolve_nugget",
    "rho",
    "rho_gradient",
    "rkhs_norm_sq",
    "run_bench",
    "run_experiment",
    "save_csv",
    "save_dictionary",
    "save_model",
    "soft_threshold",
    "sparse_fit",
    "triangular",
    "__version__",
]
