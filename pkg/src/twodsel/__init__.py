"""Row and column variable selection for GLMs with matrix-valued predictors.

The coefficient matrix is factorized as ``B = U V``; an adaptive group-LASSO
penalty on the rows of ``U`` and the columns of ``V`` removes whole rows
(variables) and columns (stages) of ``B``.
"""

from .benchmarks import (METHODS, benchmark_col_row, benchmark_row_col,
                         benchmark_structured_lasso, run_method)
from .exceptions import DimensionError, DivergenceError, ParseError, ValidationError
from .glm import (DataSet, FactorModel, ResponseFamily, bilinear_predictor, gradients,
                  linear_predictor, lipschitz_u, lipschitz_v, negative_log_likelihood)
from .io import export, ingest, ingest_profiles
from .prox import AdaptiveWeights, PenaltySpec, col_soft_threshold, row_soft_threshold
from .selection import (SelectionReport, adaptive_weights, information_criterion, init_heuristic,
                        lambda_grid, resample_selection, select)
from .simulation import ScenarioSpec, run_study, selection_metrics, simulate
from .solver import PIPELINE_CONFIG, FitResult, SolverConfig, bcd_fit, bcpd_fit, objective

__version__ = "0.1.0"

__all__ = [
    "METHODS", "benchmark_col_row", "benchmark_row_col", "benchmark_structured_lasso", "run_method",
    "DimensionError", "DivergenceError", "ParseError", "ValidationError",
    "DataSet", "FactorModel", "ResponseFamily", "bilinear_predictor", "gradients",
    "linear_predictor", "lipschitz_u", "lipschitz_v", "negative_log_likelihood",
    "export", "ingest", "ingest_profiles",
    "AdaptiveWeights", "PenaltySpec", "col_soft_threshold", "row_soft_threshold",
    "SelectionReport", "adaptive_weights", "information_criterion", "init_heuristic",
    "lambda_grid", "resample_selection", "select",
    "ScenarioSpec", "run_study", "selection_metrics", "simulate",
    "PIPELINE_CONFIG", "FitResult", "SolverConfig", "bcd_fit", "bcpd_fit", "objective",
]
