"""Variable selection by boosting with multiple testing.

The main entry points are :func:`bmt_select` and :func:`ocmt_select` for
the stagewise t-test procedures, the Lasso baselines in
:mod:`bmtselect.penalized`, the Monte Carlo laboratory in
:mod:`bmtselect.simulation` and the population-level checks in
:mod:`bmtselect.theory`.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import BmtError
from .metrics import MetricsReport, confusion, f1, fdr, fpr, mcc, tdr, tpr
from .penalized import adaptive_lasso_select, lasso_path, lasso_select_bic, lasso_select_cv
from .regression import Dataset, batch_conditional_t_stats, conditional_t_stat, ols_fit
from .selector import (
    SelectionConfig,
    SelectionResult,
    bmt_select,
    critical_value,
    ocmt_select,
    post_selection_estimate,
)

__all__ = [
    "BACKEND",
    "BmtError",
    "Dataset",
    "MetricsReport",
    "SelectionConfig",
    "SelectionResult",
    "adaptive_lasso_select",
    "batch_conditional_t_stats",
    "bmt_select",
    "conditional_t_stat",
    "confusion",
    "critical_value",
    "f1",
    "fdr",
    "fpr",
    "lasso_path",
    "lasso_select_bic",
    "lasso_select_cv",
    "mcc",
    "ocmt_select",
    "ols_fit",
    "post_selection_estimate",
    "tdr",
    "tpr",
]
