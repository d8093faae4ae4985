"""Empirical workflow: design construction, selection reports, direct forecasts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientRows, InvalidArgument
from .io import MethodReport, ReportBundle, RunConfig, provenance
from .metrics import r2_oos, rmsfe
from .penalized import adaptive_lasso_select, lasso_select_bic, lasso_select_cv
from .regression import Dataset, first_principal_component, standardize_columns
from .selector import SelectionConfig, SelectionResult, bmt_select, ocmt_select

METHODS = ("BMT", "OCMT", "LassoBIC", "LassoCV", "AdaptiveLasso")


@dataclass(frozen=True)
class DesignOptions:
    add_constant: bool = False
    add_trend: bool = False
    lag_target: int = 0
    lags_of_candidates: int = 0
    standardize: bool = False
    add_first_pc: bool = False

    def __post_init__(self):
        if self.lag_target < 0 or self.lags_of_candidates < 0:
            raise InvalidArgument("lag orders must be non-negative")


@dataclass(frozen=True)
class Design:
    """A model-ready dataset plus what is needed to undo standardization.

    ``x_means`` and ``x_scales`` are zeros and ones when the candidates were
    not standardized.
    """

    dataset: Dataset
    x_means: np.ndarray
    x_scales: np.ndarray
    dropped_rows: int

    def original_coefficients(self, result: SelectionResult):
        """``(control_coefficients, candidate_coefficients)`` on the raw scale.

        Centring is absorbed by the constant, which must be present in the
        fitted model whenever any candidate mean is nonzero.
        """
        b = result.coefficients_full / self.x_scales
        ctrl = np.array(result.control_coefficients, dtype=float)
        shift = float(b @ self.x_means)
        if shift != 0.0:
            if result.constant_added:
                ctrl[0] -= shift
            else:
                const = _constant_column(self.dataset.Z)
                if const is None:
                    raise InvalidArgument("back-transforming centred candidates needs a constant")
                ctrl[const] -= shift / self.dataset.Z[0, const]
        return ctrl, b


def _constant_column(Z) -> Optional[int]:
    for j in range(Z.shape[1]):
        col = Z[:, j]
        if np.all(col == col[0]) and col[0] != 0:
            return j
    return None


def build_design(dataset: Dataset, options: DesignOptions = DesignOptions()) -> Design:
    """Append derived columns and drop the rows consumed by lags.

    Controls gain, in order: constant, standardized trend, ``y`` lags, first
    principal component of the (final) candidate block. Candidates gain their
    own lags, named ``name_lagL``.
    """
    L = max(options.lag_target, options.lags_of_candidates)
    T0 = dataset.T
    T = T0 - L
    if T < 3:
        raise InsufficientRows(f"only {T} rows remain after lagging by {L}")
    rows = slice(L, T0)
    y = dataset.y[rows]
    Z = [dataset.Z[rows]]
    z_names = list(dataset.z_names)
    if options.add_constant and _constant_column(dataset.Z) is None:
        Z.append(np.ones((T, 1)))
        z_names.append("const")
    if options.add_trend:
        trend = np.arange(1.0, T + 1.0)
        Z.append(((trend - trend.mean()) / trend.std())[:, None])
        z_names.append("trend")
    for lag in range(1, options.lag_target + 1):
        Z.append(dataset.y[L - lag : T0 - lag, None])
        z_names.append(f"y_lag{lag}")
    X = [dataset.X[rows]]
    names = list(dataset.names)
    for lag in range(1, options.lags_of_candidates + 1):
        X.append(dataset.X[L - lag : T0 - lag])
        names.extend(f"{nm}_lag{lag}" for nm in dataset.names)
    X = np.column_stack(X)
    if options.standardize:
        X, means, scales = standardize_columns(X)
    else:
        means, scales = np.zeros(X.shape[1]), np.ones(X.shape[1])
    if options.add_first_pc:
        Z.append(first_principal_component(X)[:, None])
        z_names.append("pc1")
    Z = np.column_stack(Z) if Z else np.empty((T, 0))
    return Design(Dataset(y, Z, X, tuple(names), tuple(z_names)), means, scales, L)


def run_method(method: str, dataset: Dataset, config: SelectionConfig) -> SelectionResult:
    if method == "BMT":
        return bmt_select(dataset, config)
    if method == "OCMT":
        return ocmt_select(dataset, config)
    if method == "LassoBIC":
        return lasso_select_bic(dataset.y, dataset.Z, dataset.X, add_constant=config.add_constant)
    if method == "LassoCV":
        return lasso_select_cv(dataset.y, dataset.Z, dataset.X, add_constant=config.add_constant)
    if method == "AdaptiveLasso":
        return adaptive_lasso_select(
            dataset.y, dataset.Z, dataset.X, add_constant=config.add_constant
        )
    raise InvalidArgument(f"unknown method {method!r}; choose from {METHODS}")


def _control_names(dataset: Dataset, result: SelectionResult) -> list:
    return (["const"] if result.constant_added else []) + list(dataset.z_names)


def fit_summary(dataset: Dataset, result: SelectionResult) -> dict:
    """Named coefficients, standard errors and t-ratios plus in-sample RMSE and BIC."""
    names = _control_names(dataset, result) + [dataset.names[i] for i in result.selected]
    coefs = list(result.control_coefficients) + [
        float(result.coefficients_full[i]) for i in result.selected
    ]
    fit = result.post_fit
    se = list(fit.se) if fit is not None else [math.nan] * len(names)
    ts = list(fit.t_stats) if fit is not None else [math.nan] * len(names)
    resid = dataset.y - result.predict(dataset.Z, dataset.X)
    T = dataset.T
    rss = float(resid @ resid)
    df = len(names)
    bic = T * math.log(rss / T) + df * math.log(T) if rss > 0 else -math.inf
    return dict(
        selected=[dataset.names[i] for i in result.selected],
        coefficients=dict(zip(names, coefs)),
        std_errors=dict(zip(names, se)),
        t_stats=dict(zip(names, ts)),
        rmse_in_sample=math.sqrt(rss / T),
        bic=bic,
    )


def select_report(
    dataset: Dataset, methods: Sequence[str], config: SelectionConfig, run: RunConfig,
    seed: Optional[int] = None,
) -> ReportBundle:
    reports = {}
    for m in methods:
        res = run_method(m, dataset, config)
        reports[m] = MethodReport(method=m, **fit_summary(dataset, res))
    return ReportBundle(reports, dataset.T, provenance(run, seed))


def split_point(T: int, train_fraction: Optional[float] = None, train_length: Optional[int] = None) -> int:
    if (train_fraction is None) == (train_length is None):
        raise InvalidArgument("give exactly one of train_fraction and train_length")
    if train_length is None:
        if not 0 < train_fraction < 1:
            raise InvalidArgument("train_fraction must lie in (0, 1)")
        train_length = int(math.floor(train_fraction * T))
    if not 0 < train_length < T:
        raise InvalidArgument(f"training length {train_length} must lie in (0, {T})")
    return train_length


def _subset(ds: Dataset, rows, y) -> Dataset:
    return Dataset(y, ds.Z[rows], ds.X[rows], ds.names, ds.z_names)


def forecast_evaluate(
    dataset: Dataset,
    methods: Sequence[str],
    horizons: Sequence[int] = (1,),
    config: SelectionConfig = SelectionConfig(),
    train_fraction: Optional[float] = 0.8,
    train_length: Optional[int] = None,
    run: Optional[RunConfig] = None,
    seed: Optional[int] = None,
) -> ReportBundle:
    """Pseudo out-of-sample evaluation with direct ``h``-step forecasts.

    Row ``t`` of ``dataset`` holds the information used to predict ``y_t``
    (``h = 1``). For horizon ``h`` the model is refit with target
    ``y_{t+h-1}`` on row ``t``, using only targets inside the training
    window, and every evaluation-window target ``y_s`` is predicted from row
    ``s-h+1``. RMSFE covers the whole evaluation window; ``rmsfe_first_h``
    covers its first ``h`` targets. R^2_OOS is measured against the mean of
    the training-window targets.
    """
    if train_length is not None:
        train_fraction = None
    T = dataset.T
    T1 = split_point(T, train_fraction, train_length)
    if T1 <= dataset.zeta + 5:
        raise InsufficientRows(f"training window of {T1} rows is too short")
    run = run if run is not None else RunConfig("forecast", {})
    reports = {}
    fitted = {}
    for h in horizons:
        h = int(h)
        if h < 1 or T1 - (h - 1) <= dataset.zeta + 5:
            raise InvalidArgument(f"horizon {h} leaves too few training rows")
        train_rows = np.arange(0, T1 - h + 1)
        train = _subset(dataset, train_rows, dataset.y[train_rows + h - 1])
        eval_targets = np.arange(T1, T)
        src = eval_targets - h + 1
        actual = dataset.y[eval_targets]
        bench = float(train.y.mean())
        for m in methods:
            res = run_method(m, train, config)
            pred = res.predict(dataset.Z[src], dataset.X[src])
            rec = fitted.setdefault(m, {"rmsfe": {}, "first": {}, "r2": {}})
            rec["rmsfe"][str(h)] = rmsfe(actual, pred)
            rec["first"][str(h)] = rmsfe(actual[:h], pred[:h])
            rec["r2"][str(h)] = r2_oos(actual, pred, bench)
            if h == int(horizons[0]):
                rec["fit"] = fit_summary(train, res)
    for m in methods:
        rec = fitted[m]
        reports[m] = MethodReport(
            method=m, rmsfe=rec["rmsfe"], rmsfe_first_h=rec["first"], r2_oos=rec["r2"],
            **rec["fit"],
        )
    return ReportBundle(reports, T, provenance(run, seed))
