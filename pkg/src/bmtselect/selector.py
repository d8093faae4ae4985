"""Stagewise selection with a family-wise multiple-testing filter.

:func:`bmt_select` admits at most one candidate per stage: the one with the
largest absolute conditional t-ratio among those clearing the critical
value. :func:`ocmt_select` is the one-covariate-at-a-time baseline that
admits every candidate clearing the threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, RankDeficient
from .regression import Dataset, RegressionFit, batch_conditional_t_stats, ols_fit

log = logging.getLogger(__name__)

_STD_NORMAL = NormalDist()


def critical_value(p: float, n_active: int, delta: float, c: float = 1.0) -> float:
    """Per-test threshold ``Phi^-1(1 - p / (2 c n^delta))``.

    The upper-tail form ``-Phi^-1(p / (2 c n^delta))`` is evaluated so that
    large ``n`` does not lose the tail probability to rounding.
    """
    if not 0 < p < 1:
        raise InvalidArgument(f"p must lie in (0, 1), got {p}")
    if n_active < 1 or c <= 0 or delta < 0:
        raise InvalidArgument("need n_active >= 1, c > 0 and delta >= 0")
    tail = p / (2.0 * c * float(n_active) ** delta)
    if not 0 < tail < 1:
        raise InvalidArgument(f"quantile argument {1 - tail} outside (0, 1)")
    return -_STD_NORMAL.inv_cdf(tail)


@dataclass(frozen=True)
class SelectionConfig:
    p: float = 0.05
    c: float = 1.0
    delta: float = 1.0
    delta_star: Optional[float] = None
    max_stages: Optional[int] = None
    shrink_n_per_stage: bool = True
    robust_se: bool = False
    add_constant: bool = True

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidArgument("p must lie in (0, 1)")
        if self.c <= 0 or self.delta <= 0:
            raise InvalidArgument("c and delta must be positive")
        if self.delta_star is None:
            object.__setattr__(self, "delta_star", self.delta)
        if self.delta_star < self.delta:
            raise InvalidArgument("delta_star must be >= delta")
        if self.max_stages is not None and self.max_stages < 0:
            raise InvalidArgument("max_stages must be non-negative")

    @property
    def hc(self) -> Optional[str]:
        return "HC1" if self.robust_se else None

    def stage_cap(self, dataset: Dataset) -> int:
        cap = min(dataset.n, dataset.T - dataset.zeta - 2)
        if self.max_stages is not None:
            cap = min(cap, self.max_stages)
        return max(cap, 0)


@dataclass(frozen=True)
class StageRecord:
    stage: int
    active_set: tuple
    conditioning: tuple
    t_stats: np.ndarray = field(repr=False)
    threshold: float
    chosen: Optional[int]
    passed_count: int
    admitted: tuple = ()


@dataclass(frozen=True)
class SelectionResult:
    method: str
    selected: list
    trace: list = field(repr=False)
    post_fit: Optional[RegressionFit] = field(repr=False)
    coefficients_full: np.ndarray = field(repr=False)
    vcov_selected: Optional[np.ndarray] = field(repr=False)
    control_coefficients: np.ndarray = field(repr=False)
    sigma2_hat: float = float("nan")
    constant_added: bool = False
    rank_deficient: bool = False
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def n_stages(self) -> int:
        """Number of stages that admitted at least one variable."""
        return sum(1 for r in self.trace if r.admitted)

    @property
    def model_size(self) -> int:
        return len(self.selected)

    def predict(self, Z, X) -> np.ndarray:
        """Fitted values for new rows of controls ``Z`` and candidates ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rows = X.shape[0]
        Z = np.asarray(Z, dtype=float).reshape(rows, -1)
        if self.constant_added:
            Z = np.column_stack([np.ones(rows), Z])
        return Z @ self.control_coefficients + X @ self.coefficients_full


@dataclass(frozen=True)
class PostSelectionFit:
    coefficients_full: np.ndarray
    vcov_selected: np.ndarray
    sigma2_hat: float
    control_coefficients: np.ndarray
    fit: RegressionFit


def post_selection_estimate(
    dataset: Dataset, selected: Sequence[int], robust: bool | str = False
) -> PostSelectionFit:
    """OLS of ``y`` on ``[Z, X[:, selected]]``, scattered back to length ``n``.

    ``robust`` may be a bool (``True`` means HC1) or an HC kind string.
    """
    selected = list(selected)
    hc = "HC1" if robust is True else (robust or None)
    W = np.column_stack([dataset.Z, dataset.X[:, selected]])
    fit = ols_fit(dataset.y, W, robust=hc)
    zeta = dataset.zeta
    full = np.zeros(dataset.n)
    full[selected] = fit.coefficients[zeta:]
    vcov = fit.vcov[zeta:, zeta:]
    return PostSelectionFit(full, vcov, fit.sigma2_hat, fit.coefficients[:zeta], fit)


def _finish(method, dataset, selected, trace, robust, constant_added, extras=None):
    extras = {} if extras is None else extras
    try:
        if dataset.zeta + len(selected) >= dataset.T:
            raise RankDeficient("more regressors than observations")
        post = post_selection_estimate(dataset, selected, robust)
    except RankDeficient:
        # minimum-norm least squares keeps RMSE/forecasts defined when far
        # more variables were admitted than the sample supports
        log.info("%s: post-selection design rank deficient, using lstsq", method)
        W = np.column_stack([dataset.Z, dataset.X[:, selected]])
        coef, *_ = np.linalg.lstsq(W, dataset.y, rcond=None)
        full = np.zeros(dataset.n)
        full[selected] = coef[dataset.zeta:]
        return SelectionResult(
            method, list(selected), trace, None, full, None,
            coef[: dataset.zeta], float("nan"), constant_added, True, extras,
        )
    return SelectionResult(
        method, list(selected), trace, post.fit, post.coefficients_full,
        post.vcov_selected, post.control_coefficients, post.sigma2_hat,
        constant_added, False, extras,
    )


def _prepare(dataset: Dataset, config: SelectionConfig):
    if config.add_constant:
        ds = dataset.with_constant()
        return ds, ds is not dataset
    return dataset, False


def bmt_select(dataset: Dataset, config: SelectionConfig = SelectionConfig()) -> SelectionResult:
    """Boosting with multiple testing.

    Stage 1 conditions on ``Z`` only; every later stage conditions on ``Z``
    plus everything admitted so far. At each stage at most the single
    largest-``|t|`` candidate above the critical value is admitted (ties go
    to the lowest index). Stops when nothing passes, when the stage cap is
    reached, or when a candidate regression would have fewer than two
    residual degrees of freedom.
    """
    ds, added = _prepare(dataset, config)
    n, T = ds.n, ds.T
    cap = config.stage_cap(ds)
    selected: list[int] = []
    active = list(range(n))
    trace: list[StageRecord] = []
    stage = 0
    while active and len(selected) < cap:
        if T - (ds.zeta + len(selected) + 1) < 2:
            break
        stage += 1
        stats = batch_conditional_t_stats(ds, selected, active, robust=config.hc)
        n_eff = len(active) if config.shrink_n_per_stage else n
        delta = config.delta if stage == 1 else config.delta_star
        thr = critical_value(config.p, n_eff, delta, config.c)
        abs_t = np.abs(stats.t_stats)
        passed = abs_t > thr
        chosen = None
        if passed.any():
            # argmax returns the first maximiser, i.e. the lowest index
            chosen = int(stats.indices[int(np.argmax(abs_t))])
        trace.append(
            StageRecord(
                stage, tuple(active), tuple(selected), stats.t_stats, thr,
                chosen, int(passed.sum()), () if chosen is None else (chosen,),
            )
        )
        if chosen is None:
            break
        selected.append(chosen)
        active.remove(chosen)
    return _finish("BMT", ds, selected, trace, config.robust_se, added)


def ocmt_select(dataset: Dataset, config: SelectionConfig = SelectionConfig()) -> SelectionResult:
    """One-covariate-at-a-time multiple testing.

    Every stage admits all candidates whose conditional ``|t|`` exceeds the
    threshold; later stages condition on everything admitted before and use
    the ``delta_star`` exponent. The threshold always uses the full
    candidate count ``n``.
    """
    ds, added = _prepare(dataset, config)
    n, T = ds.n, ds.T
    cap = config.stage_cap(ds)
    selected: list[int] = []
    active = list(range(n))
    trace: list[StageRecord] = []
    stage = 0
    while active and stage < cap:
        if T - (ds.zeta + len(selected) + 1) < 2:
            break
        try:
            stats = batch_conditional_t_stats(ds, selected, active, robust=config.hc)
        except RankDeficient:
            log.info("OCMT: conditioning set became collinear at stage %d", stage + 1)
            break
        stage += 1
        delta = config.delta if stage == 1 else config.delta_star
        thr = critical_value(config.p, n, delta, config.c)
        passed = np.abs(stats.t_stats) > thr
        admitted = tuple(int(i) for i in stats.indices[passed])
        trace.append(
            StageRecord(
                stage, tuple(active), tuple(selected), stats.t_stats, thr,
                None, int(passed.sum()), admitted,
            )
        )
        if not admitted:
            break
        selected.extend(admitted)
        drop = set(admitted)
        active = [i for i in active if i not in drop]
    return _finish("OCMT", ds, selected, trace, config.robust_se, added)
