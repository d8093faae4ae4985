"""Selection and forecasting performance measures.

Confusion-based scores compare a selected index set with the true signal
set over ``n`` candidates. Ratio conventions for empty denominators:
MCC, F1, TDR and FDR return 0; TPR with an empty true set returns 1 and
warns. For the approximating-model variants, pass the union of signals and
pseudo-signals as ``true_set``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(selected: Iterable[int], true_set: Iterable[int], n: int) -> ConfusionCounts:
    """Counts for zero-based index sets drawn from ``range(n)``."""
    sel, tru = set(int(i) for i in selected), set(int(i) for i in true_set)
    for i in sel | tru:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} outside [0, {n})")
    tp = len(sel & tru)
    fp = len(sel - tru)
    fn = len(tru - sel)
    return ConfusionCounts(tp, fp, n - tp - fp - fn, fn)


def mcc(c: ConfusionCounts) -> float:
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def tdr(c: ConfusionCounts) -> float:
    k = c.tp + c.fp
    return c.tp / k if k else 0.0


def fdr(c: ConfusionCounts) -> float:
    k = c.tp + c.fp
    return c.fp / k if k else 0.0


def tpr(c: ConfusionCounts) -> float:
    k = c.tp + c.fn
    if k == 0:
        warnings.warn("TPR with an empty true set is defined as 1", RuntimeWarning)
        return 1.0
    return c.tp / k


def fpr(c: ConfusionCounts) -> float:
    k = c.fp + c.tn
    return c.fp / k if k else 0.0


def f1(c: ConfusionCounts) -> float:
    precision = tdr(c)
    k = c.tp + c.fn
    recall = c.tp / k if k else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def coef_rmse(beta_full_per_rep: Sequence, beta_true) -> float:
    """``sqrt(mean_j ||b_j - beta||^2)`` over replications."""
    beta_true = np.asarray(beta_true, dtype=float)
    reps = [np.asarray(b, dtype=float) for b in beta_full_per_rep]
    if not reps:
        raise DimensionMismatch("need at least one replication")
    for b in reps:
        if b.shape != beta_true.shape:
            raise DimensionMismatch("coefficient vectors must all have length n")
    sq = [float(np.sum((b - beta_true) ** 2)) for b in reps]
    return math.sqrt(math.fsum(sq) / len(sq))


def rmsfe(actuals, predictions, reps: Optional[Sequence[int]] = None) -> float:
    """Root mean squared forecast error.

    ``reps`` labels the replication of each forecast. Errors are first
    averaged within a replication (over its ``S`` forecast periods) and
    then across replications. Without labels every forecast is its own
    replication.
    """
    a = np.asarray(actuals, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if a.shape != p.shape:
        raise DimensionMismatch("actuals and predictions differ in length")
    e2 = (a - p) ** 2
    if reps is None:
        return math.sqrt(math.fsum(e2) / e2.size)
    labels = np.asarray(reps).ravel()
    if labels.shape != a.shape:
        raise DimensionMismatch("one replication label per forecast is required")
    per_rep = [math.fsum(e2[labels == r]) / np.sum(labels == r) for r in np.unique(labels)]
    return math.sqrt(math.fsum(per_rep) / len(per_rep))


def r2_oos(actuals, predictions, benchmark_mean: float) -> float:
    """``1 - MSE(predictions) / MSE(benchmark_mean)``; may be negative."""
    a = np.asarray(actuals, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if a.shape != p.shape:
        raise DimensionMismatch("actuals and predictions differ in length")
    mse_model = math.fsum((a - p) ** 2)
    mse_bench = math.fsum((a - benchmark_mean) ** 2)
    return 1.0 - mse_model / mse_bench


@dataclass(frozen=True)
class ReplicationOutcome:
    """One method's result on one simulated draw.

    Squared errors are kept raw so that aggregation can take the root of
    the mean rather than the mean of roots.
    """

    counts: ConfusionCounts
    model_size: int
    coef_sq_error: float
    forecast_sq_error: float


@dataclass(frozen=True)
class MetricsReport:
    mcc: float
    f1: float
    tdr: float
    fdr: float
    tpr: float
    fpr: float
    model_size: float
    rmse: float
    rmsfe: float
    r2_oos: Optional[float] = None
    reps: int = 1

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(outcomes: Sequence[ReplicationOutcome]) -> MetricsReport:
    """Average classification scores; RMSE and RMSFE as roots of mean squares.

    The summation order follows ``outcomes`` and uses ``math.fsum``, so the
    result does not depend on how the outcomes were computed.
    """
    if not outcomes:
        raise DimensionMismatch("no outcomes to summarize")
    r = len(outcomes)

    def mean(f):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return math.fsum(f(o.counts) for o in outcomes) / r

    return MetricsReport(
        mcc=mean(mcc),
        f1=mean(f1),
        tdr=mean(tdr),
        fdr=mean(fdr),
        tpr=mean(tpr),
        fpr=mean(fpr),
        model_size=math.fsum(o.model_size for o in outcomes) / r,
        rmse=math.sqrt(math.fsum(o.coef_sq_error for o in outcomes) / r),
        rmsfe=math.sqrt(math.fsum(o.forecast_sq_error for o in outcomes) / r),
        reps=r,
    )
