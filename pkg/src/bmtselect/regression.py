"""Dense least-squares machinery.

Everything in here works on plain ``numpy`` arrays. The selection
procedures only ever need t-ratios of one candidate at a time conditional
on a (small) set of already-included columns, so the central routine is
:func:`batch_conditional_t_stats`, which partials the conditioning set out
of the response and of all candidates once and then evaluates every
candidate's t-ratio in a vectorised pass (Frisch-Waugh-Lovell).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    DegenerateRegressor,
    DimensionMismatch,
    InsufficientColumns,
    InvalidArgument,
    NonFiniteInput,
    RankDeficient,
)

RANK_RTOL = 1e-10
DEGENERATE_RTOL = 1e-12
EXHAUSTED_RTOL = 1e-12
T_CAP = 1e12


def _as_matrix(a, T=None, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional")
    if T is not None and a.shape[0] != T:
        if a.size == 0:
            return np.empty((T, 0))
        raise DimensionMismatch(f"{name} has {a.shape[0]} rows, expected {T}")
    return a


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteInput("input contains NaN or infinite values")


@dataclass(frozen=True)
class Dataset:
    """Response, mandatory controls and candidate regressors.

    ``Z`` may have zero columns. ``names`` labels the columns of ``X``;
    ``z_names`` labels the columns of ``Z``.
    """

    y: np.ndarray
    Z: np.ndarray
    X: np.ndarray
    names: tuple = ()
    z_names: tuple = ()

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        T = y.shape[0]
        Z = _as_matrix(self.Z if self.Z is not None else np.empty((T, 0)), T, "Z")
        X = _as_matrix(self.X, T, "X")
        _check_finite(y, Z, X)
        if T <= Z.shape[1] + 1:
            raise DimensionMismatch(
                f"need T > zeta + 1, got T={T}, zeta={Z.shape[1]}"
            )
        names = tuple(self.names) or tuple(f"x{i + 1}" for i in range(X.shape[1]))
        z_names = tuple(self.z_names) or tuple(f"z{i + 1}" for i in range(Z.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionMismatch("names must label every column of X")
        if len(z_names) != Z.shape[1]:
            raise DimensionMismatch("z_names must label every column of Z")
        for a in (y, Z, X):
            a.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "z_names", z_names)

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def zeta(self) -> int:
        return self.Z.shape[1]

    def with_constant(self) -> "Dataset":
        """Return a copy whose ``Z`` starts with a column of ones.

        A no-op when ``Z`` already holds a constant column.
        """
        for j in range(self.zeta):
            col = self.Z[:, j]
            if np.all(col == col[0]) and col[0] != 0:
                return self
        Z = np.column_stack([np.ones(self.T), self.Z])
        return Dataset(self.y, Z, self.X, self.names, ("const",) + self.z_names)


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    sigma2_hat: float
    se: np.ndarray
    t_stats: np.ndarray
    df: int
    vcov: np.ndarray = field(repr=False)
    perfect_fit: np.ndarray = field(repr=False, default=None)

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)


def _safe_t(b, se):
    """t-ratios with the perfect-fit sentinel: ``|t|`` capped at ``T_CAP``."""
    b = np.asarray(b, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, b / np.where(se > 0, se, 1.0), np.sign(b) * np.inf)
    perfect = ~(np.abs(t) < T_CAP)
    t = np.where(perfect, np.sign(b) * T_CAP, t)
    t = np.where(np.isnan(t), 0.0, t)
    return t, perfect & (b != 0)


def check_rank(W: np.ndarray) -> None:
    """Raise :class:`RankDeficient` if ``W`` is numerically collinear."""
    if W.shape[1] == 0:
        return
    sv = np.linalg.svd(W, compute_uv=False)
    if sv[0] == 0 or sv[-1] < RANK_RTOL * sv[0]:
        raise RankDeficient(
            f"design is rank deficient (singular value ratio "
            f"{sv[-1] / sv[0] if sv[0] else 0.0:.3e})"
        )


def orthonormal_basis(Q) -> np.ndarray:
    """Orthonormal basis of the column space of a full-rank ``Q``."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[1] == 0:
        return np.empty((Q.shape[0], 0))
    check_rank(Q)
    basis, _ = np.linalg.qr(Q)
    return basis


def _hc_vcov(W, resid, bread, kind):
    meat = (W * resid[:, None] ** 2).T @ W
    v = bread @ meat @ bread
    T, m = W.shape
    if kind == "HC1":
        v *= T / (T - m)
    elif kind != "HC0":
        raise InvalidArgument(f"unknown robust covariance kind {kind!r}")
    return v


def ols_fit(y, W, robust: str | None = None) -> RegressionFit:
    """Least squares of ``y`` on the columns of ``W`` via Householder QR.

    Parameters
    ----------
    y : array_like, shape (T,)
    W : array_like, shape (T, m)
        Must have full column rank; no constant is added.
    robust : {None, "HC0", "HC1"}
        Covariance estimator. ``None`` gives ``sigma2_hat * (W'W)^-1``.
    """
    y = np.asarray(y, dtype=float).ravel()
    T = y.shape[0]
    W = _as_matrix(W, None, "W")
    if W.shape[0] != T:
        raise DimensionMismatch(f"W has {W.shape[0]} rows, y has {T}")
    _check_finite(y, W)
    m = W.shape[1]
    if T <= m:
        raise DimensionMismatch(f"need T > m, got T={T}, m={m}")
    if m == 0:
        e = y.copy()
        return RegressionFit(
            np.empty(0), e, float(e @ e) / T, np.empty(0), np.empty(0), T,
            np.empty((0, 0)), np.empty(0, dtype=bool),
        )
    check_rank(W)
    Qm, R = np.linalg.qr(W)
    coef = solve_triangular(R, Qm.T @ y)
    resid = y - W @ coef
    df = T - m
    sigma2 = float(resid @ resid) / df
    Rinv = solve_triangular(R, np.eye(m))
    bread = Rinv @ Rinv.T
    vcov = sigma2 * bread if robust is None else _hc_vcov(W, resid, bread, robust)
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    t, perfect = _safe_t(coef, se)
    return RegressionFit(coef, resid, sigma2, se, t, df, vcov, perfect)


def partial_out(target, Q):
    """Residuals of ``target`` (vector or matrix) after projecting on ``Q``."""
    target = np.asarray(target, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if Q.size == 0:
        return target.copy()
    if Q.ndim == 1:
        Q = Q[:, None]
    if Q.shape[0] != target.shape[0]:
        raise DimensionMismatch("target and Q must have the same number of rows")
    basis = orthonormal_basis(Q)
    return target - basis @ (basis.T @ target)


def _fwl_t_stats(y_res, X_res, x_ref_ss, y_ref_ss, df, robust):
    """Vectorised t-ratios of ``y_res`` on each residualised column.

    Returns ``(t, degenerate, perfect)``. Candidates whose residual sum of
    squares falls below ``DEGENERATE_RTOL`` times their own raw sum of
    squares are degenerate and get ``t = 0``.
    """
    xx = np.einsum("ij,ij->j", X_res, X_res)
    degenerate = xx <= DEGENERATE_RTOL * x_ref_ss
    if float(y_res @ y_res) <= (EXHAUSTED_RTOL ** 2) * y_ref_ss:
        # response already explained exactly; nothing left to test
        zeros = np.zeros(X_res.shape[1])
        return zeros, degenerate, np.zeros(X_res.shape[1], dtype=bool)
    safe_xx = np.where(degenerate, 1.0, xx)
    b = (X_res.T @ y_res) / safe_xx
    E = y_res[:, None] - X_res * b
    if robust is None:
        rss = np.einsum("ij,ij->j", E, E)
        var_b = rss / df / safe_xx
    else:
        T = y_res.shape[0]
        meat = np.einsum("ij,ij->j", X_res ** 2, E ** 2)
        var_b = meat / safe_xx ** 2
        if robust == "HC1":
            var_b *= T / df
        elif robust != "HC0":
            raise InvalidArgument(f"unknown robust covariance kind {robust!r}")
    t, perfect = _safe_t(b, np.sqrt(var_b))
    t[degenerate] = 0.0
    perfect &= ~degenerate
    return t, degenerate, perfect


def conditional_t_stat(y, Q, x, robust: str | None = None) -> float:
    """t-ratio on ``x`` in the regression of ``y`` on ``(Q, x)``.

    Computed through partialling out: both ``y`` and ``x`` are residualised
    on ``Q`` and the slope is tested with ``T - q - 1`` degrees of freedom.

    Raises
    ------
    DegenerateRegressor
        If ``x`` is (numerically) in the column span of ``Q``.
    """
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    T = y.shape[0]
    Q = _as_matrix(Q if np.size(Q) else np.empty((T, 0)), T, "Q")
    if x.shape[0] != T:
        raise DimensionMismatch("x and y lengths differ")
    df = T - Q.shape[1] - 1
    if df < 1:
        raise DimensionMismatch("no residual degrees of freedom")
    basis = orthonormal_basis(Q)
    y_res = y - basis @ (basis.T @ y)
    x_res = x - basis @ (basis.T @ x)
    t, degenerate, _ = _fwl_t_stats(
        y_res, x_res[:, None], np.array([x @ x]), y @ y, df, robust
    )
    if degenerate[0]:
        raise DegenerateRegressor("candidate has no variation after partialling out")
    return float(t[0])


class CandidateTStats(NamedTuple):
    indices: np.ndarray
    t_stats: np.ndarray
    degenerate: np.ndarray
    perfect_fit: np.ndarray
    df: int


def batch_conditional_t_stats(
    dataset: Dataset,
    Q_indices: Sequence[int],
    active: Sequence[int],
    robust: str | None = None,
) -> CandidateTStats:
    """t-ratio of every active candidate conditional on ``[Z, X[:, Q_indices]]``.

    The conditioning projector and the residualised response are built once
    and shared by all candidates.
    """
    active = np.asarray(active, dtype=np.intp).ravel()
    Q_indices = np.asarray(Q_indices, dtype=np.intp).ravel()
    if np.intersect1d(active, Q_indices).size:
        raise InvalidArgument("active set overlaps the conditioning set")
    Q = np.column_stack([dataset.Z, dataset.X[:, Q_indices]])
    df = dataset.T - Q.shape[1] - 1
    if active.size == 0:
        empty = np.empty(0)
        return CandidateTStats(active, empty, empty.astype(bool), empty.astype(bool), df)
    if df < 1:
        raise DimensionMismatch("no residual degrees of freedom")
    basis = orthonormal_basis(Q)
    y = dataset.y
    XA = dataset.X[:, active]
    if basis.shape[1]:
        y_res = y - basis @ (basis.T @ y)
        X_res = XA - basis @ (basis.T @ XA)
    else:
        y_res, X_res = y, XA
    x_ref = np.einsum("ij,ij->j", XA, XA)
    t, degenerate, perfect = _fwl_t_stats(y_res, X_res, x_ref, y @ y, df, robust)
    return CandidateTStats(active, t, degenerate, perfect, df)


def standardize_columns(X, ddof: int = 0):
    """Centre and scale columns; returns ``(Xs, means, scales)``."""
    X = _as_matrix(X, None, "X")
    means = X.mean(axis=0)
    scales = X.std(axis=0, ddof=ddof)
    if np.any(scales == 0):
        raise InvalidArgument("cannot standardize a constant column")
    return (X - means) / scales, means, scales


def power_iteration(C, tol: float = 1e-10, max_iter: int = 10_000, start=None):
    """Leading eigenpair of a symmetric positive semi-definite matrix.

    Starts from the vector of ones. If that start is (numerically)
    orthogonal to the dominant eigenspace, it restarts from ``(1, 2, ..., p)``.
    Returns ``(eigenvalue, unit_vector, iterations)``.
    """
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    starts = [np.ones(p), np.arange(1.0, p + 1.0)] if start is None else [start]
    scale = np.abs(C).max() or 1.0
    for v in starts:
        v = v / np.linalg.norm(v)
        w = C @ v
        if np.linalg.norm(w) > 1e-12 * scale:
            break
    else:
        return 0.0, starts[0] / np.linalg.norm(starts[0]), 0
    it = 0
    for it in range(1, max_iter + 1):
        w = C @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        w /= norm
        # sign-insensitive change guards against oscillation in sign
        if w @ v < 0:
            w = -w
        delta = np.linalg.norm(w - v)
        v = w
        if delta < tol:
            break
    return float(v @ C @ v), v, it


def first_principal_component(X) -> np.ndarray:
    """Score vector of the leading principal component of ``X``.

    Columns are standardized internally; the returned score has unit
    (1/T) variance and its sign makes the largest-magnitude loading positive.
    """
    X = _as_matrix(X, None, "X")
    if X.shape[1] < 2:
        raise InsufficientColumns("need at least two columns for a principal component")
    _check_finite(X)
    Xs, _, _ = standardize_columns(X)
    C = Xs.T @ Xs / Xs.shape[0]
    _, v, _ = power_iteration(C)
    lead = int(np.argmax(np.abs(v) - 1e-12 * np.arange(v.size)))
    if v[lead] < 0:
        v = -v
    score = Xs @ v
    return score / score.std()
