"""Lasso baselines: coordinate-descent path, BIC / K-fold CV choice, adaptive Lasso.

The objective at each penalty is ``(1/2T) ||y - a - X b||^2 + lam ||b||_1``
on internally standardized columns. Mandatory controls are never
penalized; they are partialled out of the response and of every candidate
before the path is computed, and the reported coefficients are
post-selection OLS on ``[Z, X_selected]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgument, NonFiniteInput
from .regression import Dataset, partial_out
from .selector import SelectionResult, _finish

TOL = 1e-8
MAX_SWEEPS = 100_000
DEV_RATIO_STOP = 0.999


@dataclass(frozen=True)
class LassoPath:
    lambdas: np.ndarray
    coefficients: np.ndarray  # (n_lambda, n), original column scale
    intercepts: np.ndarray
    active_counts: np.ndarray
    means: np.ndarray
    scales: np.ndarray
    y_mean: float
    std_coefficients: np.ndarray = field(repr=False)
    sweeps: np.ndarray = field(repr=False)

    def predict(self, X) -> np.ndarray:
        """Fitted values at every path point, shape ``(n_lambda, rows)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.intercepts[:, None] + self.coefficients @ X.T

    def active_set(self, i: int) -> list:
        return [int(j) for j in np.flatnonzero(self.coefficients[i])]


def _prepare(y, X, standardize):
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise InvalidArgument("X must be (T, n) with T = len(y)")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise NonFiniteInput("lasso input contains NaN or infinite values")
    if y.shape[0] < 3:
        raise InvalidArgument("need at least three observations")
    means = X.mean(axis=0)
    Xc = X - means
    if standardize:
        scales = np.sqrt((Xc ** 2).mean(axis=0))
        # constant columns stay identically zero and are never selected
        scales[scales == 0] = 1.0
    else:
        scales = np.ones(X.shape[1])
    y_mean = float(y.mean())
    return y - y_mean, Xc / scales, means, scales, y_mean


def lambda_grid(lam_max: float, n_lambda: int = 100, lambda_min_ratio: float = 1e-3):
    """Log-spaced decreasing grid from ``lam_max`` to ``ratio * lam_max``."""
    if n_lambda < 1 or not 0 < lambda_min_ratio < 1:
        raise InvalidArgument("need n_lambda >= 1 and 0 < lambda_min_ratio < 1")
    if n_lambda == 1:
        return np.array([lam_max])
    return lam_max * np.logspace(0.0, np.log10(lambda_min_ratio), n_lambda)


def lasso_path(
    y,
    X,
    n_lambda: int = 100,
    lambda_min_ratio: float = 1e-3,
    lambdas=None,
    standardize: bool = True,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
    warm_start: bool = True,
    early_stop: bool = True,
) -> LassoPath:
    """Warm-started coordinate-descent Lasso path.

    ``lambdas`` overrides the default grid (it must be strictly decreasing).
    With ``early_stop`` the path ends once the fit explains more than
    ``DEV_RATIO_STOP`` of the centred response variation or the active set
    reaches ``T - 1``; later penalties would only trace the saturated,
    non-unique end of the path. The returned arrays then cover a prefix of
    the grid.
    """
    yc, Xs, means, scales, y_mean = _prepare(y, X, standardize)
    T, n = Xs.shape
    G = np.ascontiguousarray(Xs.T @ Xs / T)
    c = Xs.T @ yc / T
    if lambdas is None:
        lam_max = float(np.abs(c).max()) if n else 0.0
        lambdas = lambda_grid(lam_max, n_lambda, lambda_min_ratio)
    else:
        lambdas = np.asarray(lambdas, dtype=float).ravel()
        if lambdas.size > 1 and np.any(np.diff(lambdas) >= 0):
            raise InvalidArgument("lambdas must be strictly decreasing")
    K = lambdas.size
    B = np.zeros((K, n))
    sweeps = np.zeros(K, dtype=np.int64)
    beta = np.zeros(n)
    grad = c.copy()
    yy = float(yc @ yc) / T
    fitted = K
    for i, lam in enumerate(lambdas):
        if not warm_start:
            beta = np.zeros(n)
            grad = c.copy()
        sweeps[i], _ = _kernels.cd_gram(G, beta, grad, float(lam), tol, max_sweeps)
        B[i] = beta
        if early_stop and yy > 0:
            # RSS/T = y'y/T - b'c - b'(c - Gb)
            rss = yy - float(beta @ c) - float(beta @ grad)
            if 1.0 - rss / yy > DEV_RATIO_STOP or np.count_nonzero(beta) >= T - 1:
                fitted = i + 1
                break
    lambdas, B, sweeps = lambdas[:fitted], B[:fitted], sweeps[:fitted]
    coefs = B / scales
    intercepts = y_mean - coefs @ means
    active = np.count_nonzero(B, axis=1)
    return LassoPath(lambdas, coefs, intercepts, active, means, scales, y_mean, B, sweeps)


def kkt_violation(y, X, path: LassoPath, i: int) -> float:
    """Largest KKT violation of path point ``i``, from explicit residuals."""
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    Xs = (X - path.means) / path.scales
    b = path.std_coefficients[i]
    r = (y - path.y_mean) - Xs @ b
    g = Xs.T @ r / y.shape[0]
    lam = path.lambdas[i]
    live = np.sum(Xs ** 2, axis=0) > 0
    active = b != 0
    viol = np.where(active, np.abs(g - lam * np.sign(b)), np.maximum(np.abs(g) - lam, 0.0))
    viol = viol[live]
    return float(viol.max()) if viol.size else 0.0


def bic_curve(y, X, path: LassoPath) -> np.ndarray:
    """``T ln(RSS/T) + df ln T`` at every path point (df = active count)."""
    y = np.asarray(y, dtype=float).ravel()
    T = y.shape[0]
    resid = y[None, :] - path.predict(X)
    rss = np.maximum(np.einsum("ij,ij->i", resid, resid), np.finfo(float).tiny)
    return T * np.log(rss / T) + path.active_counts * np.log(T)


def _partialled(y, Z, X, add_constant):
    """Dataset with controls, whether a constant was added, and the residualized y and X."""
    y = np.asarray(y, dtype=float).ravel()
    T = y.shape[0]
    Z = np.asarray(Z if Z is not None else np.empty((T, 0)), dtype=float).reshape(T, -1)
    base = Dataset(y, Z, X)
    ds = base.with_constant() if add_constant else base
    return ds, ds is not base, partial_out(ds.y, ds.Z), partial_out(ds.X, ds.Z)


def _bic_choice(ds, y_t, X_t, path, extras, method, added):
    bic = bic_curve(y_t, X_t, path)
    # post-selection OLS must stay estimable
    feasible = path.active_counts <= ds.T - ds.zeta - 2
    bic = np.where(feasible, bic, np.inf)
    best = int(np.argmin(bic))
    extras.update(path=path, criterion=bic, best_index=best)
    return _finish(method, ds, path.active_set(best), [], False, added, extras)


def lasso_select_bic(
    y, Z, X, add_constant: bool = True, n_lambda: int = 100,
    lambda_min_ratio: float = 1e-3,
) -> SelectionResult:
    """Lasso with the penalty chosen by BIC, reported as post-selection OLS."""
    ds, added, y_t, X_t = _partialled(y, Z, X, add_constant)
    path = lasso_path(y_t, X_t, n_lambda, lambda_min_ratio)
    return _bic_choice(ds, y_t, X_t, path, {}, "LassoBIC", added)


def fold_ids(T: int, folds: int, shuffle: bool = False, seed: int = 0) -> np.ndarray:
    """Fold label per row: contiguous blocks, or a seeded shuffle of them."""
    if not 2 <= folds <= T:
        raise InvalidArgument(f"need 2 <= folds <= T, got folds={folds}, T={T}")
    ids = np.repeat(np.arange(folds), np.diff(np.linspace(0, T, folds + 1).round().astype(int)))
    if shuffle:
        ids = np.random.default_rng(seed).permutation(ids)
    return ids


def cv_curve(y, X, lambdas, folds: int, shuffle: bool = False, seed: int = 0) -> np.ndarray:
    """Pooled out-of-fold mean squared error at each penalty in ``lambdas``."""
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    ids = fold_ids(y.shape[0], folds, shuffle, seed)
    sse = np.zeros(len(lambdas))
    for f in range(folds):
        test = ids == f
        fit = lasso_path(y[~test], X[~test], lambdas=lambdas)
        pred = fit.predict(X[test])
        if pred.shape[0] < len(lambdas):
            # fold path stopped early: hold its last fit for smaller penalties
            pad = np.repeat(pred[-1:], len(lambdas) - pred.shape[0], axis=0)
            pred = np.vstack([pred, pad])
        err = y[test][None, :] - pred
        sse += np.einsum("ij,ij->i", err, err)
    return sse / y.shape[0]


def lasso_select_cv(
    y, Z, X, folds: int = 10, add_constant: bool = True, n_lambda: int = 100,
    lambda_min_ratio: float = 1e-3, shuffle: bool = False, seed: int = 0,
) -> SelectionResult:
    """Lasso with the penalty minimising K-fold CV error.

    Folds are contiguous time blocks unless ``shuffle`` is set. With time
    series, contiguous blocks still leak information across fold edges.
    """
    ds, added, y_t, X_t = _partialled(y, Z, X, add_constant)
    path = lasso_path(y_t, X_t, n_lambda, lambda_min_ratio)
    curve = cv_curve(y_t, X_t, path.lambdas, folds, shuffle, seed)
    best = int(np.argmin(curve))
    extras = dict(path=path, criterion=curve, best_index=best)
    return _finish("LassoCV", ds, path.active_set(best), [], False, added, extras)


def ridge_coefficients(y, X, penalty: float) -> np.ndarray:
    """Ridge solution ``(G + penalty I)^-1 c`` on standardized columns."""
    yc, Xs, _, _, _ = _prepare(y, X, True)
    T, n = Xs.shape
    G = Xs.T @ Xs / T
    c = Xs.T @ yc / T
    return np.linalg.solve(G + penalty * np.eye(n), c)


def adaptive_lasso_select(
    y, Z, X, add_constant: bool = True, n_lambda: int = 100,
    lambda_min_ratio: float = 1e-3, ridge_ratio: float = 1e-3,
    gamma: float = 1.0, init_coefficients=None,
) -> SelectionResult:
    """Adaptive Lasso with ridge-initialised weights and BIC choice.

    Weights are ``1 / |b_init|^gamma`` on the standardized scale, applied by
    rescaling columns. A zero initial coefficient removes the column.
    ``init_coefficients`` (standardized scale) overrides the ridge start.
    """
    ds, added, y_t, X_t = _partialled(y, Z, X, add_constant)
    yc, Xs, _, _, _ = _prepare(y_t, X_t, True)
    if init_coefficients is None:
        lam_max = float(np.abs(Xs.T @ yc).max()) / Xs.shape[0]
        init = ridge_coefficients(y_t, X_t, ridge_ratio * lam_max)
    else:
        init = np.asarray(init_coefficients, dtype=float).ravel()
        if init.shape[0] != Xs.shape[1]:
            raise InvalidArgument("init_coefficients must have one entry per candidate")
    col_scale = np.abs(init) ** gamma
    path = lasso_path(yc, Xs * col_scale, n_lambda, lambda_min_ratio, standardize=False)
    return _bic_choice(
        ds, yc, Xs * col_scale, path, {"weights": col_scale}, "AdaptiveLasso", added
    )
