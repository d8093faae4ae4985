"""Monte Carlo laboratory for the factor-driven selection experiments.

Candidates come in three groups of indices (zero-based here):

* signals ``0..k-1`` and pseudo-signals ``k..2k-1`` load on a local factor
  ``g`` and a global factor ``f``;
* noise variables ``2k..n-1`` load on ``f`` only and share consecutive
  idiosyncratic shocks with their left neighbour.

All latent series are unit-variance AR(1) processes. The response is an
AR(1) in ``y`` plus the signal sum plus calibrated Gaussian noise.

Replications draw from independent ``numpy`` streams keyed on
``(seed, design index, replication index)``, so grid results do not depend
on the number of worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidArgument
from .metrics import MetricsReport, ReplicationOutcome, confusion, summarize
from .penalized import adaptive_lasso_select, lasso_select_bic, lasso_select_cv
from .regression import Dataset
from .selector import SelectionConfig, SelectionResult, bmt_select, ocmt_select

METHODS = ("BMT", "OCMT", "LassoBIC", "LassoCV", "AdaptiveLasso")


@dataclass(frozen=True)
class DgpConfig:
    T: int
    n: int
    k: int
    alpha: float = 0.8
    r2_target: float = 0.7
    rho: float = 0.6
    vif: float = 1.0
    pi: float = 0.5
    beta: Optional[tuple] = None
    burn_in: int = 200
    holdout: int = 1
    seed: int = 0

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta) if self.beta is not None else (1.0,) * self.k
        object.__setattr__(self, "beta", beta)
        if self.k < 1 or len(beta) != self.k:
            raise InvalidArgument("need k >= 1 and one coefficient per signal")
        if self.n < 2 * self.k + 1:
            raise InvalidArgument(f"need n >= 2k + 1, got n={self.n}, k={self.k}")
        if self.vif < 1 or not 0 <= self.pi <= 1:
            raise InvalidArgument("need vif >= 1 and pi in [0, 1]")
        if not 0 < self.r2_target < 1:
            raise InvalidArgument("r2_target must lie in (0, 1)")
        if abs(self.rho) >= 1 or abs(self.alpha) >= 1:
            raise InvalidArgument("rho and alpha must be below one in magnitude")
        if self.T < 3 or self.burn_in < 0 or self.holdout < 0:
            raise InvalidArgument("invalid sample sizes")
        values = (self.alpha, self.r2_target, self.rho, self.vif, self.pi) + beta
        if not all(math.isfinite(v) for v in values):
            raise InvalidArgument("configuration values must be finite")


@dataclass(frozen=True)
class DgpDerived:
    gamma: float
    nu_f: float
    nu_g: float
    varsigma: float
    B: float
    b_s: float
    D: float


def derive_loadings(vif: float, k: int, pi: float):
    """Factor loadings ``(nu_f, nu_g, gamma)`` giving the requested VIF."""
    if vif < 1 or k < 1 or not 0 <= pi <= 1:
        raise InvalidArgument("need vif >= 1, k >= 1 and pi in [0, 1]")
    gamma = (vif - 1.0) / k
    return math.sqrt(pi * gamma), math.sqrt((1.0 - pi) * gamma), gamma


def signal_variance(beta, gamma: float) -> float:
    """Population variance of ``sum_i beta_i x_it`` over the signal block.

    Each signal is ``(e_i + common) / sqrt(1 + gamma)`` with ``var(common) =
    gamma``, so the variance is ``(||beta||^2 + gamma (sum beta)^2) / (1 + gamma)``.
    """
    beta = np.asarray(beta, dtype=float)
    B = float(beta @ beta)
    b_s = float(beta.sum())
    return (B + gamma * b_s ** 2) / (1.0 + gamma)


def derive_noise_scale(r2_target: float, beta, gamma: float) -> float:
    """Noise scale giving the target R^2 of the signal part."""
    if not 0 < r2_target < 1:
        raise InvalidArgument("r2_target must lie in (0, 1)")
    D = signal_variance(beta, gamma)
    return math.sqrt(D * (1.0 - r2_target) / r2_target)


def derive(config: DgpConfig) -> DgpDerived:
    nu_f, nu_g, gamma = derive_loadings(config.vif, config.k, config.pi)
    beta = np.asarray(config.beta)
    return DgpDerived(
        gamma, nu_f, nu_g,
        derive_noise_scale(config.r2_target, beta, gamma),
        float(beta @ beta), float(beta.sum()), signal_variance(beta, gamma),
    )


def generate_ar1_matrix(T_total: int, m: int, rho: float, rng) -> np.ndarray:
    """``m`` independent stationary unit-variance AR(1) columns."""
    if abs(rho) >= 1:
        raise InvalidArgument("need |rho| < 1")
    x0 = rng.standard_normal(m)
    shocks = rng.standard_normal((T_total - 1, m))
    out = np.empty((T_total, m))
    out[0] = x0
    if T_total > 1:
        out[1:], _ = lfilter(
            [math.sqrt(1.0 - rho ** 2)], [1.0, -rho], shocks, axis=0, zi=(rho * x0)[None, :]
        )
    return out


def generate_ar1(T_total: int, rho: float, rng) -> np.ndarray:
    """Stationary AR(1) with unit variance, started from a standard normal draw."""
    return generate_ar1_matrix(T_total, 1, rho, rng)[:, 0]


@dataclass(frozen=True)
class DgpRealization:
    dataset: Dataset
    y_holdout: np.ndarray
    Z_holdout: np.ndarray
    X_holdout: np.ndarray
    signal_set: tuple
    pseudo_set: tuple
    noise_set: tuple
    beta_true_full: np.ndarray
    derived: DgpDerived = field(repr=False)


def candidate_matrix(config: DgpConfig, derived: DgpDerived, P: int, rng) -> np.ndarray:
    f = generate_ar1(P, config.rho, rng)
    g = generate_ar1(P, config.rho, rng)
    eps = generate_ar1_matrix(P, config.n, config.rho, rng)
    k2 = 2 * config.k
    X = np.empty((P, config.n))
    common = derived.nu_g * g + derived.nu_f * f
    X[:, :k2] = (eps[:, :k2] + common[:, None]) / math.sqrt(1.0 + derived.gamma)
    X[:, k2:] = (eps[:, k2 - 1:-1] + eps[:, k2:] + derived.nu_f * f[:, None]) / math.sqrt(
        2.0 + derived.nu_f ** 2
    )
    return X


def generate_dgp(config: DgpConfig, rng=None) -> DgpRealization:
    """One draw of ``T`` estimation rows plus ``holdout`` forecast rows.

    ``Z`` holds ``y_{t-1}``; the first ``burn_in`` periods (after ``y_0 = 0``)
    are discarded.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    d = derive(config)
    P = config.burn_in + config.T + config.holdout + 1
    X = candidate_matrix(config, d, P, rng)
    u = rng.standard_normal(P)
    s = X[:, : config.k] @ np.asarray(config.beta) + d.varsigma * u
    s[0] = 0.0
    y = lfilter([1.0], [1.0, -config.alpha], s)
    start = config.burn_in + 1
    est = slice(start, start + config.T)
    hold = slice(start + config.T, start + config.T + config.holdout)
    lag = y[:-1]
    names = tuple(f"x{i + 1}" for i in range(config.n))
    ds = Dataset(y[est], lag[start - 1 : start - 1 + config.T, None], X[est], names, ("y_lag1",))
    k = config.k
    beta_full = np.zeros(config.n)
    beta_full[:k] = config.beta
    return DgpRealization(
        ds, y[hold].copy(), lag[hold.start - 1 : hold.stop - 1, None].copy(), X[hold].copy(),
        tuple(range(k)), tuple(range(k, 2 * k)), tuple(range(2 * k, config.n)),
        beta_full, d,
    )


def generate_wedge(T: int, alpha: float, rho: float, sigma: float, rng) -> Dataset:
    """Two orthogonal signals ``x1, x2`` and a proxy correlated ``rho`` with each.

    ``y = x1 + alpha x2 + sigma u``. Requires ``rho < 1/sqrt(2)``.
    """
    if not 0 <= rho < math.sqrt(0.5):
        raise InvalidArgument("need 0 <= rho < 1/sqrt(2)")
    e = rng.standard_normal((T, 3))
    x1, x2 = e[:, 0], e[:, 1]
    x3 = rho * (x1 + x2) + math.sqrt(1.0 - 2.0 * rho ** 2) * e[:, 2]
    y = x1 + alpha * x2 + sigma * rng.standard_normal(T)
    return Dataset(y, np.empty((T, 0)), np.column_stack([x1, x2, x3]), ("x1", "x2", "x3"))


def generate_one_factor(
    T: int, betas, n_proxy: int, lambda_s: float, lambda_p: float, sigma: float, rng,
    var_signal: float = 1.0, var_proxy: float = 1.0,
) -> Dataset:
    """Signals ``lambda_s f + e_i`` and proxies ``lambda_p f + v_i``; ``y`` loads on signals."""
    betas = np.asarray(betas, dtype=float)
    k = betas.size
    f = rng.standard_normal(T)
    Xs = lambda_s * f[:, None] + math.sqrt(var_signal) * rng.standard_normal((T, k))
    Xp = lambda_p * f[:, None] + math.sqrt(var_proxy) * rng.standard_normal((T, n_proxy))
    y = Xs @ betas + sigma * rng.standard_normal(T)
    return Dataset(y, np.empty((T, 0)), np.column_stack([Xs, Xp]))


def _select(method: str, ds: Dataset, config: SelectionConfig) -> SelectionResult:
    if method == "BMT":
        return bmt_select(ds, config)
    if method == "OCMT":
        return ocmt_select(ds, config)
    if method == "LassoBIC":
        return lasso_select_bic(ds.y, ds.Z, ds.X)
    if method == "LassoCV":
        return lasso_select_cv(ds.y, ds.Z, ds.X, folds=10)
    if method == "AdaptiveLasso":
        return adaptive_lasso_select(ds.y, ds.Z, ds.X)
    raise InvalidArgument(f"unknown method {method!r}; choose from {METHODS}")


def replication_outcomes(
    config: DgpConfig, methods: Sequence[str], selector_config: SelectionConfig, rng
) -> dict:
    """Raw per-method outcomes for one draw (see :func:`run_replication`)."""
    for m in methods:
        if m not in METHODS:
            raise InvalidArgument(f"unknown method {m!r}; choose from {METHODS}")
    if not methods:
        return {}
    real = generate_dgp(config, rng)
    ds = real.dataset
    out = {}
    for m in methods:
        res = _select(m, ds, selector_config)
        counts = confusion(res.selected, real.signal_set, config.n)
        coef_err = float(np.sum((res.coefficients_full - real.beta_true_full) ** 2))
        if config.holdout:
            pred = res.predict(real.Z_holdout, real.X_holdout)
            fc_err = float(np.mean((real.y_holdout - pred) ** 2))
        else:
            fc_err = float("nan")
        out[m] = ReplicationOutcome(counts, res.model_size, coef_err, fc_err)
    return out


def run_replication(
    config: DgpConfig,
    methods: Sequence[str],
    selector_config: SelectionConfig = SelectionConfig(),
    rng=None,
) -> dict:
    """Metrics of each method on one simulated draw, keyed by method name."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    outcomes = replication_outcomes(config, methods, selector_config, rng)
    return {m: summarize([o]) for m, o in outcomes.items()}


def replication_rng(seed: int, design_index: int, rep: int) -> np.random.Generator:
    """Independent stream for one (design, replication) cell."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(design_index, rep))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class DesignSummary:
    index: int
    config: DgpConfig
    reports: Mapping[str, MetricsReport]


@dataclass(frozen=True)
class GridResult:
    designs: list
    methods: tuple
    reps: int

    def table(self, metric: str) -> list:
        """Rows of ``(design index, config, {method: value})`` for one metric."""
        return [
            (d.index, d.config, {m: getattr(d.reports[m], metric) for m in self.methods})
            for d in self.designs
        ]


def _task(args):
    design_index, rep, config, methods, selector_config = args
    rng = replication_rng(config.seed, design_index, rep)
    return replication_outcomes(config, methods, selector_config, rng)


def run_grid(
    grid: Sequence[DgpConfig],
    reps: int,
    selector_config: SelectionConfig = SelectionConfig(),
    workers: int = 1,
    methods: Sequence[str] = ("BMT", "OCMT", "LassoBIC", "AdaptiveLasso"),
    progress: Optional[Callable[[int, int], None]] = None,
) -> GridResult:
    """Mean metrics over ``reps`` draws for every design in ``grid``.

    Outcomes are reduced in (design, replication) order regardless of
    completion order, so the tables are identical for any ``workers``.
    """
    if reps < 1:
        raise InvalidArgument("reps must be >= 1")
    methods = tuple(methods)
    tasks = [
        (d, r, cfg, methods, selector_config)
        for d, cfg in enumerate(grid)
        for r in range(reps)
    ]
    if workers <= 1:
        results = []
        for i, t in enumerate(tasks):
            results.append(_task(t))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    designs = []
    for d, cfg in enumerate(grid):
        block = results[d * reps : (d + 1) * reps]
        reports = {m: summarize([o[m] for o in block]) for m in methods}
        designs.append(DesignSummary(d, cfg, reports))
    return GridResult(designs, methods, reps)


def expand_grid(base: Mapping, axes: Mapping[str, Sequence]) -> list:
    """Cartesian product of ``axes`` over a base configuration, in key order."""
    keys = list(axes)
    configs = []
    for values in product(*(axes[k] for k in keys)):
        params = dict(base)
        params.update(zip(keys, values))
        configs.append(DgpConfig(**params))
    return configs


def config_to_dict(config: DgpConfig) -> dict:
    d = asdict(config)
    d["beta"] = list(d["beta"])
    return d


def with_seed(grid: Sequence[DgpConfig], seed: int) -> list:
    return [replace(c, seed=seed) for c in grid]
