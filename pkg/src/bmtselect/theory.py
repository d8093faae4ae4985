"""Population-level verifiers for the selection conditions.

Everything here works on supplied or analytically assembled covariance
matrices; nothing is estimated from data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidArgument


@dataclass(frozen=True)
class CovarianceSpec:
    """Blocks of the regressor covariance around one focal signal ``x_1``.

    ``sigma_12`` holds the covariances of ``x_1`` with the other signals
    ``X_2``. Proxy ``i`` is described by ``sigma_i1[i]`` (covariance with
    ``x_1``), ``sigma_ii[i]`` (its variance) and the row ``sigma_i2[i]``
    (covariances with ``X_2``).
    """

    sigma11: float
    sigma_12: np.ndarray
    Sigma22: np.ndarray = field(repr=False)
    sigma_i1: np.ndarray = field(repr=False)
    sigma_ii: np.ndarray = field(repr=False)
    sigma_i2: np.ndarray = field(repr=False)
    beta1: float = 1.0
    beta2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        conv = lambda a, nd: np.atleast_1d(np.asarray(a, dtype=float)) if nd == 1 else np.asarray(a, dtype=float)
        s12 = conv(self.sigma_12, 1)
        k2 = s12.size
        S22 = np.asarray(self.Sigma22, dtype=float).reshape(k2, k2)
        si1 = conv(self.sigma_i1, 1)
        sii = conv(self.sigma_ii, 1)
        si2 = np.asarray(self.sigma_i2, dtype=float).reshape(si1.size, k2)
        b2 = conv(self.beta2, 1)
        if b2.size != k2 or sii.size != si1.size:
            raise DimensionMismatch("beta2, sigma_12 and the proxy blocks disagree in size")
        if self.sigma11 <= 0 or np.any(sii <= 0) or np.any(np.diag(S22) <= 0):
            raise InvalidArgument("variances must be positive")
        if not np.allclose(S22, S22.T):
            raise InvalidArgument("Sigma22 must be symmetric")
        for name, val in (("sigma_12", s12), ("Sigma22", S22), ("sigma_i1", si1),
                          ("sigma_ii", sii), ("sigma_i2", si2), ("beta2", b2)):
            object.__setattr__(self, name, val)

    @property
    def n_proxies(self) -> int:
        return self.sigma_i1.size

    @classmethod
    def from_covariance(cls, Sigma, signals: Sequence[int], proxies: Sequence[int], betas):
        """Extract the blocks for focal signal ``signals[0]`` from a full matrix."""
        Sigma = np.asarray(Sigma, dtype=float)
        signals, proxies = list(signals), list(proxies)
        betas = np.asarray(betas, dtype=float).ravel()
        if betas.size != len(signals):
            raise DimensionMismatch("one coefficient per signal is required")
        one, rest = signals[0], signals[1:]
        return cls(
            sigma11=float(Sigma[one, one]),
            sigma_12=Sigma[one, rest],
            Sigma22=Sigma[np.ix_(rest, rest)],
            sigma_i1=Sigma[proxies, one],
            sigma_ii=Sigma[proxies, proxies],
            sigma_i2=Sigma[np.ix_(proxies, rest)],
            beta1=float(betas[0]),
            beta2=betas[1:],
        )


def one_factor_covariance(
    k: int, n_proxy: int, lambda_s: float, lambda_p: float,
    var_signal: float = 1.0, var_proxy: float = 1.0,
) -> np.ndarray:
    """Covariance of ``k`` signals ``lambda_s f + e`` then proxies ``lambda_p f + v``."""
    if k < 1 or n_proxy < 0 or var_signal <= 0 or var_proxy <= 0:
        raise InvalidArgument("need k >= 1, n_proxy >= 0 and positive idiosyncratic variances")
    load = np.r_[np.full(k, lambda_s), np.full(n_proxy, lambda_p)]
    idio = np.r_[np.full(k, var_signal), np.full(n_proxy, var_proxy)]
    return np.outer(load, load) + np.diag(idio)


def one_factor_spec(
    k: int, lambda_s: float, lambda_p: float, betas=None, n_proxy: int = 1,
    var_signal: float = 1.0, var_proxy: float = 1.0,
) -> CovarianceSpec:
    betas = np.ones(k) if betas is None else np.asarray(betas, dtype=float)
    Sigma = one_factor_covariance(k, n_proxy, lambda_s, lambda_p, var_signal, var_proxy)
    return CovarianceSpec.from_covariance(Sigma, range(k), range(k, k + n_proxy), betas)


class DominanceReport(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def dominance_condition(spec: CovarianceSpec, proxy_index: int = 0) -> DominanceReport:
    """Signal-to-proxy dominance inequality for one proxy, term by term.

    LHS = s11 b1^2 (1 - sii^-1 si1)^2
          + sii^-1 (b2' si2) b1 (1 - sii^-1 si1)
          + (b2' si2)^2 s11 sii^-1 (s11 sii^-1 - 1)
    RHS = 3 s11^-1 (b2' s12)^2
    """
    if not 0 <= proxy_index < spec.n_proxies:
        raise InvalidArgument(f"proxy_index {proxy_index} outside [0, {spec.n_proxies})")
    s11, b1 = spec.sigma11, spec.beta1
    sii = float(spec.sigma_ii[proxy_index])
    si1 = float(spec.sigma_i1[proxy_index])
    b2_si2 = float(spec.beta2 @ spec.sigma_i2[proxy_index])
    b2_s12 = float(spec.beta2 @ spec.sigma_12)
    shrink = 1.0 - si1 / sii
    lhs = (
        s11 * b1 ** 2 * shrink ** 2
        + b2_si2 * b1 * shrink / sii
        + b2_si2 ** 2 * (s11 / sii) * (s11 / sii - 1.0)
    )
    rhs = 3.0 * b2_s12 ** 2 / s11
    return DominanceReport(lhs, rhs, lhs > rhs)


class Noncentrality(NamedTuple):
    lambda_signal: float
    lambda_proxy: float
    gap: float
    gap_closed_form: float


def stage1_noncentrality(
    beta: float, sigma11: float, sigma_u2: float, rho_i1: float, T: int
) -> Noncentrality:
    """First-stage t-ratio noncentralities of the signal and of a proxy.

    ``gap`` is ``lambda_signal^2 - lambda_proxy^2`` as a difference of
    squares; ``gap_closed_form`` is the simplified expression.
    """
    if not abs(rho_i1) < 1 or sigma_u2 <= 0 or sigma11 <= 0 or T < 1:
        raise InvalidArgument("need |rho| < 1, sigma_u2 > 0, sigma11 > 0 and T >= 1")
    b2s = beta ** 2 * sigma11
    lam1 = math.sqrt(T) * beta * math.sqrt(sigma11) / math.sqrt(sigma_u2)
    lami = math.sqrt(T) * beta * rho_i1 * math.sqrt(sigma11) / math.sqrt(
        sigma_u2 + b2s * (1.0 - rho_i1 ** 2)
    )
    one_m = 1.0 - rho_i1 ** 2
    closed = T * b2s * one_m * (sigma_u2 + b2s) / (sigma_u2 * (sigma_u2 + b2s * one_m))
    return Noncentrality(lam1, lami, lam1 ** 2 - lami ** 2, closed)


class IrrepresentableReport(NamedTuple):
    value: float
    holds: bool


def irrepresentable_check(Sigma, support: Sequence[int], signs) -> IrrepresentableReport:
    """``|| Sigma_{S^c S} Sigma_{SS}^-1 sign ||_inf`` and whether it is below 1."""
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise DimensionMismatch("Sigma must be square")
    support = [int(i) for i in support]
    signs = np.asarray(signs, dtype=float).ravel()
    if signs.size != len(support):
        raise DimensionMismatch("one sign per support index is required")
    rest = [i for i in range(Sigma.shape[0]) if i not in set(support)]
    if not rest:
        return IrrepresentableReport(0.0, True)
    S11 = Sigma[np.ix_(support, support)]
    S21 = Sigma[np.ix_(rest, support)]
    try:
        w = np.linalg.solve(S11, signs)
    except np.linalg.LinAlgError as exc:
        raise InvalidArgument("Sigma_SS is singular") from exc
    value = float(np.max(np.abs(S21 @ w)))
    return IrrepresentableReport(value, value < 1.0)


class WedgeInterval(NamedTuple):
    lower: float
    upper: float
    nonempty: bool


def wedge_interval(alpha: float) -> WedgeInterval:
    """Correlations where BMT recovers ``{x1, x2}`` but Lasso does not."""
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    upper = 1.0 / (1.0 + alpha)
    return WedgeInterval(0.5, upper, upper > 0.5)


def theorem7_thresholds(betas) -> np.ndarray:
    """``|b_j| / sum_{i >= j} |b_i|`` for coefficients sorted by magnitude.

    BMT stays consistent for proxy correlations below the minimum entry.
    """
    b = np.abs(np.asarray(betas, dtype=float).ravel())
    if b.size == 0 or np.any(b <= 0):
        raise InvalidArgument("betas must be non-empty and nonzero")
    if np.any(np.diff(b) > 0):
        raise InvalidArgument("betas must be sorted by descending magnitude")
    tails = np.cumsum(b[::-1])[::-1]
    out = b / tails
    out[-1] = 1.0
    return out
