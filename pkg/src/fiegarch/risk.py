"""Risk measures: VaR, Expected Shortfall and MaxLoss.

Losses are positive numbers throughout (loss = -return); MaxLoss follows the
opposite convention and is reported negative, so every estimate carries an
explicit ``sign`` tag.  Four estimation approaches are provided for VaR/ES:

* empirical      - quantile of the empirical loss distribution,
* normal         - Gaussian quantile at sample moments (variance-covariance),
* riskmetrics    - Gaussian quantile at the EWMA conditional variance,
* econometric    - Gaussian quantile at a fitted ARMA + (FI)EGARCH forecast,

plus the scenario-based MaxLoss over an elliptical confidence region.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import chi2

from .arma import arma_filter, arma_forecast
from .errors import (
    ConvergenceWarning,
    DegeneratePortfolioError,
    DomainError,
    HorizonScalingWarning,
)
from .estimation import FitResult, JointSpec, _filter_any
from .model import FiegarchSpec, ZivotWangSpec, forecast_volatility

__all__ = [
    "RiskEstimate",
    "PortfolioSpec",
    "EwmaState",
    "var_empirical",
    "es_empirical",
    "var_normal",
    "es_normal",
    "ewma_update",
    "var_riskmetrics",
    "es_riskmetrics",
    "var_econometric",
    "es_econometric",
    "maxloss",
    "portfolio_loss",
    "portfolio_value_series",
]

# Absorbs the binary representation of decimal levels when forming the
# ceiling rank ceil(n * p); shared by the empirical estimators and any
# oracle that re-derives the rank from counts.
LEVEL_FUZZ = 1e-12

_MEASURES = ("var", "es", "maxloss")
_APPROACHES = ("empirical", "normal", "riskmetrics", "egarch", "fiegarch",
               "econometric", "maxloss")


def _check_level(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"confidence level {p} outside (0, 1)")
    return p


def _check_horizon(h: int) -> int:
    h = int(h)
    if h < 1:
        raise DomainError("horizon must be >= 1")
    return h


@dataclass(frozen=True)
class RiskEstimate:
    """One risk figure with its full provenance.

    ``sign`` records the convention: ``loss_positive`` for VaR/ES (larger
    means worse) and ``loss_negative`` for MaxLoss (reported as a negative
    portfolio-value change).  ``scenario`` holds the worst risk-factor move
    for MaxLoss estimates.
    """

    measure: str
    level: float
    horizon: int
    value: float
    approach: str
    scenario: Optional[np.ndarray] = None
    sign: str = "loss_positive"

    def __post_init__(self) -> None:
        if self.measure not in _MEASURES:
            raise DomainError(f"unknown measure {self.measure!r}")
        if self.approach not in _APPROACHES:
            raise DomainError(f"unknown approach {self.approach!r}")
        _check_level(self.level)
        _check_horizon(self.horizon)
        if self.scenario is not None:
            arr = np.array(self.scenario, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, "scenario", arr)


@dataclass(frozen=True)
class PortfolioSpec:
    """Static portfolio description: weights, capital and return history.

    ``returns`` is an n x m matrix of log-returns (one column per asset).
    ``prices`` is optional; when present it must have n + 1 rows and is used
    to value the portfolio over time (the share count of asset i is
    ``a_i V_0 / P_{i,0}``, which no operation consumes directly but fixes the
    valuation formula).
    """

    weights: np.ndarray
    returns: np.ndarray
    v0: float = 1.0
    current_value: float = 1.0
    prices: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float)
        r = np.array(self.returns, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        if w.ndim != 1 or r.ndim != 2 or w.shape[0] != r.shape[1]:
            raise DomainError("weights must match the number of return columns")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise DomainError("weights must sum to one")
        if not (self.v0 > 0 and self.current_value > 0):
            raise DomainError("portfolio values must be positive")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(r))):
            raise DomainError("weights and returns must be finite")
        w.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "returns", r)
        if self.prices is not None:
            pm = np.array(self.prices, dtype=float)
            if pm.ndim != 2 or pm.shape != (r.shape[0] + 1, w.shape[0]):
                raise DomainError("prices must be an (n+1) x m matrix")
            if np.any(pm <= 0):
                raise DomainError("prices must be positive")
            pm.flags.writeable = False
            object.__setattr__(self, "prices", pm)

    @property
    def n(self) -> int:
        return self.returns.shape[0]

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def portfolio_value_series(spec: PortfolioSpec) -> np.ndarray:
    """V_t = V_0 sum_i (a_i / P_{i,0}) P_{i,t} for t = 0..n (requires prices)."""
    if spec.prices is None:
        raise DomainError("portfolio has no price history")
    shares = spec.weights / spec.prices[0]
    return spec.v0 * spec.prices @ shares


def portfolio_loss(spec: PortfolioSpec, t: int) -> float:
    """One-period loss L_t = -V_{t-1} sum_i a_i r_{i,t} for t = 1..n.

    Uses the log-return approximation of the arithmetic loss.  Without a
    price history the previous value is taken as 1 (normalized portfolio).
    """
    t = int(t)
    if not 1 <= t <= spec.n:
        raise DomainError(f"t={t} outside 1..{spec.n}")
    if spec.prices is not None:
        v_prev = float(portfolio_value_series(spec)[t - 1])
    else:
        v_prev = 1.0
    return -v_prev * float(spec.returns[t - 1] @ spec.weights)


# ---------------------------------------------------------------------------
# Empirical approach
# ---------------------------------------------------------------------------

def _as_losses(losses, min_obs: int) -> np.ndarray:
    arr = np.asarray(losses, dtype=float)
    if arr.ndim != 1:
        raise DomainError("losses must be one-dimensional")
    if arr.shape[0] < min_obs:
        raise DomainError(f"need at least {min_obs} observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("losses must be finite")
    return arr


def empirical_rank(n: int, p: float) -> int:
    """1-based order-statistic rank of the level-p empirical quantile."""
    return int(math.ceil(n * (p - LEVEL_FUZZ)))


def var_empirical(losses, p: float, min_obs: int = 20) -> RiskEstimate:
    """Left-continuous inverse of the empirical CDF (type-1, no interpolation).

    The h-period empirical VaR equals the 1-period value, hence horizon is
    fixed at 1.
    """
    p = _check_level(p)
    arr = _as_losses(losses, min_obs)
    srt = np.sort(arr)
    value = float(srt[empirical_rank(arr.shape[0], p) - 1])
    return RiskEstimate(measure="var", level=p, horizon=1, value=value,
                        approach="empirical")


def es_empirical(losses, p: float, min_obs: int = 20) -> RiskEstimate:
    """Mean of the losses at or above the empirical VaR."""
    p = _check_level(p)
    arr = _as_losses(losses, min_obs)
    threshold = var_empirical(arr, p, min_obs=min_obs).value
    tail = arr[arr >= threshold]
    if tail.size == 0:
        raise DomainError("empty tail above the empirical VaR")
    return RiskEstimate(measure="es", level=p, horizon=1,
                        value=float(tail.mean()), approach="empirical")


# ---------------------------------------------------------------------------
# Normal (variance-covariance) approach
# ---------------------------------------------------------------------------

def var_normal(mu: float, sigma: float, p: float, h: int = 1,
               scale_mean_by_horizon: bool = False,
               approach: str = "normal") -> RiskEstimate:
    """Gaussian loss quantile ``mu + Phi^{-1}(p) sqrt(h) sigma``.

    ``mu`` and ``sigma`` describe the loss distribution (loss = -return).
    sqrt(h) scaling of the quantile is exact only for mu = 0; a nonzero mean
    with h > 1 triggers a warning.  Set ``scale_mean_by_horizon`` when mu is
    a per-period mean that should be applied h times.
    """
    p = _check_level(p)
    h = _check_horizon(h)
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if h > 1 and mu != 0.0:
        warnings.warn(
            "sqrt(h) horizon scaling is only exact for a zero-mean loss",
            HorizonScalingWarning, stacklevel=2,
        )
    mu_term = mu * h if scale_mean_by_horizon else mu
    value = mu_term + float(ndtri(p)) * math.sqrt(h) * sigma
    return RiskEstimate(measure="var", level=p, horizon=h, value=value,
                        approach=approach)


def es_normal(mu: float, sigma: float, p: float, h: int = 1,
              scale_mean_by_horizon: bool = False,
              approach: str = "normal") -> RiskEstimate:
    """Gaussian tail mean ``mu + sigma phi(Phi^{-1}(p)) / (1-p)``."""
    p = _check_level(p)
    h = _check_horizon(h)
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if h > 1 and mu != 0.0:
        warnings.warn(
            "sqrt(h) horizon scaling is only exact for a zero-mean loss",
            HorizonScalingWarning, stacklevel=2,
        )
    zp = float(ndtri(p))
    mills = math.exp(-0.5 * zp * zp) / math.sqrt(2.0 * math.pi) / (1.0 - p)
    mu_term = mu * h if scale_mean_by_horizon else mu
    value = mu_term + math.sqrt(h) * sigma * mills
    return RiskEstimate(measure="es", level=p, horizon=h, value=value,
                        approach=approach)


# ---------------------------------------------------------------------------
# RiskMetrics (EWMA) approach
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EwmaState:
    """Exponentially weighted conditional variance (or covariance matrix)."""

    lam: float
    sigma2: Union[float, np.ndarray]

    def __post_init__(self) -> None:
        if not 0.0 < self.lam < 1.0:
            raise DomainError(f"lambda {self.lam} outside (0, 1)")
        s = self.sigma2
        if np.isscalar(s) or getattr(s, "ndim", 1) == 0:
            s = float(s)
            if not (np.isfinite(s) and s >= 0):
                raise DomainError("variance must be finite and nonnegative")
            object.__setattr__(self, "sigma2", s)
            return
        mat = np.array(s, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DomainError("covariance must be a square matrix")
        if not np.all(np.isfinite(mat)):
            raise DomainError("covariance must be finite")
        if np.max(np.abs(mat - mat.T)) > 1e-12:
            raise DomainError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(mat)) < -1e-10:
            raise DomainError("covariance must be positive semidefinite")
        mat.flags.writeable = False
        object.__setattr__(self, "sigma2", mat)

    @property
    def is_multivariate(self) -> bool:
        return isinstance(self.sigma2, np.ndarray)


def ewma_update(state: EwmaState, r) -> EwmaState:
    """One decay step: sigma^2 <- lam sigma^2 + (1 - lam) r r'."""
    lam = state.lam
    if state.is_multivariate:
        r = np.asarray(r, dtype=float)
        m = state.sigma2.shape[0]
        if r.shape != (m,):
            raise DomainError(f"return vector must have length {m}")
        new = lam * state.sigma2 + (1.0 - lam) * np.outer(r, r)
        return EwmaState(lam=lam, sigma2=new)
    r = float(r)
    return EwmaState(lam=lam, sigma2=lam * state.sigma2 + (1.0 - lam) * r * r)


def ewma_from_history(returns, lam: float = 0.94, init_window: int = 30) -> EwmaState:
    """State holding sigma^2_{n+1} after running the recursion over a history.

    Initialized with the zero-mean second moment of the first
    ``init_window`` observations (the recursion itself uses raw squares, so
    the initialization follows the same mu = 0 convention).
    """
    arr = np.asarray(returns, dtype=float)
    if arr.ndim == 1:
        n = arr.shape[0]
        if n < 2:
            raise DomainError("need at least 2 observations")
        w = min(init_window, n)
        state = EwmaState(lam=lam, sigma2=float(np.mean(arr[:w] ** 2)))
        for t in range(w, n):
            state = ewma_update(state, arr[t])
        return state
    if arr.ndim != 2:
        raise DomainError("returns must be a vector or a matrix")
    n = arr.shape[0]
    if n < 2:
        raise DomainError("need at least 2 observations")
    w = min(init_window, n)
    state = EwmaState(lam=lam, sigma2=(arr[:w].T @ arr[:w]) / w)
    for t in range(w, n):
        state = ewma_update(state, arr[t])
    return state


def _riskmetrics_sigma(returns, lam: float, weights, init_window: int) -> float:
    arr = np.asarray(returns, dtype=float)
    state = ewma_from_history(arr, lam=lam, init_window=init_window)
    if state.is_multivariate:
        if weights is None:
            raise DomainError("multivariate returns require portfolio weights")
        a = np.asarray(weights, dtype=float)
        var = float(a @ state.sigma2 @ a)
    else:
        var = float(state.sigma2)
    # A flat history legitimately drives the EWMA scale (and the VaR) to zero.
    return math.sqrt(max(var, 0.0))


def var_riskmetrics(returns, p: float, h: int = 1, lam: float = 0.94,
                    weights=None, init_window: int = 30) -> RiskEstimate:
    """``Phi^{-1}(p) sqrt(h) sigma_{t+1}`` with the EWMA conditional scale.

    For a return matrix the portfolio variance ``a' Sigma_{t+1} a`` is used.
    The conditional mean is zero by assumption.
    """
    p = _check_level(p)
    h = _check_horizon(h)
    sigma = _riskmetrics_sigma(returns, lam, weights, init_window)
    value = float(ndtri(p)) * math.sqrt(h) * sigma
    return RiskEstimate(measure="var", level=p, horizon=h, value=value,
                        approach="riskmetrics")


def es_riskmetrics(returns, p: float, h: int = 1, lam: float = 0.94,
                   weights=None, init_window: int = 30) -> RiskEstimate:
    """Gaussian tail mean at the EWMA conditional scale."""
    p = _check_level(p)
    h = _check_horizon(h)
    sigma = _riskmetrics_sigma(returns, lam, weights, init_window)
    zp = float(ndtri(p))
    mills = math.exp(-0.5 * zp * zp) / math.sqrt(2.0 * math.pi) / (1.0 - p)
    value = math.sqrt(h) * sigma * mills
    return RiskEstimate(measure="es", level=p, horizon=h, value=value,
                        approach="riskmetrics")


# ---------------------------------------------------------------------------
# Econometric approach
# ---------------------------------------------------------------------------

def _econometric_forecast(model, r, h: int, truncation: int,
                          allow_unconverged: bool) -> tuple[float, float]:
    """(mean forecast, volatility forecast) at horizon h for a fitted model."""
    if isinstance(model, FitResult):
        if not model.converged:
            if not allow_unconverged:
                raise DomainError(
                    "fit did not converge; pass allow_unconverged=True to override"
                )
            warnings.warn("using an unconverged fit for risk estimation",
                          ConvergenceWarning, stacklevel=3)
        spec = model.spec
        truncation = model.truncation
    elif isinstance(model, JointSpec):
        spec = model
    elif isinstance(model, (FiegarchSpec, ZivotWangSpec)):
        spec = JointSpec(vol=model)
    else:
        raise DomainError(f"cannot take a model of type {type(model).__name__}")
    r = np.asarray(r, dtype=float)
    if spec.arma is not None:
        x = arma_filter(spec.arma, r)
        r_hat = float(arma_forecast(spec.arma, r, x, h)[h - 1])
    else:
        x = r
        r_hat = 0.0
    state = _filter_any(spec.vol, x, truncation)
    if isinstance(spec.vol, ZivotWangSpec):
        from .model import from_zivot_wang

        vol = from_zivot_wang(spec.vol)
    else:
        vol = spec.vol
    sigma2_hat = forecast_volatility(vol, state, h)[h - 1]
    return r_hat, math.sqrt(float(sigma2_hat))


def var_econometric(model, r, p: float, h: int = 1, truncation: int = 1000,
                    allow_unconverged: bool = False,
                    approach: str = "econometric") -> RiskEstimate:
    """``-r_hat_{t+h} + Phi^{-1}(p) sigma_hat_{t+h}`` from a fitted model.

    With a trivial (absent) mean model this is exactly the conditional
    Gaussian quantile of the loss.  ``model`` may be a FitResult, a
    JointSpec, or a bare volatility spec.
    """
    p = _check_level(p)
    h = _check_horizon(h)
    r_hat, sigma_hat = _econometric_forecast(model, r, h, truncation,
                                             allow_unconverged)
    value = -r_hat + float(ndtri(p)) * sigma_hat
    return RiskEstimate(measure="var", level=p, horizon=h, value=value,
                        approach=approach)


def es_econometric(model, r, p: float, h: int = 1, truncation: int = 1000,
                   allow_unconverged: bool = False,
                   approach: str = "econometric") -> RiskEstimate:
    """Conditional Gaussian tail mean from a fitted model forecast."""
    p = _check_level(p)
    h = _check_horizon(h)
    r_hat, sigma_hat = _econometric_forecast(model, r, h, truncation,
                                             allow_unconverged)
    zp = float(ndtri(p))
    mills = math.exp(-0.5 * zp * zp) / math.sqrt(2.0 * math.pi) / (1.0 - p)
    value = -r_hat + sigma_hat * mills
    return RiskEstimate(measure="es", level=p, horizon=h, value=value,
                        approach=approach)


# ---------------------------------------------------------------------------
# MaxLoss (scenario analysis)
# ---------------------------------------------------------------------------

def maxloss(weights, cov, p: float) -> RiskEstimate:
    """Worst loss of a linear portfolio over the level-p confidence ellipsoid.

    Value ``-sqrt(c_p) sqrt(a' Sigma a)`` (negative by convention) where
    ``c_p`` is the p-quantile of chi-square with m degrees of freedom, and
    the minimizing scenario ``Z* = -sqrt(c_p / a' Sigma a) Sigma a`` is
    attached.  Unlike the Gaussian VaR, the scale grows with the number of
    risk factors m.
    """
    p = _check_level(p)
    a = np.asarray(weights, dtype=float)
    sigma = np.asarray(cov, dtype=float)
    m = a.shape[0]
    if a.ndim != 1 or sigma.shape != (m, m):
        raise DomainError("weights and covariance dimensions do not match")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(sigma))):
        raise DomainError("inputs must be finite")
    if np.max(np.abs(sigma - sigma.T)) > 1e-8 * max(1.0, float(np.max(np.abs(sigma)))):
        raise DomainError("covariance must be symmetric")
    quad = float(a @ sigma @ a)
    if quad <= 0.0:
        raise DegeneratePortfolioError("a' Sigma a = 0: no variance in this direction")
    c_p = float(chi2.ppf(p, df=m))
    value = -math.sqrt(c_p) * math.sqrt(quad)
    scenario = -math.sqrt(c_p / quad) * (sigma @ a)
    return RiskEstimate(measure="maxloss", level=p, horizon=1, value=value,
                        approach="maxloss", scenario=scenario,
                        sign="loss_negative")
