"""Quasi-maximum-likelihood fitting of ARMA + FIEGARCH models.

The objective is the Gaussian quasi-log-likelihood of the mean-equation
innovations given the filtered conditional variances.  Constrained
parameters are mapped to an unconstrained vector (scaled logistic for d,
partial-autocorrelation recursion for lag polynomials that must keep their
roots outside the unit circle), so a plain quasi-Newton search applies; a
Nelder-Mead polish is used when the line search stalls.  Everything is
deterministic for fixed data and settings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import chi2

from .arma import ArmaSpec, arma_filter
from .errors import DomainError, EstimationError, NonInvertibleError
from .fracdiff import UNIT_ROOT_TOL
from .model import (
    FiegarchSpec,
    VolatilityState,
    ZivotWangSpec,
    filter_volatility,
    filter_volatility_zw,
)

__all__ = [
    "JointSpec",
    "OptimizerConfig",
    "FitResult",
    "qmle_loglik",
    "fit",
    "model_select",
    "standardized_residuals",
    "ljung_box",
]

_PENALTY = 1e10
_LN_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class JointSpec:
    """Mean equation (optional) plus volatility equation."""

    vol: FiegarchSpec | ZivotWangSpec
    arma: Optional[ArmaSpec] = None

    def coefficient_count(self) -> int:
        k = 0
        if self.arma is not None:
            k += 1 + len(self.arma.ar) + len(self.arma.ma)
        if isinstance(self.vol, ZivotWangSpec):
            k += 2 * (self.vol.p + 1) + self.vol.q + 1
        else:
            k += 3 + self.vol.p + self.vol.q  # omega, theta, gamma + lags
        k += 1 if self.vol.d != 0.0 else 0
        return k


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for :func:`fit`.

    ``gtol`` applies to the gradient of the per-observation objective.
    ``skip`` is the number of leading filtered points excluded from the
    likelihood sum; ``None`` selects max(20, p2 + q2 + 1).
    """

    max_iter: int = 500
    gtol: float = 1e-5
    truncation: int = 1000
    skip: Optional[int] = None
    include_mean: Optional[bool] = None
    nm_max_iter: int = 2000


@dataclass(frozen=True)
class FitResult:
    """Outcome of one quasi-likelihood fit."""

    spec: JointSpec
    orders: tuple[int, int, int, int, int]
    loglik: float
    aic: float
    bic: float
    n_used: int
    n_params: int
    converged: bool
    iterations: int
    gradient_norm: float
    truncation: int
    skip: int
    objective_path: tuple[float, ...]
    message: str


def _filter_any(vol, x, M: int) -> VolatilityState:
    if isinstance(vol, ZivotWangSpec):
        return filter_volatility_zw(vol, x, M)
    return filter_volatility(vol, x, M)


def qmle_loglik(spec: JointSpec | FiegarchSpec | ZivotWangSpec, r, M: int = 1000,
                skip: int = 0) -> float:
    """Gaussian quasi-log-likelihood of ``r`` under ``spec``.

    Runs the mean filter (if any), then the volatility filter, and sums
    ``-0.5 (ln 2pi + ln sigma_t^2 + x_t^2 / sigma_t^2)`` over ``t > skip``.
    Returns ``-inf`` when the volatility recursion degenerates (variance
    under/overflow), which optimizers treat as a rejected point.
    """
    if not isinstance(spec, JointSpec):
        spec = JointSpec(vol=spec)
    r = np.asarray(r, dtype=float)
    if r.ndim != 1:
        raise DomainError("r must be one-dimensional")
    if not np.all(np.isfinite(r)):
        raise DomainError("r must be finite")
    k = spec.coefficient_count()
    if r.size <= 10 * k:
        raise EstimationError(
            f"series of length {r.size} too short for {k} parameters"
        )
    if not 0 <= skip < r.size:
        raise DomainError("skip must be in [0, len(r))")
    x = arma_filter(spec.arma, r) if spec.arma is not None else r
    try:
        state = _filter_any(spec.vol, x, M)
    except DomainError:
        return -np.inf
    ln_s2 = np.log(state.sigma2[skip:])
    z2 = state.z[skip:] ** 2
    ll = -0.5 * float(np.sum(_LN_2PI + ln_s2 + z2))
    return ll if np.isfinite(ll) else -np.inf


# ---------------------------------------------------------------------------
# Unconstrained reparameterization
# ---------------------------------------------------------------------------

def _pacf_to_coeffs(u: np.ndarray) -> np.ndarray:
    """Unconstrained vector -> coefficients b of a root-free 1 - sum b_j z^j."""
    pac = np.tanh(u / 2.0)
    b = pac.copy()
    for j in range(1, b.shape[0]):
        b[:j] = b[:j] - pac[j] * b[:j][::-1]
    return b

def _coeffs_to_pacf(b: Sequence[float]) -> np.ndarray:
    """Inverse of :func:`_pacf_to_coeffs` (Levinson-Durbin downdate)."""
    y = np.asarray(b, dtype=float).copy()
    for j in range(y.shape[0] - 1, 0, -1):
        a = y[j]
        if abs(a) >= 1.0:
            raise DomainError("coefficients outside the stationary region")
        y[:j] = (y[:j] + a * y[:j][::-1]) / (1.0 - a * a)
    if np.any(np.abs(y) >= 1.0):
        raise DomainError("coefficients outside the stationary region")
    return 2.0 * np.arctanh(y)

def _d_forward(u: float) -> float:
    return 0.5 * math.tanh(u / 2.0)

def _d_inverse(d: float) -> float:
    if not -0.5 < d < 0.5:
        raise DomainError("d outside (-0.5, 0.5)")
    return 2.0 * math.atanh(2.0 * d)


class _RejectPoint(Exception):
    """Raised inside the objective for parameter points outside the domain."""


@dataclass(frozen=True)
class ParamMap:
    """Layout and bijection between natural parameters and optimizer vector."""

    orders: tuple[int, int, int, int, int]
    include_mean: bool

    @property
    def size(self) -> int:
        p1, q1, p2, d_flag, q2 = self.orders
        return (1 if self.include_mean else 0) + p1 + q1 + 3 + p2 + q2 + d_flag

    def to_vector(self, mean, ar, ma, omega, alpha, beta, theta, gamma, d) -> np.ndarray:
        p1, q1, p2, d_flag, q2 = self.orders
        parts: list[float] = []
        if self.include_mean:
            parts.append(mean)
        if p1:
            parts.extend(_coeffs_to_pacf(ar))
        if q1:
            parts.extend(_coeffs_to_pacf([-v for v in ma]))
        parts.append(omega)
        parts.extend(alpha)
        if q2 == 1:
            parts.extend(beta)
        elif q2 > 1:
            parts.extend(_coeffs_to_pacf(beta))
        parts.extend([theta, gamma])
        if d_flag:
            parts.append(_d_inverse(d))
        vec = np.asarray(parts, dtype=float)
        if vec.shape[0] != self.size:
            raise DomainError("parameter dimensions do not match the orders")
        return vec

    def to_specs(self, u: np.ndarray) -> JointSpec:
        p1, q1, p2, d_flag, q2 = self.orders
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise _RejectPoint
        pos = 0
        mean = 0.0
        if self.include_mean:
            mean = float(u[pos]); pos += 1
        ar = _pacf_to_coeffs(u[pos : pos + p1]); pos += p1
        ma = -_pacf_to_coeffs(u[pos : pos + q1]); pos += q1
        omega = float(u[pos]); pos += 1
        alpha = u[pos : pos + p2]; pos += p2
        if q2 == 1:
            beta = u[pos : pos + 1]; pos += 1
            if abs(beta[0]) >= 1.0 / (1.0 + 2 * UNIT_ROOT_TOL):
                raise _RejectPoint
        elif q2 > 1:
            beta = _pacf_to_coeffs(u[pos : pos + q2]); pos += q2
        else:
            beta = np.empty(0)
        theta = float(u[pos]); pos += 1
        gamma = float(u[pos]); pos += 1
        d = _d_forward(float(u[pos])) if d_flag else 0.0
        arma = None
        if self.include_mean or p1 or q1:
            arma = ArmaSpec(mean=mean, ar=tuple(ar), ma=tuple(ma))
        try:
            vol = FiegarchSpec(
                omega=omega, alpha=tuple(alpha), beta=tuple(beta),
                theta=theta, gamma=gamma, d=d,
            )
        except (DomainError, NonInvertibleError) as exc:
            raise _RejectPoint from exc
        return JointSpec(vol=vol, arma=arma)


# ---------------------------------------------------------------------------
# Starting values
# ---------------------------------------------------------------------------

def _lag_matrix(y: np.ndarray, lags: int) -> np.ndarray:
    n = y.shape[0]
    cols = [y[lags - k : n - k] for k in range(1, lags + 1)]
    return np.column_stack(cols)


def _hannan_rissanen(centered: np.ndarray, p: int, q: int) -> tuple[tuple, tuple]:
    """Two-stage regression starts for the ARMA part; shrunk into the root-free box."""
    n = centered.shape[0]
    if p == 0 and q == 0:
        return (), ()
    try:
        L = min(max(8, 2 * (p + q)), max(n // 4, p + q + 1))
        X1 = _lag_matrix(centered, L)
        y1 = centered[L:]
        coef1, *_ = np.linalg.lstsq(X1, y1, rcond=None)
        resid = np.concatenate([np.zeros(L), y1 - X1 @ coef1])
        t0 = max(p, q) + L
        rows = []
        if p:
            rows.append(_lag_matrix(centered, p)[t0 - p :])
        if q:
            rows.append(_lag_matrix(resid, q)[t0 - q :])
        X2 = np.column_stack(rows)
        y2 = centered[t0:]
        coef2, *_ = np.linalg.lstsq(X2, y2, rcond=None)
        ar = np.asarray(coef2[:p])
        ma = np.asarray(coef2[p : p + q])
    except (np.linalg.LinAlgError, ValueError):
        ar, ma = np.zeros(p), np.zeros(q)
    for _ in range(200):
        try:
            ArmaSpec(mean=0.0, ar=tuple(ar), ma=tuple(ma))
            return tuple(ar), tuple(ma)
        except (NonInvertibleError, DomainError):
            ar = 0.9 * ar
            ma = 0.9 * ma
    return tuple(np.zeros(p)), tuple(np.zeros(q))


def _starting_vector(pmap: ParamMap, r: np.ndarray) -> np.ndarray:
    p1, q1, p2, d_flag, q2 = pmap.orders
    mean0 = float(np.mean(r)) if pmap.include_mean else 0.0
    ar0, ma0 = _hannan_rissanen(r - mean0, p1, q1)
    innov = arma_filter(ArmaSpec(mean=mean0, ar=ar0, ma=ma0), r)
    v = float(np.var(innov))
    omega0 = math.log(v) if v > 0 else -1.0
    alpha0 = tuple(0.1 / p2 for _ in range(p2)) if p2 else ()
    beta0 = tuple(0.5 / q2 for _ in range(q2)) if q2 else ()
    return pmap.to_vector(
        mean=mean0, ar=ar0, ma=ma0, omega=omega0, alpha=alpha0, beta=beta0,
        theta=-0.1, gamma=0.2, d=0.2 if d_flag else 0.0,
    )


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

class _Tracked:
    """Objective wrapper recording the best value seen so far."""

    def __init__(self, fun):
        self.fun = fun
        self.best_path: list[float] = []

    def __call__(self, u):
        val = self.fun(u)
        best = self.best_path[-1] if self.best_path else np.inf
        self.best_path.append(min(best, val))
        return val


def _validate_orders(orders) -> tuple[int, int, int, int, int]:
    try:
        p1, q1, p2, d_flag, q2 = (int(v) for v in orders)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"invalid orders {orders!r}") from exc
    if min(p1, q1, p2, q2) < 0 or p1 > 5 or q1 > 5 or p2 > 4 or q2 > 4:
        raise DomainError(f"orders {orders!r} outside the supported range")
    if d_flag not in (0, 1):
        raise DomainError("d flag must be 0 or 1")
    return p1, q1, p2, d_flag, q2


def fit(orders, r, config: Optional[OptimizerConfig] = None) -> FitResult:
    """Fit an ARMA(p1, q1) + FIEGARCH(p2, d, q2) model by QMLE.

    ``orders`` is (p1, q1, p2, d_flag, q2); ``d_flag`` = 0 pins d at zero
    (the short-memory EGARCH case).  Starting points are deterministic, so
    repeated calls give identical results.  Non-convergence is reported via
    ``converged=False``, never silently.
    """
    cfg = config or OptimizerConfig()
    orders = _validate_orders(orders)
    p1, q1, p2, d_flag, q2 = orders
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or not np.all(np.isfinite(r)):
        raise DomainError("r must be a finite one-dimensional series")
    include_mean = cfg.include_mean
    if include_mean is None:
        include_mean = (p1 + q1) > 0
    pmap = ParamMap(orders=orders, include_mean=include_mean)
    n_params = pmap.size
    if r.size <= 10 * n_params:
        raise EstimationError(
            f"series of length {r.size} too short for {n_params} parameters"
        )
    skip = cfg.skip if cfg.skip is not None else max(20, p2 + q2 + 1)
    n_used = r.size - skip

    def objective(u):
        try:
            spec = pmap.to_specs(u)
        except _RejectPoint:
            return _PENALTY
        ll = qmle_loglik(spec, r, M=cfg.truncation, skip=skip)
        if not np.isfinite(ll):
            return _PENALTY
        return -ll / n_used

    tracked = _Tracked(objective)
    u0 = _starting_vector(pmap, r)
    if objective(u0) >= _PENALTY:
        raise EstimationError("starting point is infeasible for this data")
    res = optimize.minimize(
        tracked, u0, method="BFGS",
        options={"maxiter": cfg.max_iter, "gtol": cfg.gtol},
    )
    iterations = int(res.nit)
    message = str(res.message)
    u_best = res.x
    if not res.success:
        res_nm = optimize.minimize(
            tracked, res.x, method="Nelder-Mead",
            options={"maxiter": cfg.nm_max_iter, "xatol": 1e-8, "fatol": 1e-10},
        )
        if res_nm.fun <= res.fun:
            u_best = res_nm.x
        iterations += int(res_nm.nit)
        message += f"; Nelder-Mead: {res_nm.message}"
    eps = math.sqrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(u_best))
    grad = optimize.approx_fprime(u_best, objective, eps)
    gradient_norm = float(np.max(np.abs(grad))) if np.all(np.isfinite(grad)) else np.inf
    final_obj = objective(u_best)
    if final_obj >= _PENALTY:
        raise EstimationError("optimizer terminated at an infeasible point")
    spec = pmap.to_specs(u_best)
    loglik = -final_obj * n_used
    aic = -2.0 * loglik + 2.0 * n_params
    bic = -2.0 * loglik + n_params * math.log(n_used)
    return FitResult(
        spec=spec,
        orders=orders,
        loglik=loglik,
        aic=aic,
        bic=bic,
        n_used=n_used,
        n_params=n_params,
        converged=bool(gradient_norm <= cfg.gtol),
        iterations=iterations,
        gradient_norm=gradient_norm,
        truncation=cfg.truncation,
        skip=skip,
        objective_path=tuple(tracked.best_path),
        message=message,
    )


def model_select(candidates: Iterable, r, config: Optional[OptimizerConfig] = None
                 ) -> list[FitResult]:
    """Fit every candidate order tuple and rank by BIC, then AIC, then size."""
    cand = [_validate_orders(c) for c in candidates]
    if not cand:
        raise DomainError("candidate list is empty")
    results: list[FitResult] = []
    failures: list[tuple[tuple, str]] = []
    for orders in cand:
        try:
            results.append(fit(orders, r, config))
        except (EstimationError, DomainError, NonInvertibleError) as exc:
            failures.append((orders, f"{type(exc).__name__}: {exc}"))
    if not results:
        lines = "; ".join(f"{o}: {m}" for o, m in failures)
        raise EstimationError(f"all {len(cand)} candidate fits failed ({lines})")
    results.sort(key=lambda f: (f.bic, f.aic, f.n_params))
    return results


def standardized_residuals(result: FitResult, r) -> np.ndarray:
    """Residuals x_t / sigma_t implied by a fitted model on its data."""
    spec = result.spec
    x = arma_filter(spec.arma, r) if spec.arma is not None else np.asarray(r, float)
    return _filter_any(spec.vol, x, result.truncation).z


def ljung_box(series, lags: int = 20) -> tuple[float, float]:
    """Portmanteau statistic and p-value for no autocorrelation up to ``lags``.

    Apply to squared standardized residuals to screen for remaining ARCH
    structure after a fit.
    """
    s = np.asarray(series, dtype=float)
    n = s.shape[0]
    if n <= lags + 1:
        raise DomainError("series too short for the requested number of lags")
    s = s - s.mean()
    denom = float(np.dot(s, s))
    if denom == 0.0:
        raise DomainError("series is constant")
    q = 0.0
    for k in range(1, lags + 1):
        rk = float(np.dot(s[k:], s[:-k])) / denom
        q += rk * rk / (n - k)
    q *= n * (n + 2.0)
    return q, float(chi2.sf(q, lags))
