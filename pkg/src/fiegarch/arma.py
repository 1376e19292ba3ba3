"""Conditional-mean equation: ARMA filtering, synthesis and forecasting.

The mean-centered convention is used throughout,

    r_t - mu = sum_i phi_i (r_{t-i} - mu) + X_t + sum_j vartheta_j X_{t-j},

with pre-sample observations set to ``mu`` and pre-sample innovations to zero
(the conditional-sum-of-squares convention).  The innovation series X is what
the volatility filter consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DomainError, NonInvertibleError
from .fracdiff import min_root_modulus

__all__ = ["ArmaSpec", "arma_filter", "arma_synthesize", "arma_forecast"]

MAX_ORDER = 5


@dataclass(frozen=True)
class ArmaSpec:
    """ARMA(p, q) mean equation with unconditional mean ``mean``."""

    mean: float = 0.0
    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "ar", tuple(float(v) for v in self.ar))
        object.__setattr__(self, "ma", tuple(float(v) for v in self.ma))
        object.__setattr__(self, "mean", float(self.mean))
        if not np.isfinite(self.mean) or not np.all(np.isfinite(self.ar + self.ma)):
            raise DomainError("ARMA parameters must be finite")
        if len(self.ar) > MAX_ORDER or len(self.ma) > MAX_ORDER:
            raise DomainError(f"ARMA orders are limited to {MAX_ORDER}")
        if min_root_modulus(self.ar) <= 1.0:
            raise NonInvertibleError("AR polynomial has a root inside the unit circle")
        # MA polynomial is 1 + sum_j vartheta_j z^j.
        if min_root_modulus(tuple(-v for v in self.ma)) <= 1.0:
            raise NonInvertibleError("MA polynomial has a root inside the unit circle")

    @property
    def is_trivial(self) -> bool:
        return not self.ar and not self.ma and self.mean == 0.0

    def n_params(self, include_mean: bool = True) -> int:
        return len(self.ar) + len(self.ma) + (1 if include_mean else 0)


def _poly_ar(spec: ArmaSpec) -> np.ndarray:
    return np.r_[1.0, -np.asarray(spec.ar)] if spec.ar else np.array([1.0])


def _poly_ma(spec: ArmaSpec) -> np.ndarray:
    return np.r_[1.0, np.asarray(spec.ma)] if spec.ma else np.array([1.0])


def arma_filter(spec: ArmaSpec, r) -> np.ndarray:
    """Innovations X_t implied by the series ``r`` under ``spec``."""
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise DomainError("r must be a non-empty one-dimensional series")
    if not np.all(np.isfinite(r)):
        raise DomainError("r must be finite")
    centered = r - spec.mean
    if not spec.ar and not spec.ma:
        return centered
    # theta(L) X = phi(L) (r - mu) with zero initial conditions.
    return lfilter(_poly_ar(spec), _poly_ma(spec), centered)


def arma_synthesize(spec: ArmaSpec, x) -> np.ndarray:
    """Inverse of :func:`arma_filter`: rebuild ``r`` from innovations ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("x must be a non-empty one-dimensional series")
    if not spec.ar and not spec.ma:
        return x + spec.mean
    return lfilter(_poly_ma(spec), _poly_ar(spec), x) + spec.mean


def arma_forecast(spec: ArmaSpec, r, innovations, h: int) -> np.ndarray:
    """Minimum-MSE forecasts ``r_{n+1..n+h}`` with future innovations at zero.

    ``innovations`` must be the output of :func:`arma_filter` on the same
    history (lengths are checked).
    """
    if h < 1:
        raise DomainError("h must be >= 1")
    r = np.asarray(r, dtype=float)
    x = np.asarray(innovations, dtype=float)
    if r.shape != x.shape or r.ndim != 1 or r.size == 0:
        raise DomainError("history and innovations must be equal-length series")
    n = r.shape[0]
    p, q = len(spec.ar), len(spec.ma)
    # Extended arrays: observed history followed by forecasts / zeros.
    rext = np.concatenate([r - spec.mean, np.zeros(h)])
    xext = np.concatenate([x, np.zeros(h)])
    for j in range(h):
        t = n + j
        acc = 0.0
        for i in range(1, p + 1):
            if t - i >= 0:
                acc += spec.ar[i - 1] * rext[t - i]
        for k in range(1, q + 1):
            if t - k >= 0:
                acc += spec.ma[k - 1] * xext[t - k]
        rext[t] = acc
    return rext[n:] + spec.mean
