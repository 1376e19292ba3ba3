"""FIEGARCH model types, simulation, volatility filtering and forecasting.

The process is ``X_t = sigma_t Z_t`` with

    ln(sigma_t^2) = omega + [alpha(L) / (beta(L) (1-L)^d)] g(Z_{t-1}),
    g(z) = theta z + gamma (|z| - E|Z|),

where ``alpha(L) = 1 - sum_i alpha_i L^i`` and ``beta(L) = 1 - sum_j beta_j L^j``
(both constant terms equal to 1) and Z is i.i.d. with zero mean and unit
variance (standard Gaussian in this version, so E|Z| = sqrt(2/pi)).

An equivalent shock form moves the polynomials to the left-hand side,

    beta(L) (1-L)^d ln(sigma_t^2) = a + sum_{i=0}^p (psi_i |Z_{t-1-i}| + g_i Z_{t-1-i}),

with ``a = -gamma alpha(1) E|Z|``, ``psi_i = -gamma alpha_i`` and
``g_i = -theta alpha_i`` (indexing includes alpha_0 = -1).  Both forms are
implemented and agree path-by-path for the same seed and truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from . import _kernels
from .errors import DomainError, NonInvertibleError
from .fracdiff import check_invertible, expand_ratio, frac_diff_coeffs, lambda_coeffs

__all__ = [
    "GENERATOR",
    "E_ABS_GAUSSIAN",
    "FiegarchSpec",
    "ZivotWangSpec",
    "SimulatedPath",
    "VolatilityState",
    "g_transform",
    "to_zivot_wang",
    "from_zivot_wang",
    "simulate",
    "simulate_zw",
    "filter_volatility",
    "filter_volatility_zw",
    "forecast_volatility",
]

# Bit-stream contract for all simulation entry points; recorded in outputs.
GENERATOR = "numpy.random.PCG64"

E_ABS_GAUSSIAN = math.sqrt(2.0 / math.pi)

# Practical ceiling on n + burn_in for a single simulated path.
DEFAULT_SIZE_CAP = 50_000_000

# exp() under/overflow guard for log-variances.
_LN_SIGMA2_LIMIT = 700.0


def _finite(x, name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class FiegarchSpec:
    """Full parameterization of a FIEGARCH(p, d, q) model.

    ``alpha`` holds alpha_1..alpha_p and ``beta`` holds beta_1..beta_q; the
    constant terms alpha_0 = beta_0 = -1 of the defining polynomials are
    implicit and never stored.  Construction validates that beta(z) has no
    root on or inside the unit circle and that |d| < 0.5 (d = 0 is allowed
    and gives the short-memory EGARCH(p, q) case).
    """

    omega: float = 0.0
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    theta: float = 0.0
    gamma: float = 0.0
    d: float = 0.0
    innovation: str = "gaussian"
    e_abs_z: float = field(init=False, default=E_ABS_GAUSSIAN)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        for name in ("omega", "theta", "gamma", "d"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _finite([self.omega, self.theta, self.gamma, self.d], "parameters")
        _finite(self.alpha, "alpha")
        if not -0.5 < self.d < 0.5:
            raise DomainError(f"d={self.d} outside (-0.5, 0.5)")
        check_invertible(self.beta)
        if self.innovation != "gaussian":
            raise DomainError(f"unsupported innovation law {self.innovation!r}")
        object.__setattr__(self, "e_abs_z", E_ABS_GAUSSIAN)

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def q(self) -> int:
        return len(self.beta)


@dataclass(frozen=True)
class ZivotWangSpec:
    """Shock-form parameterization: intercept ``a`` plus per-lag coefficients.

    ``psi`` and ``gamma_zw`` run over lags 0..p of |Z| and Z respectively.
    ``omega`` is the level of ln(sigma^2); it is zero in the canonical shock
    form and is kept so the two parameterizations stay exactly equivalent
    when the level is nonzero.
    """

    a: float
    psi: tuple[float, ...]
    gamma_zw: tuple[float, ...]
    beta: tuple[float, ...] = ()
    d: float = 0.0
    omega: float = 0.0
    innovation: str = "gaussian"
    e_abs_z: float = field(init=False, default=E_ABS_GAUSSIAN)

    def __post_init__(self) -> None:
        object.__setattr__(self, "psi", tuple(float(v) for v in self.psi))
        object.__setattr__(self, "gamma_zw", tuple(float(v) for v in self.gamma_zw))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "omega", float(self.omega))
        if len(self.psi) != len(self.gamma_zw) or not self.psi:
            raise DomainError("psi and gamma_zw must have equal length >= 1")
        _finite([self.a, self.d, self.omega], "parameters")
        _finite(self.psi, "psi")
        _finite(self.gamma_zw, "gamma_zw")
        if not -0.5 < self.d < 0.5:
            raise DomainError(f"d={self.d} outside (-0.5, 0.5)")
        check_invertible(self.beta)
        if self.innovation != "gaussian":
            raise DomainError(f"unsupported innovation law {self.innovation!r}")
        object.__setattr__(self, "e_abs_z", E_ABS_GAUSSIAN)

    @property
    def p(self) -> int:
        return len(self.psi) - 1

    @property
    def q(self) -> int:
        return len(self.beta)


@dataclass(frozen=True)
class SimulatedPath:
    """One simulated realization: returns, conditional variances, innovations."""

    x: np.ndarray
    sigma2: np.ndarray
    z: np.ndarray
    n: int
    seed: object
    generator: str = GENERATOR

    def __post_init__(self) -> None:
        for name in ("x", "sigma2", "z"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.x.shape == self.sigma2.shape == self.z.shape == (self.n,)):
            raise DomainError("path arrays must all have length n")
        if np.any(self.sigma2 <= 0.0):
            raise DomainError("sigma2 must be strictly positive")
        recon = np.sqrt(self.sigma2) * self.z
        scale = np.maximum(1.0, np.abs(self.x))
        if np.max(np.abs(recon - self.x) / scale) > 1e-12:
            raise DomainError("x != sqrt(sigma2) * z")


@dataclass(frozen=True)
class VolatilityState:
    """Filtered conditional variances and standardized residuals.

    Produced by :func:`filter_volatility`; consumed by
    :func:`forecast_volatility`, which reuses the same truncation order.
    """

    sigma2: np.ndarray
    z: np.ndarray
    truncation: int

    def __post_init__(self) -> None:
        for name in ("sigma2", "z"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.sigma2.shape[0]


def g_transform(z, theta: float, gamma: float, e_abs_z: float):
    """News-impact transform ``theta z + gamma (|z| - E|Z|)``.

    ``theta`` carries the sign (leverage) effect and ``gamma`` the magnitude
    effect.  Accepts scalars or arrays.
    """
    if e_abs_z < 0:
        raise DomainError("E|Z| must be nonnegative")
    z = np.asarray(z, dtype=float)
    out = theta * z + gamma * (np.abs(z) - e_abs_z)
    return float(out) if out.ndim == 0 else out


def to_zivot_wang(spec: FiegarchSpec) -> ZivotWangSpec:
    """Convert to the shock-form parameterization.

    ``psi_i = -gamma alpha_i`` and ``gamma_i = -theta alpha_i`` over
    0 <= i <= p with alpha_0 = -1, and ``a = -gamma alpha(1) E|Z|`` where
    ``alpha(1) = 1 - sum_i alpha_i``.
    """
    alpha_full = (-1.0,) + spec.alpha
    alpha_at_1 = 1.0 - sum(spec.alpha)
    return ZivotWangSpec(
        a=-spec.gamma * alpha_at_1 * spec.e_abs_z,
        psi=tuple(-spec.gamma * ai for ai in alpha_full),
        gamma_zw=tuple(-spec.theta * ai for ai in alpha_full),
        beta=spec.beta,
        d=spec.d,
        omega=spec.omega,
        innovation=spec.innovation,
    )


def from_zivot_wang(zw: ZivotWangSpec, tol: float = 1e-10) -> FiegarchSpec:
    """Inverse conversion; defined when psi and gamma_zw are proportional.

    The shock form is strictly more general: it only maps back when
    ``psi_i / psi_0 == gamma_i / gamma_0`` for every lag i, which is checked
    within ``tol``.
    """
    gamma = zw.psi[0]
    theta = zw.gamma_zw[0]
    p = zw.p
    alpha = []
    for i in range(1, p + 1):
        cands = []
        if gamma != 0.0:
            cands.append(-zw.psi[i] / gamma)
        if theta != 0.0:
            cands.append(-zw.gamma_zw[i] / theta)
        if not cands:
            if zw.psi[i] != 0.0 or zw.gamma_zw[i] != 0.0:
                raise DomainError("inconsistent shock-form coefficients")
            cands = [0.0]
        if len(cands) == 2 and abs(cands[0] - cands[1]) > tol * max(1.0, abs(cands[0])):
            raise DomainError(
                "psi and gamma_zw are not proportional; no product-form equivalent"
            )
        alpha.append(cands[0])
    spec = FiegarchSpec(
        omega=zw.omega,
        alpha=tuple(alpha),
        beta=zw.beta,
        theta=theta,
        gamma=gamma,
        d=zw.d,
        innovation=zw.innovation,
    )
    a_expect = -gamma * (1.0 - sum(alpha)) * zw.e_abs_z
    if abs(a_expect - zw.a) > tol * max(1.0, abs(a_expect)):
        raise DomainError("intercept a is inconsistent with psi coefficients")
    return spec


def _delayed_filter(driver: np.ndarray, kernel: np.ndarray, delay: int, n: int) -> np.ndarray:
    """out[t] = sum_k kernel[k] driver[t - delay - k], zero before the sample."""
    conv = fftconvolve(driver, kernel)
    out = np.zeros(n)
    avail = min(n - delay, conv.shape[0])
    if avail > 0:
        out[delay : delay + avail] = conv[:avail]
    return out


def _check_size(n: int, burn_in: int, size_cap: int) -> None:
    if n < 1:
        raise DomainError("n must be >= 1")
    if burn_in < 0:
        raise DomainError("burn_in must be >= 0")
    if n + burn_in > size_cap:
        raise DomainError(f"n + burn_in = {n + burn_in} exceeds the cap {size_cap}")


def _finish_path(ln_s2: np.ndarray, z: np.ndarray, n: int, burn_in: int, seed) -> SimulatedPath:
    if np.max(np.abs(ln_s2)) > _LN_SIGMA2_LIMIT:
        raise DomainError("log-variance overflow during simulation")
    sigma2 = np.exp(ln_s2)
    x = np.sqrt(sigma2) * z
    sl = slice(burn_in, burn_in + n)
    return SimulatedPath(x=x[sl], sigma2=sigma2[sl], z=z[sl], n=n, seed=seed)


def simulate(
    spec: FiegarchSpec,
    n: int,
    burn_in: int = 2000,
    M: int = 50_000,
    seed=0,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> SimulatedPath:
    """Simulate a path of length ``n`` after discarding ``burn_in`` points.

    The log-variance recursion is the truncated moving average
    ``ln sigma_t^2 = omega + sum_{k=0}^{M} lambda_k g(Z_{t-1-k})`` with
    pre-sample g values set to their mean (zero).  Deterministic given
    ``seed``; the generator is recorded on the returned path.
    """
    _check_size(n, burn_in, size_cap)
    rng = np.random.default_rng(seed)
    n_total = n + burn_in
    z = rng.standard_normal(n_total)
    gz = g_transform(z, spec.theta, spec.gamma, spec.e_abs_z)
    lam = lambda_coeffs(spec, M).coeffs
    ln_s2 = spec.omega + _delayed_filter(gz, lam, 1, n_total)
    return _finish_path(ln_s2, z, n, burn_in, seed)


def simulate_zw(
    zw: ZivotWangSpec,
    n: int,
    burn_in: int = 2000,
    M: int = 50_000,
    seed=0,
    size_cap: int = DEFAULT_SIZE_CAP,
) -> SimulatedPath:
    """Simulate through the shock form (same innovation stream as :func:`simulate`).

    The inverse operator ``xi(L) = 1 / (beta(L) (1-L)^d)`` is applied per
    shock lag i, clipped to order M - i so the total lag on any innovation
    never exceeds M: with identical seed and truncation this reproduces
    :func:`simulate` to floating-point accuracy for specs related by
    :func:`to_zivot_wang`.
    """
    _check_size(n, burn_in, size_cap)
    rng = np.random.default_rng(seed)
    n_total = n + burn_in
    z = rng.standard_normal(n_total)
    xi = expand_ratio((), zw.beta, zw.d, M)
    psi = np.asarray(zw.psi)
    gzw = np.asarray(zw.gamma_zw)
    # Lane i bundles its slice of the intercept: psi_i(|z|-E|Z|) + g_i z has
    # mean zero, so zero pre-sample initialization matches the product form.
    abs_dev = np.abs(z) - zw.e_abs_z
    ln_s2 = np.full(n_total, zw.omega)
    for i in range(psi.shape[0]):
        lane = psi[i] * abs_dev + gzw[i] * z
        ln_s2 += _delayed_filter(lane, xi[: M - i + 1], 1 + i, n_total)
    # Part of the intercept not absorbed by the lanes (zero when the spec
    # satisfies the proportionality restrictions of the product form).
    resid_a = zw.a + zw.e_abs_z * float(np.sum(psi))
    if resid_a != 0.0:
        csum = np.cumsum(xi)
        idx = np.minimum(np.arange(n_total) - 1, M)
        contrib = np.where(idx >= 0, csum[np.maximum(idx, 0)], 0.0)
        ln_s2 += resid_a * contrib
    return _finish_path(ln_s2, z, n, burn_in, seed)


def filter_volatility(spec: FiegarchSpec, x, M: int = 1000) -> VolatilityState:
    """Recover conditional variances and standardized residuals from data.

    Runs the likelihood-side recursion: at each step the standardized
    residual ``z_t = x_t / sigma_t`` is formed from the variance implied by
    earlier residuals, with pre-sample shock terms set to zero (their
    unconditional mean).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("x must be a non-empty one-dimensional series")
    _finite(x, "x")
    lam = lambda_coeffs(spec, M).coeffs
    ln_s2, z = _kernels.filter_loop(
        x, spec.omega, lam, spec.theta, spec.gamma, spec.e_abs_z
    )
    if np.max(np.abs(ln_s2)) > _LN_SIGMA2_LIMIT or not np.all(np.isfinite(ln_s2)):
        raise DomainError("log-variance overflow while filtering")
    return VolatilityState(sigma2=np.exp(ln_s2), z=z, truncation=int(M))


def filter_volatility_zw(zw: ZivotWangSpec, x, M: int = 1000) -> VolatilityState:
    """Shock-form twin of :func:`filter_volatility` (same clipping as simulate_zw)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise DomainError("x must be a non-empty one-dimensional series")
    _finite(x, "x")
    xi = expand_ratio((), zw.beta, zw.d, M)
    psi = np.asarray(zw.psi)
    gzw = np.asarray(zw.gamma_zw)
    resid_a = zw.a + zw.e_abs_z * float(np.sum(psi))
    csum = np.cumsum(xi)
    idx = np.minimum(np.arange(x.shape[0]) - 1, int(M))
    const_cum = resid_a * np.where(idx >= 0, csum[np.maximum(idx, 0)], 0.0)
    ln_s2, z = _kernels.filter_loop_zw(
        x, zw.omega, xi, psi, gzw, zw.e_abs_z, const_cum
    )
    if np.max(np.abs(ln_s2)) > _LN_SIGMA2_LIMIT or not np.all(np.isfinite(ln_s2)):
        raise DomainError("log-variance overflow while filtering")
    return VolatilityState(sigma2=np.exp(ln_s2), z=z, truncation=int(M))


def forecast_volatility(
    spec: FiegarchSpec,
    state: VolatilityState,
    h: int,
    M: Optional[int] = None,
) -> np.ndarray:
    """h-step-ahead conditional variances ``sigma^2_{n+1..n+h}``.

    Future shock terms are replaced by their zero mean, so the forecast at
    horizon j keeps only the weights ``lambda_k`` with ``k >= j - 1`` applied
    to observed residuals.  The truncation must match the one used for
    filtering (pass ``M`` only to assert it).
    """
    if h < 1:
        raise DomainError("h must be >= 1")
    if M is not None and int(M) != state.truncation:
        raise DomainError(
            f"forecast truncation {M} does not match filtering truncation "
            f"{state.truncation}"
        )
    M = state.truncation
    lam = lambda_coeffs(spec, M).coeffs
    gz = g_transform(state.z, spec.theta, spec.gamma, spec.e_abs_z)
    n = state.n
    out = np.empty(h)
    for j in range(1, h + 1):
        k_lo = j - 1
        k_hi = min(M, n + j - 2)
        if k_hi < k_lo:
            acc = 0.0
        else:
            # g indices n+j-2-k for k = k_lo..k_hi
            seg = gz[n + j - 2 - k_hi : n + j - 1 - k_lo]
            acc = float(np.dot(lam[k_lo : k_hi + 1], seg[::-1]))
        out[j - 1] = spec.omega + acc
    if np.max(np.abs(out)) > _LN_SIGMA2_LIMIT:
        raise DomainError("log-variance overflow while forecasting")
    return np.exp(out)
