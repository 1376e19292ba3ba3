"""Fractional differencing coefficients and truncated power-series arithmetic.

The log-volatility equation of the long-memory model applies the filter
``alpha(L) / (beta(L) (1-L)^d)`` to past shocks.  This module generates the
coefficients of ``(1-L)^d`` by the stable multiplicative recursion (the Gamma
closed form overflows past k ~ 170 and is used only as a test oracle) and
provides the series product / reciprocal needed to expand the full ratio into
the ``lambda_k`` weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, NonInvertibleError, SingularSeriesError

if TYPE_CHECKING:  # pragma: no cover
    from .model import FiegarchSpec

__all__ = [
    "CoefficientSeries",
    "frac_diff_coeffs",
    "series_invert",
    "series_mul",
    "lambda_coeffs",
    "check_invertible",
    "min_root_modulus",
]

# Roots of beta(z) must satisfy |z| > 1 + UNIT_ROOT_TOL ("strictly outside").
UNIT_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class CoefficientSeries:
    """Coefficients of a truncated power series, lag 0 first.

    ``coeffs[k]`` multiplies ``L**k``; the length is ``truncation_order + 1``.
    Instances are immutable (the backing array is marked read-only).
    """

    coeffs: np.ndarray
    truncation_order: int

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.coeffs, dtype=float))
        if arr.ndim != 1:
            raise DomainError("coefficient series must be one-dimensional")
        if self.truncation_order < 0:
            raise DomainError("truncation order must be >= 0")
        if arr.shape[0] != self.truncation_order + 1:
            raise DomainError(
                f"length {arr.shape[0]} does not match truncation order "
                f"{self.truncation_order}"
            )
        if not np.all(np.isfinite(arr)):
            raise DomainError("coefficient series contains non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __getitem__(self, k):
        return self.coeffs[k]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.coeffs
        return self.coeffs.astype(dtype)


def _as_coeff_array(s: "CoefficientSeries | Sequence[float]") -> np.ndarray:
    if isinstance(s, CoefficientSeries):
        return s.coeffs
    arr = np.asarray(s, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("expected a non-empty one-dimensional coefficient sequence")
    return arr


def frac_diff_coeffs(d: float, M: int) -> CoefficientSeries:
    """Coefficients ``c_k`` of ``(1-L)^d = sum_k c_k L^k`` up to order ``M``.

    Computed by the multiplicative recursion ``c_0 = 1``,
    ``c_k = c_{k-1} (k-1-d)/k``, which is stable for any order.  ``d`` must
    lie in the stationary-invertible range (-0.5, 0.5).
    """
    d = float(d)
    if not np.isfinite(d):
        raise DomainError("d must be finite")
    if not -0.5 < d < 0.5:
        raise DomainError(f"d={d} outside the stationary-invertible range (-0.5, 0.5)")
    M = int(M)
    if M < 0:
        raise DomainError("truncation order must be >= 0")
    return CoefficientSeries(_kernels.frac_recursion(d, M), M)


def series_invert(b: "CoefficientSeries | Sequence[float]", M: int) -> CoefficientSeries:
    """Reciprocal series ``c`` with ``(b * c)`` equal to 1 through order ``M``."""
    barr = _as_coeff_array(b)
    M = int(M)
    if M < 0:
        raise DomainError("truncation order must be >= 0")
    if barr[0] == 0.0:
        raise SingularSeriesError("cannot invert a series with zero constant term")
    c = np.zeros(M + 1)
    c[0] = 1.0 / barr[0]
    nb = barr.shape[0]
    for k in range(1, M + 1):
        jmax = min(k, nb - 1)
        if jmax >= 1:
            # sum_j b_j c_{k-j} for j = 1..jmax
            acc = np.dot(barr[1 : jmax + 1], c[k - jmax : k][::-1])
            c[k] = -acc / barr[0]
    return CoefficientSeries(c, M)


def series_mul(
    a: "CoefficientSeries | Sequence[float]",
    b: "CoefficientSeries | Sequence[float]",
    M: int,
) -> CoefficientSeries:
    """Cauchy product of two series, truncated at order ``M``."""
    aarr = _as_coeff_array(a)
    barr = _as_coeff_array(b)
    M = int(M)
    if M < 0:
        raise DomainError("truncation order must be >= 0")
    full = np.convolve(aarr, barr)
    out = np.zeros(M + 1)
    upto = min(M + 1, full.shape[0])
    out[:upto] = full[:upto]
    return CoefficientSeries(out, M)


def min_root_modulus(beta: Sequence[float]) -> float:
    """Smallest root modulus of ``1 - beta_1 z - ... - beta_q z^q``.

    Returns ``inf`` for the empty polynomial (q = 0).  Roots are taken from
    the reversed polynomial, which is monic, so the companion matrix stays
    well-scaled even for vanishing coefficients.
    """
    b = np.asarray(beta, dtype=float)
    if b.size == 0 or not np.any(b):
        return np.inf
    # w^q p(1/w) = w^q - b_1 w^{q-1} - ... - b_q; its roots are 1/z.
    wroots = np.roots(np.r_[1.0, -b])
    wmax = float(np.abs(wroots).max())
    if wmax == 0.0:
        return np.inf
    with np.errstate(over="ignore"):
        return float(1.0 / wmax)


def check_invertible(beta: Sequence[float], what: str = "beta") -> None:
    """Raise unless all roots of the lag polynomial are outside the unit circle."""
    b = np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(b)):
        raise DomainError(f"{what} coefficients must be finite")
    m = min_root_modulus(b)
    if m <= 1.0 + UNIT_ROOT_TOL:
        raise NonInvertibleError(
            f"{what}(z) has a root of modulus {m:.10g} on or inside the unit circle"
        )


def lambda_coeffs(spec: "FiegarchSpec", M: int) -> CoefficientSeries:
    """Weights ``lambda_k`` of ``alpha(L) / (beta(L) (1-L)^d)`` up to order ``M``.

    ``lambda_0 = 1`` under the convention that both polynomials have constant
    term 1.  For ``d > 0`` the weights decay hyperbolically (k^{d-1}), the
    long-memory signature of the model.
    """
    return CoefficientSeries(
        expand_ratio(spec.alpha, spec.beta, spec.d, M), int(M)
    )


def expand_ratio(
    alpha: Sequence[float], beta: Sequence[float], d: float, M: int
) -> np.ndarray:
    """Raw-array version of :func:`lambda_coeffs` used in estimation hot paths.

    O(M (p + q + 1)): the inverse fractional filter is generated directly by
    recursion and division by ``beta(L)`` is long division, avoiding the
    O(M^2) general series inversion.
    """
    M = int(M)
    if M < 0:
        raise DomainError("truncation order must be >= 0")
    check_invertible(beta)
    # (1-L)^{-d} has the same recursion with d negated.
    psi = frac_diff_coeffs(-float(d), M).coeffs
    a = np.asarray(alpha, dtype=float)
    if a.size:
        apoly = np.r_[1.0, -a]
        num = np.ascontiguousarray(np.convolve(psi, apoly)[: M + 1])
    else:
        num = psi
    b = np.asarray(beta, dtype=float)
    if not b.size:
        return num.copy()
    return _kernels.poly_divide(num, b)
