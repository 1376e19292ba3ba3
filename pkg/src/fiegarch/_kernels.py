"""Numba-compiled sequential recursions.

The volatility filter is data-dependent (each standardized residual feeds the
next conditional variance), so it cannot be vectorized; these loops are the
hot path of quasi-likelihood evaluation.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def frac_recursion(d, M):
    """c_0 = 1, c_k = c_{k-1} (k-1-d)/k: coefficients of (1-L)^d."""
    c = np.empty(M + 1)
    c[0] = 1.0
    for k in range(1, M + 1):
        c[k] = c[k - 1] * ((k - 1 - d) / k)
    return c


@njit(cache=True)
def poly_divide(num, b):
    """Long division of a truncated series by ``1 - sum_j b_j L^j``."""
    M = num.shape[0] - 1
    q = b.shape[0]
    out = num.copy()
    for k in range(1, M + 1):
        jmax = q if q < k else k
        acc = out[k]
        for j in range(1, jmax + 1):
            acc += b[j - 1] * out[k - j]
        out[k] = acc
    return out


@njit(cache=True)
def filter_loop(x, omega, lam, theta, gamma, e_abs_z):
    """ln sigma^2_t = omega + sum_{k<=min(M,t-2)} lam_k g(z_{t-1-k}), z_t = x_t/sigma_t."""
    n = x.shape[0]
    M = lam.shape[0] - 1
    ghist = np.empty(n)
    ln_s2 = np.empty(n)
    z = np.empty(n)
    for t in range(n):
        acc = omega
        K = t - 1
        if K > M:
            K = M
        for k in range(K + 1):
            acc += lam[k] * ghist[t - 1 - k]
        ln_s2[t] = acc
        zt = x[t] * np.exp(-0.5 * acc)
        z[t] = zt
        ghist[t] = theta * zt + gamma * (abs(zt) - e_abs_z)
    return ln_s2, z


@njit(cache=True)
def filter_loop_zw(x, omega, xi, psi, gzw, e_abs_z, const_cum):
    """Same recursion driven through the alternative shock form.

    Lane i applies the inverse operator ``xi`` (clipped to order M - i so the
    total lag never exceeds M) to ``psi_i (|z| - E|Z|) + gzw_i z`` delayed by
    1 + i steps.  ``const_cum[t]`` carries the (usually zero) part of the
    intercept not absorbed by the lanes.
    """
    n = x.shape[0]
    M = xi.shape[0] - 1
    p1 = psi.shape[0]
    lanes = np.empty((p1, n))
    ln_s2 = np.empty(n)
    z = np.empty(n)
    for t in range(n):
        acc = omega + const_cum[t]
        for i in range(p1):
            kk = t - 1 - i
            jcap = M - i
            jmax = kk if kk < jcap else jcap
            for j in range(jmax + 1):
                acc += xi[j] * lanes[i, kk - j]
        ln_s2[t] = acc
        zt = x[t] * np.exp(-0.5 * acc)
        z[t] = zt
        for i in range(p1):
            lanes[i, t] = psi[i] * (abs(zt) - e_abs_z) + gzw[i] * zt
    return ln_s2, z
