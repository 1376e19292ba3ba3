import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiegarch.errors import DomainError, NonInvertibleError
from fiegarch.fracdiff import lambda_coeffs
from fiegarch.model import (
    E_ABS_GAUSSIAN,
    FiegarchSpec,
    SimulatedPath,
    ZivotWangSpec,
    filter_volatility,
    filter_volatility_zw,
    forecast_volatility,
    from_zivot_wang,
    g_transform,
    simulate,
    simulate_zw,
    to_zivot_wang,
)
from fiegarch.montecarlo import table41_models


def m1():
    return FiegarchSpec(omega=0.0, beta=(0.45,), theta=-0.14, gamma=0.38, d=0.45)


def m2():
    return FiegarchSpec(omega=0.0, alpha=(0.80,), beta=(0.90,), theta=0.04,
                        gamma=0.38, d=0.45)


class TestSpecs:
    def test_table41_specs_validate(self):
        models = table41_models()
        assert set(models) == {"M1", "M2", "M3", "M4", "M5"}
        assert models["M3"].q == 4 and models["M3"].p == 0
        assert models["M2"].p == 1

    def test_beta_root_inside_rejected(self):
        with pytest.raises(NonInvertibleError):
            FiegarchSpec(omega=0.0, beta=(1.2,), theta=0.1, gamma=0.2, d=0.1)

    def test_d_boundary_rejected(self):
        with pytest.raises(DomainError):
            FiegarchSpec(omega=0.0, d=0.5)

    def test_non_gaussian_tag_rejected(self):
        with pytest.raises(DomainError):
            FiegarchSpec(omega=0.0, innovation="student-t")

    def test_e_abs_z_stored(self):
        assert m1().e_abs_z == pytest.approx(math.sqrt(2 / math.pi), abs=0)


class TestGTransform:
    def test_m1_at_zero(self):
        # theta*0 + gamma*(0 - E|Z|) for the M1 parameters
        val = g_transform(0.0, -0.14, 0.38, E_ABS_GAUSSIAN)
        assert val == pytest.approx(-0.38 * math.sqrt(2 / math.pi), rel=1e-12)
        assert val == pytest.approx(-0.30320, abs=1e-5)

    @given(st.floats(-50, 50))
    def test_null_transform(self, z):
        assert g_transform(z, 0.0, 0.0, E_ABS_GAUSSIAN) == 0.0

    def test_pure_sign_term(self):
        assert g_transform(1.0, 1.0, 0.0, 123.0) == 1.0

    def test_negative_e_abs_rejected(self):
        with pytest.raises(DomainError):
            g_transform(1.0, 0.1, 0.1, -1.0)

    def test_vectorized(self):
        z = np.array([-1.0, 0.0, 2.0])
        out = g_transform(z, 0.5, 0.25, 0.8)
        np.testing.assert_allclose(out, 0.5 * z + 0.25 * (np.abs(z) - 0.8))


class TestZivotWangConversion:
    def test_m1_example(self):
        zw = to_zivot_wang(m1())
        assert zw.psi == (0.38,)
        assert zw.gamma_zw == (-0.14,)
        assert zw.a == pytest.approx(-0.38 * math.sqrt(2 / math.pi), rel=1e-12)
        assert zw.a == pytest.approx(-0.30320, abs=1e-5)

    def test_m2_example(self):
        zw = to_zivot_wang(m2())
        np.testing.assert_allclose(zw.psi, (0.38, -0.304), rtol=1e-12)
        np.testing.assert_allclose(zw.gamma_zw, (0.04, -0.032), rtol=1e-12)
        assert zw.a == pytest.approx(-0.38 * (1 - 0.80) * math.sqrt(2 / math.pi),
                                     rel=1e-12)

    def test_degenerate_g(self):
        zw = to_zivot_wang(FiegarchSpec(omega=0.1, beta=(0.3,), theta=0.0,
                                        gamma=0.0, d=0.2))
        assert zw.a == 0.0
        assert zw.psi == (0.0,) and zw.gamma_zw == (0.0,)

    @pytest.mark.parametrize("name", ["M1", "M2", "M3", "M4", "M5"])
    def test_round_trip(self, name):
        spec = table41_models()[name]
        back = from_zivot_wang(to_zivot_wang(spec))
        assert back.theta == pytest.approx(spec.theta, rel=1e-12)
        assert back.gamma == pytest.approx(spec.gamma, rel=1e-12)
        np.testing.assert_allclose(back.alpha, spec.alpha, rtol=1e-10)
        assert back.beta == spec.beta and back.d == spec.d

    def test_non_proportional_rejected(self):
        zw = ZivotWangSpec(a=-0.3, psi=(0.38, -0.3), gamma_zw=(-0.14, 0.2),
                           beta=(0.4,), d=0.3)
        with pytest.raises(DomainError):
            from_zivot_wang(zw)


class TestSimulate:
    def test_degenerate_g_constant_volatility(self):
        spec = FiegarchSpec(omega=0.7, beta=(0.4,), theta=0.0, gamma=0.0, d=0.3)
        path = simulate(spec, 300, burn_in=50, M=500, seed=5)
        np.testing.assert_allclose(path.sigma2, math.exp(0.7), rtol=1e-14)

    def test_omega_zero_gives_standard_gaussian(self):
        spec = FiegarchSpec(omega=0.0, theta=0.0, gamma=0.0, d=0.0)
        path = simulate(spec, 50_000, burn_in=10, M=10, seed=5)
        np.testing.assert_allclose(path.sigma2, 1.0, rtol=0)
        assert abs(path.x.mean()) < 4 / math.sqrt(50_000)
        assert abs(path.x.var() - 1.0) < 0.03

    def test_m1_moments(self):
        # mean of ln sigma^2 is omega.  Under d = 0.45 the variance of the
        # sample mean barely shrinks with n, so the standard error is taken
        # from the exact linear-filter representation: the sample mean is
        # sum_s w_s g_s with computable weights, Var = Var(g) sum w_s^2.
        n, burn_in, M = 2000, 2000, 50_000
        spec = m1()
        path = simulate(spec, n, burn_in=burn_in, M=M, seed=1729)
        lns2 = np.log(path.sigma2)

        lam = lambda_coeffs(spec, M).coeffs
        csum = np.concatenate([[0.0], np.cumsum(lam)])  # csum[k] = sum_{j<k} lam_j
        var_g = 0.14**2 + 0.38**2 * (1 - 2 / math.pi)
        s_indices = np.arange(burn_in + n - 1)  # g draws feeding the window
        lo = np.clip(burn_in - 1 - s_indices, 0, M + 1)
        hi = np.clip(burn_in + n - 1 - s_indices, 0, M + 1)
        weights = (csum[hi] - csum[lo]) / n
        se_mean = math.sqrt(var_g * float(np.sum(weights**2)))
        assert abs(lns2.mean() - 0.0) < 3 * se_mean

        gz = g_transform(path.z, -0.14, 0.38, E_ABS_GAUSSIAN)
        var_expected = var_g
        assert abs(gz.var() - var_expected) < 0.05 * var_expected

    def test_determinism(self):
        a = simulate(m1(), 500, burn_in=100, M=1000, seed=99)
        b = simulate(m1(), 500, burn_in=100, M=1000, seed=99)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.sigma2, b.sigma2)
        assert np.array_equal(a.z, b.z)

    def test_path_identity_x_sigma_z(self):
        path = simulate(m2(), 400, burn_in=100, M=800, seed=3)
        np.testing.assert_allclose(path.x, np.sqrt(path.sigma2) * path.z,
                                   rtol=0, atol=1e-12)

    def test_invalid_sizes(self):
        with pytest.raises(DomainError):
            simulate(m1(), 0)
        with pytest.raises(DomainError):
            simulate(m1(), 10, burn_in=-1)
        with pytest.raises(DomainError):
            simulate(m1(), 10, burn_in=0, M=10, seed=1, size_cap=5)

    def test_path_invariant_enforced(self):
        with pytest.raises(DomainError):
            SimulatedPath(x=np.ones(3), sigma2=np.ones(3), z=np.full(3, 2.0),
                          n=3, seed=0)


class TestParameterizationEquivalence:
    @pytest.mark.parametrize("name", ["M1", "M2", "M3", "M4", "M5"])
    def test_same_seed_same_log_variance(self, name):
        spec = table41_models()[name]
        a = simulate(spec, 2000, burn_in=500, M=3000, seed=2024)
        b = simulate_zw(to_zivot_wang(spec), 2000, burn_in=500, M=3000, seed=2024)
        assert np.max(np.abs(np.log(a.sigma2) - np.log(b.sigma2))) <= 1e-10
        assert np.array_equal(a.z, b.z)

    def test_zw_degenerate_constant(self):
        zw = ZivotWangSpec(a=0.0, psi=(0.0,), gamma_zw=(0.0,), beta=(0.5,), d=0.2,
                           omega=0.4)
        path = simulate_zw(zw, 200, burn_in=10, M=100, seed=8)
        np.testing.assert_allclose(path.sigma2, math.exp(0.4), rtol=1e-14)

    def test_zw_single_term_identity(self):
        # psi_0 = 1, d = 0, q = 0: ln sigma_t^2 = a + |Z_{t-1}| after the
        # zero-initialized first step
        zw = ZivotWangSpec(a=-0.5, psi=(1.0,), gamma_zw=(0.0,))
        path = simulate_zw(zw, 300, burn_in=0, M=50, seed=12)
        expected = -0.5 + np.abs(path.z[:-1])
        np.testing.assert_allclose(np.log(path.sigma2[1:]), expected, atol=1e-12)


class TestFilterVolatility:
    def test_recovers_simulated_volatility_shared_information(self):
        # with no burn-in the filter sees the path's whole history, so the
        # recursion reproduces the simulated variances to rounding error
        spec = m1()
        path = simulate(spec, 3000, burn_in=0, M=2000, seed=7)
        state = filter_volatility(spec, path.x, 2000)
        cut = max(50, 2000 // 10)
        assert np.max(np.abs(state.sigma2 - path.sigma2)[cut:]) < 1e-8
        np.testing.assert_allclose(state.sigma2, path.sigma2, rtol=1e-10)

    def test_constant_for_degenerate_g(self):
        spec = FiegarchSpec(omega=-0.3, beta=(0.2,), theta=0.0, gamma=0.0, d=0.1)
        rng = np.random.default_rng(0)
        state = filter_volatility(spec, rng.standard_normal(200), 100)
        np.testing.assert_allclose(state.sigma2, math.exp(-0.3), rtol=1e-14)

    def test_zero_data_deterministic(self):
        spec = m1()
        M = 300
        state = filter_volatility(spec, np.zeros(200), M)
        lam = lambda_coeffs(spec, M).coeffs
        g0 = g_transform(0.0, spec.theta, spec.gamma, spec.e_abs_z)
        partial = np.concatenate([[0.0], np.cumsum(lam)])
        expected = np.array([
            spec.omega + g0 * partial[min(t - 1, M) + 1 if t >= 1 else 0]
            for t in range(200)
        ])
        np.testing.assert_allclose(np.log(state.sigma2), expected, atol=1e-12)
        assert np.all(np.isfinite(state.sigma2))

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            filter_volatility(m1(), np.array([1.0, np.nan]), 10)

    def test_zw_filter_matches_product_form(self):
        spec = m2()
        path = simulate(spec, 800, burn_in=200, M=1000, seed=21)
        a = filter_volatility(spec, path.x, 1000)
        b = filter_volatility_zw(to_zivot_wang(spec), path.x, 1000)
        np.testing.assert_allclose(b.sigma2, a.sigma2, rtol=1e-12)
        np.testing.assert_allclose(b.z, a.z, rtol=1e-12)


class TestForecastVolatility:
    def test_degenerate_g_flat(self):
        spec = FiegarchSpec(omega=0.5, beta=(0.4,), theta=0.0, gamma=0.0, d=0.2)
        state = filter_volatility(spec, np.random.default_rng(1).standard_normal(300),
                                  500)
        fc = forecast_volatility(spec, state, 10)
        np.testing.assert_allclose(fc, math.exp(0.5), rtol=1e-14)

    def test_egarch_one_geometric_decay(self):
        # d = 0, q = 1: the log-variance forecast decays to omega at rate
        # beta_1 (up to the kernel tail beyond the truncation order)
        spec = FiegarchSpec(omega=0.2, beta=(0.6,), theta=-0.1, gamma=0.3, d=0.0)
        path = simulate(spec, 500, burn_in=100, M=800, seed=33)
        state = filter_volatility(spec, path.x, 800)
        fc = np.log(forecast_volatility(spec, state, 12))
        ratios = (fc[1:] - 0.2) / (fc[:-1] - 0.2)
        np.testing.assert_allclose(ratios, 0.6, atol=1e-10)

    def test_h1_equals_filter_extended_one_step(self):
        spec = m1()
        path = simulate(spec, 801, burn_in=100, M=900, seed=44)
        full = filter_volatility(spec, path.x, 900)
        state = filter_volatility(spec, path.x[:800], 900)
        fc = forecast_volatility(spec, state, 1)
        assert fc[0] == pytest.approx(full.sigma2[800], rel=1e-12)

    def test_truncation_mismatch_rejected(self):
        spec = m1()
        state = filter_volatility(spec, np.ones(100), 50)
        with pytest.raises(DomainError):
            forecast_volatility(spec, state, 2, M=60)

    def test_bad_horizon(self):
        spec = m1()
        state = filter_volatility(spec, np.ones(100), 50)
        with pytest.raises(DomainError):
            forecast_volatility(spec, state, 0)

    def test_forecast_varies_with_h_for_persistent_models(self):
        spec = m1()
        path = simulate(spec, 600, burn_in=100, M=700, seed=55)
        state = filter_volatility(spec, path.x, 700)
        fc = forecast_volatility(spec, state, 10)
        assert np.std(np.sqrt(fc)) > 0


class TestWhiteNoiseProperty:
    def test_g_of_z_is_white_noise(self):
        # smaller companion to the acceptance-scale check
        rng = np.random.default_rng(314)
        z = rng.standard_normal(20_000)
        g = g_transform(z, -0.14, 0.38, E_ABS_GAUSSIAN)
        n = g.shape[0]
        assert abs(g.mean()) < 4 * g.std() / math.sqrt(n)
        centered = g - g.mean()
        denom = np.dot(centered, centered)
        for lag in range(1, 21):
            acf = np.dot(centered[lag:], centered[:-lag]) / denom
            assert abs(acf) < 4 / math.sqrt(n)
