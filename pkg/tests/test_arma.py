import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiegarch.arma import ArmaSpec, arma_filter, arma_forecast, arma_synthesize
from fiegarch.errors import DomainError, NonInvertibleError


class TestArmaSpec:
    def test_white_noise_spec(self):
        spec = ArmaSpec()
        assert spec.is_trivial

    def test_rejects_unit_root_ar(self):
        with pytest.raises(NonInvertibleError):
            ArmaSpec(ar=(1.0,))

    def test_rejects_noninvertible_ma(self):
        with pytest.raises(NonInvertibleError):
            ArmaSpec(ma=(-1.5,))

    def test_rejects_large_orders(self):
        with pytest.raises(DomainError):
            ArmaSpec(ar=(0.1,) * 6)


class TestArmaFilter:
    def test_identity_for_trivial_spec(self):
        r = np.array([0.5, -0.2, 0.9])
        assert np.array_equal(arma_filter(ArmaSpec(), r), r)

    def test_ma1_recovers_known_noise(self):
        # generate from the market-index MA(1) and invert
        spec = ArmaSpec(mean=0.0, ma=(-0.078,))
        rng = np.random.default_rng(11)
        noise = rng.standard_normal(600)
        r = arma_synthesize(spec, noise)
        rec = arma_filter(spec, r)
        assert np.max(np.abs(rec - noise)[100:]) < 1e-8

    def test_ar1_fixed_point(self):
        # the fitted portfolio mean model held at its unconditional mean
        spec = ArmaSpec(mean=-0.001, ar=(-0.173,))
        r = np.full(50, -0.001)
        innov = arma_filter(spec, r)
        np.testing.assert_allclose(innov[1:], 0.0, atol=1e-15)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            arma_filter(ArmaSpec(), np.array([1.0, np.inf]))

    @given(
        st.lists(st.floats(-0.6, 0.6), min_size=0, max_size=2),
        st.lists(st.floats(-0.6, 0.6), min_size=0, max_size=2),
        st.floats(-0.05, 0.05),
        st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_filter_synthesize_round_trip(self, ar, ma, mean, seed):
        try:
            spec = ArmaSpec(mean=mean, ar=tuple(ar), ma=tuple(ma))
        except NonInvertibleError:
            return
        r = np.random.default_rng(seed).standard_normal(150)
        back = arma_synthesize(spec, arma_filter(spec, r))
        np.testing.assert_allclose(back, r, atol=1e-10)


class TestArmaForecast:
    def test_ma1_forecasts_flat_after_one_step(self):
        spec = ArmaSpec(mean=0.002, ma=(-0.3,))
        rng = np.random.default_rng(5)
        r = arma_synthesize(spec, rng.standard_normal(300))
        innov = arma_filter(spec, r)
        fc = arma_forecast(spec, r, innov, 10)
        np.testing.assert_allclose(fc[1:], 0.002, atol=1e-15)

    def test_ar1_geometric_decay_closed_form(self):
        spec = ArmaSpec(mean=0.1, ar=(0.7,))
        rng = np.random.default_rng(6)
        r = arma_synthesize(spec, rng.standard_normal(200))
        innov = arma_filter(spec, r)
        h = 12
        fc = arma_forecast(spec, r, innov, h)
        hh = np.arange(1, h + 1)
        expected = 0.1 + 0.7**hh * (r[-1] - 0.1)
        np.testing.assert_allclose(fc, expected, rtol=1e-12)

    def test_portfolio_ar1_printed_constancy(self):
        # phi = -0.173 cubes to ~5e-3, so from h = 3 the forecast is the
        # intercept at the 4-decimal resolution of a report table
        spec = ArmaSpec(mean=-0.001, ar=(-0.173,))
        rng = np.random.default_rng(7)
        r = arma_synthesize(spec, 0.012 * rng.standard_normal(400))
        innov = arma_filter(spec, r)
        fc = arma_forecast(spec, r, innov, 10)
        rounded = np.round(fc[2:], 4)
        assert np.all(rounded == rounded[0])
        assert not np.all(np.round(fc, 4) == np.round(fc, 4)[0]) or abs(r[-1] + 0.001) < 1e-4

    @pytest.mark.parametrize("phi,h", [(0.5, 500), (-0.9, 500), (0.95, 500),
                                       (0.99, 2500)])
    def test_long_horizon_converges_to_mean(self, phi, h):
        # |forecast - mean| <= |phi|^h |r_n - mean|, so the horizon needed
        # for a 1e-6 approach grows with the AR root (phi = 0.99 needs
        # ~2500 steps from a typical state, not 500)
        spec = ArmaSpec(mean=0.3, ar=(phi,), ma=(0.4,))
        rng = np.random.default_rng(8)
        r = arma_synthesize(spec, rng.standard_normal(400))
        innov = arma_filter(spec, r)
        fc = arma_forecast(spec, r, innov, h)
        dev = np.abs(fc - 0.3)
        bound = np.abs(phi) ** np.arange(1, h + 1) * (abs(r[-1] - 0.3) + 1.0)
        assert np.all(dev[2:] <= bound[2:] + 1e-12)
        assert dev[-1] < 1e-6

    def test_bad_horizon(self):
        with pytest.raises(DomainError):
            arma_forecast(ArmaSpec(), np.ones(10), np.ones(10), 0)

    def test_mismatched_history(self):
        with pytest.raises(DomainError):
            arma_forecast(ArmaSpec(), np.ones(10), np.ones(9), 1)
