import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from evtgan.errors import DataError, DegenerateDataError, ParameterError
from evtgan.gev import (
    FitReport,
    GevParams,
    PENALTY_BASE,
    fit_gev_mle,
    gev_cdf,
    gev_neg_log_likelihood,
    gev_quantile,
    return_level,
)


def sample_gev(params, n, seed):
    u = np.random.default_rng(seed).random(n)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    return gev_quantile(u, params)


class TestParams:
    def test_sigma_must_be_positive(self):
        with pytest.raises(ParameterError):
            GevParams(0.0, 0.0, 0.1)
        with pytest.raises(ParameterError):
            GevParams(0.0, -1.0, 0.1)

    def test_support_endpoints(self):
        lo, hi = GevParams(0.0, 1.0, -0.5).support()
        assert lo == -math.inf and hi == pytest.approx(2.0)
        lo, hi = GevParams(0.0, 1.0, 0.5).support()
        assert lo == pytest.approx(-2.0) and hi == math.inf
        lo, hi = GevParams(0.0, 1.0, 0.0).support()
        assert lo == -math.inf and hi == math.inf

    def test_converged_report_requires_finite_nll(self):
        with pytest.raises(ParameterError):
            FitReport(GevParams(0, 1, 0), nll=math.inf, iterations=1, converged=True)


class TestCdf:
    def test_gumbel_at_location(self):
        assert gev_cdf(0.0, (0.0, 1.0, 0.0)) == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_beyond_finite_upper_endpoint(self):
        assert gev_cdf(10.0, (0.0, 1.0, -0.5)) == 1.0

    def test_below_finite_lower_endpoint(self):
        assert gev_cdf(-10.0, (0.0, 1.0, 0.5)) == 0.0

    def test_heavy_tail_hand_value(self):
        # exp(-(1 + 0.5*1)**(-2)) evaluated by hand
        assert gev_cdf(1.0, (0.0, 1.0, 0.5)) == pytest.approx(math.exp(-1.5 ** -2), abs=1e-12)

    def test_matches_scipy(self):
        # scipy.stats.genextreme uses the opposite sign convention for shape
        rng = np.random.default_rng(0)
        for xi in (-0.4, -0.1, 0.0, 0.2, 0.7):
            p = GevParams(1.3, 2.1, xi)
            z = rng.uniform(-10, 20, size=40)
            expected = stats.genextreme.cdf(z, c=-xi, loc=1.3, scale=2.1)
            np.testing.assert_allclose(gev_cdf(z, p), expected, atol=1e-12)

    def test_monotone_on_random_grids(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            p = GevParams(rng.normal(), math.exp(rng.normal()), rng.uniform(-0.9, 0.9))
            z = np.sort(rng.uniform(-30, 30, size=100))
            cdf = gev_cdf(z, p)
            assert np.all(np.diff(cdf) >= 0)
            assert np.all((cdf >= 0) & (cdf <= 1))

    def test_continuity_at_gumbel_switch(self):
        z = np.linspace(-5, 5, 41)
        for sign in (+1, -1):
            near = gev_cdf(z, (0.0, 1.0, sign * 1e-8))
            at = gev_cdf(z, (0.0, 1.0, 0.0))
            assert np.max(np.abs(near - at)) < 1e-6


class TestQuantile:
    def test_inverse_of_gumbel_point(self):
        assert gev_quantile(math.exp(-1.0), (0.0, 1.0, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_gumbel_median(self):
        assert gev_quantile(0.5, (0.0, 1.0, 0.0)) == pytest.approx(
            -math.log(math.log(2.0)), abs=1e-12
        )

    def test_domain_errors(self):
        for q in (0.0, 1.0, -0.2, 1.3):
            with pytest.raises(DataError):
                gev_quantile(q, (0.0, 1.0, 0.1))

    @settings(max_examples=60, deadline=None)
    @given(
        z=st.floats(-20.0, 20.0),
        mu=st.floats(-5.0, 5.0),
        log_sigma=st.floats(-1.5, 1.5),
        xi=st.floats(-0.9, 0.9),
    )
    def test_round_trip(self, z, mu, log_sigma, xi):
        p = GevParams(mu, math.exp(log_sigma), xi)
        lo, hi = p.support()
        if not lo < z < hi:
            return
        q = gev_cdf(z, p)
        if not 1e-300 < q < 1.0:  # underflow beyond representable probabilities
            return
        assert abs(gev_quantile(q, p) - z) < 1e-8 * (1.0 + abs(z))


class TestNll:
    def test_gumbel_density_at_zero(self):
        assert gev_neg_log_likelihood([0.0], (0.0, 1.0, 0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_out_of_support_penalty(self):
        assert gev_neg_log_likelihood([3.0], (0.0, 1.0, -0.5)) >= PENALTY_BASE

    def test_empty_data_error(self):
        with pytest.raises(DataError):
            gev_neg_log_likelihood([], (0.0, 1.0, 0.0))

    def test_matches_scipy_logpdf(self):
        rng = np.random.default_rng(2)
        for xi in (-0.3, 0.0, 0.4):
            p = GevParams(0.5, 1.5, xi)
            data = sample_gev(p, 200, seed=3)
            expected = -np.sum(stats.genextreme.logpdf(data, c=-xi, loc=0.5, scale=1.5))
            assert gev_neg_log_likelihood(data, p) == pytest.approx(expected, rel=1e-10)


class TestFit:
    def test_recovers_known_parameters(self):
        true = GevParams(10.0, 2.0, -0.2)
        report = fit_gev_mle(sample_gev(true, 5000, seed=7))
        assert report.converged
        assert report.params.mu == pytest.approx(10.0, abs=0.15)
        assert report.params.sigma == pytest.approx(2.0, abs=0.15)
        assert report.params.xi == pytest.approx(-0.2, abs=0.05)

    def test_fitted_nll_beats_truth(self):
        true = GevParams(3.0, 1.0, 0.1)
        data = sample_gev(true, 800, seed=11)
        report = fit_gev_mle(data)
        assert report.nll <= gev_neg_log_likelihood(data, true) + 1e-9

    def test_degenerate_data(self):
        with pytest.raises(DegenerateDataError):
            fit_gev_mle([5.0] * 50)

    def test_too_few_distinct_values(self):
        with pytest.raises(DataError):
            fit_gev_mle([1.0, 2.0, 3.0] * 10)

    def test_deterministic(self):
        data = sample_gev(GevParams(0.0, 1.0, 0.2), 500, seed=13)
        a = fit_gev_mle(data)
        b = fit_gev_mle(data)
        assert (a.params, a.nll, a.iterations) == (b.params, b.nll, b.iterations)

    def test_consistency_as_sample_grows(self):
        # average parameter error over seeds shrinks along 500 / 5k / 50k
        true = GevParams(10.0, 2.0, 0.1)
        errors = []
        for m in (500, 5000, 50000):
            errs = []
            for seed in (0, 1, 2):
                r = fit_gev_mle(sample_gev(true, m, seed=seed))
                errs.append(
                    np.linalg.norm([
                        r.params.mu - true.mu,
                        r.params.sigma - true.sigma,
                        r.params.xi - true.xi,
                    ])
                )
            errors.append(np.mean(errs))
        assert errors[0] > errors[1] > errors[2]


class TestReturnLevel:
    def test_two_block_gumbel(self):
        assert return_level(2.0, (0.0, 1.0, 0.0)) == pytest.approx(0.3665129, abs=1e-6)

    def test_approaches_finite_endpoint_from_below(self):
        p = GevParams(0.0, 1.0, -0.5)
        endpoint = p.support()[1]
        levels = return_level(np.array([10.0, 100.0, 1e4, 1e8]), p)
        assert np.all(np.diff(levels) > 0)
        assert np.all(levels < endpoint)
        assert endpoint - levels[-1] < 1e-3

    def test_strictly_increasing_in_period(self):
        p = GevParams(1.0, 0.5, 0.2)
        T = np.array([1.5, 2.0, 5.0, 20.0, 100.0])
        assert np.all(np.diff(return_level(T, p)) > 0)

    def test_domain_error(self):
        with pytest.raises(DataError):
            return_level(1.0, (0.0, 1.0, 0.0))
