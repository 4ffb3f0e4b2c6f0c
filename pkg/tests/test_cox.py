import math

import numpy as np
import numpy.testing as npt
import pytest

from polyrecur.cox import (
    CoxConfig,
    TieMethod,
    fit_cox,
    partial_log_likelihood,
    predict_relative_risk,
)
from polyrecur.errors import (
    MissingCovariateError,
    NoEventsError,
    SingularHessianError,
)

from helpers import (
    grid_partial_loglik_efron,
    grid_partial_loglik_untied,
    toy_dataset,
)


def single_covariate_dataset(times, events, x):
    return toy_dataset(times, events, continuous={"x": x})


class TestPartialLogLikelihood:
    def test_null_equals_minus_log_risk_set_sizes(self):
        # tie-free, all events: ll(0) = -sum over events of log(n at risk)
        times = [1.0, 2.0, 3.0, 4.0]
        ds = single_covariate_dataset(times, [True] * 4, [0.3, -1.0, 2.0, 0.1])
        expected = -sum(math.log(n) for n in (4, 3, 2, 1))
        got = partial_log_likelihood([0.0], ds, ["x"])
        npt.assert_allclose(got, expected, rtol=1e-12)

    def test_constant_covariate_is_flat(self):
        ds = single_covariate_dataset([1, 2, 3, 4], [True] * 4, [2.0] * 4)
        values = [partial_log_likelihood([b], ds, ["x"])
                  for b in (-1.0, 0.0, 0.5, 2.0)]
        npt.assert_allclose(values, values[0], rtol=1e-12)

    def test_four_subject_hand_expansion(self):
        # subjects (t, x): (1,1), (2,1), (3,0), (4,0); beta = 0.5
        beta = 0.5
        e = math.exp(beta)
        expected = ((beta - math.log(e + e + 1 + 1))
                    + (beta - math.log(e + 1 + 1))
                    + (0.0 - math.log(2.0))
                    + (0.0 - math.log(1.0)))
        ds = single_covariate_dataset([1, 2, 3, 4], [True] * 4, [1, 1, 0, 0])
        for ties in (TieMethod.EFRON, TieMethod.BRESLOW):
            got = partial_log_likelihood([beta], ds, ["x"], ties)
            npt.assert_allclose(got, expected, rtol=1e-12)

    def test_censored_subjects_only_enter_risk_sets(self):
        ds = single_covariate_dataset([1, 2, 3], [True, False, True],
                                      [1.0, 0.5, 0.0])
        beta = 0.7
        e = math.exp
        expected = ((beta - math.log(e(beta) + e(0.5 * beta) + 1))
                    + (0.0 - math.log(1.0)))
        got = partial_log_likelihood([beta], ds, ["x"])
        npt.assert_allclose(got, expected, rtol=1e-12)

    def test_non_finite_beta_rejected(self):
        ds = single_covariate_dataset([1, 2], [True, True], [0.0, 1.0])
        with pytest.raises(ValueError):
            partial_log_likelihood([float("nan")], ds, ["x"])


GRID = np.arange(-10.0, 10.0 + 1e-12, 1e-4)

UNTIED_FIXTURES = [
    ([1, 2, 3, 4], [1.0, 0.0, 1.0, 0.0]),
    ([2, 5, 7, 11, 13], [0.0, 1.0, 0.0, 1.0, 1.0]),
    ([1, 2, 3, 4, 5, 6, 7, 8], [1, 0, 1, 0, 1, 1, 0, 0]),
    ([3, 1, 4, 2], [-0.5, 1.5, 0.5, 0.0]),
]


class TestFitCoxOracle:
    @pytest.mark.parametrize("times,x", UNTIED_FIXTURES)
    def test_matches_grid_search_untied(self, times, x):
        ds = single_covariate_dataset(times, [True] * len(times), x)
        fit = fit_cox(ds, ["x"])
        ll_grid = grid_partial_loglik_untied(x, times, GRID)
        beta_grid = GRID[int(np.argmax(ll_grid))]
        assert abs(fit.coefficients["x"] - beta_grid) < 2e-4

    def test_matches_grid_search_with_ties(self):
        times = [1, 1, 2, 2, 3, 4, 5, 5]
        events = [True, True, True, False, True, True, True, True]
        x = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0]
        ds = toy_dataset(times, events, continuous={"x": x})
        fit = fit_cox(ds, ["x"])
        ll_grid = grid_partial_loglik_efron(x, times, events, GRID)
        beta_grid = GRID[int(np.argmax(ll_grid))]
        assert abs(fit.coefficients["x"] - beta_grid) < 2e-4

    @pytest.mark.parametrize("times,x", UNTIED_FIXTURES[:2])
    def test_gradient_vanishes_at_optimum(self, times, x):
        ds = single_covariate_dataset(times, [True] * len(times), x)
        fit = fit_cox(ds, ["x"])
        beta_hat = fit.coefficients["x"]
        h = 1e-5
        fd = (partial_log_likelihood([beta_hat + h], ds, ["x"])
              - partial_log_likelihood([beta_hat - h], ds, ["x"])) / (2 * h)
        assert abs(fd) < 1e-6

    def test_finite_difference_matches_internal_gradient(self):
        rng = np.random.default_rng(4)
        n = 40
        times = rng.integers(1, 60, n).astype(float)
        events = rng.random(n) < 0.7
        x1 = rng.normal(size=n)
        x2 = rng.random(n) < 0.5
        ds = toy_dataset(times, events,
                         continuous={"x1": x1, "x2": x2.astype(float)})
        fit = fit_cox(ds, ["x1", "x2"])
        beta = fit.beta
        h = 1e-5
        for i in range(2):
            step = np.zeros(2)
            step[i] = h
            fd = (partial_log_likelihood(beta + step, ds, ["x1", "x2"])
                  - partial_log_likelihood(beta - step, ds, ["x1", "x2"])) / (2 * h)
            assert abs(fd) < 1e-6


class TestFitCoxBehavior:
    def test_efron_equals_breslow_without_ties(self):
        rng = np.random.default_rng(10)
        n = 30
        times = np.arange(1, n + 1, dtype=float)
        rng.shuffle(times)
        events = rng.random(n) < 0.8
        x = rng.normal(size=n)
        ds = toy_dataset(times, events, continuous={"x": x})
        f1 = fit_cox(ds, ["x"], CoxConfig(ties=TieMethod.EFRON))
        f2 = fit_cox(ds, ["x"], CoxConfig(ties=TieMethod.BRESLOW))
        assert f1.coefficients["x"] == f2.coefficients["x"]
        assert f1.log_likelihood == f2.log_likelihood

    def test_efron_differs_from_breslow_with_ties(self):
        times = [1, 1, 1, 2, 2, 3, 4, 5]
        events = [True] * 8
        x = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]
        ds = toy_dataset(times, events, continuous={"x": x})
        f1 = fit_cox(ds, ["x"], CoxConfig(ties=TieMethod.EFRON))
        f2 = fit_cox(ds, ["x"], CoxConfig(ties=TieMethod.BRESLOW))
        assert f1.log_likelihood != f2.log_likelihood

    def test_likelihood_ascent(self):
        rng = np.random.default_rng(12)
        n = 60
        x = rng.normal(size=n)
        times = rng.exponential(scale=np.exp(-0.8 * x))
        times = np.maximum(times, 1e-3)
        ds = toy_dataset(times, np.ones(n, dtype=bool), continuous={"x": x})
        fit = fit_cox(ds, ["x"])
        diffs = np.diff(fit.ll_path)
        assert np.all(diffs >= -1e-12)
        assert fit.converged

    def test_noise_covariate_near_zero(self):
        rng = np.random.default_rng(21)
        n = 800
        x = (rng.random(n) < 0.5).astype(float)
        times = rng.exponential(scale=500.0, size=n)
        events = rng.random(n) < 0.8
        ds = toy_dataset(np.maximum(times, 0.5), events, continuous={"x": x})
        fit = fit_cox(ds, ["x"])
        assert abs(fit.coefficients["x"]) < 3 * fit.standard_errors["x"]
        assert fit.global_chi_square < 9.0

    def test_planted_binary_hazard_ratio_recovered(self):
        rng = np.random.default_rng(33)
        n = 1500
        x = (rng.random(n) < 0.5).astype(float)
        latent = rng.exponential(scale=1.0 / (0.002 * np.exp(math.log(2.0) * x)))
        censor = rng.uniform(100, 1500, size=n)
        times = np.minimum(latent, censor)
        events = latent <= censor
        ds = toy_dataset(np.maximum(times, 0.5), events, continuous={"x": x})
        fit = fit_cox(ds, ["x"])
        rr, lo, hi = fit.risk_ratios["x"]
        assert 1.7 < rr < 2.3
        assert lo < rr < hi

    def test_risk_ratio_is_exp_beta_and_ci_formula(self):
        ds = single_covariate_dataset([1, 2, 3, 4], [True] * 4, [1, 0, 1, 0])
        fit = fit_cox(ds, ["x"])
        b = fit.coefficients["x"]
        se = fit.standard_errors["x"]
        rr, lo, hi = fit.risk_ratios["x"]
        npt.assert_allclose(rr, math.exp(b), rtol=1e-12)
        npt.assert_allclose(lo, math.exp(b - 1.96 * se), rtol=1e-12)
        npt.assert_allclose(hi, math.exp(b + 1.96 * se), rtol=1e-12)

    def test_global_chi_square_identity(self):
        ds = single_covariate_dataset([1, 2, 3, 4, 5],
                                      [True, True, False, True, True],
                                      [1.0, 0.5, 0.0, -0.5, -1.0])
        fit = fit_cox(ds, ["x"])
        npt.assert_allclose(
            fit.global_chi_square,
            2.0 * (fit.log_likelihood - fit.null_log_likelihood),
            rtol=1e-12)
        assert fit.global_chi_square >= 0.0

    def test_continuous_z_beats_median_binary(self):
        rng = np.random.default_rng(55)
        n = 1200
        x = rng.normal(size=n)
        latent = rng.exponential(scale=np.exp(-0.5 * x) * 400.0)
        censor = rng.uniform(200, 2500, size=n)
        times = np.maximum(np.minimum(latent, censor), 0.5)
        events = latent <= censor
        xbin = (x > np.median(x)).astype(float)
        ds = toy_dataset(times, events,
                         continuous={"xc": x, "xb": xbin})
        zc = abs(fit_cox(ds, ["xc"]).coefficients["xc"]
                 / fit_cox(ds, ["xc"]).standard_errors["xc"])
        zb = abs(fit_cox(ds, ["xb"]).coefficients["xb"]
                 / fit_cox(ds, ["xb"]).standard_errors["xb"])
        assert zc >= zb

    def test_separation_is_flagged(self):
        # covariate perfectly orders the failures: likelihood is monotone
        times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        x = [5.0, 4.0, 3.0, 2.0, 1.0, 0.0]
        ds = single_covariate_dataset(times, [True] * 6, x)
        fit = fit_cox(ds, ["x"], CoxConfig(max_iter=200))
        assert fit.monotone_likelihood
        assert not fit.converged

    def test_collinear_covariates_raise(self):
        ds = toy_dataset([1, 2, 3, 4], [True] * 4,
                         continuous={"a": [1, 2, 3, 4], "b": [2, 4, 6, 8]})
        with pytest.raises(SingularHessianError):
            fit_cox(ds, ["a", "b"])

    def test_no_events_raises(self):
        ds = single_covariate_dataset([1, 2], [False, False], [0.0, 1.0])
        with pytest.raises(NoEventsError):
            fit_cox(ds, ["x"])

    def test_factor_reference_coding(self):
        times = [1, 2, 3, 4, 5, 6]
        events = [True] * 6
        labels = ["Left", "Right", "Other", "Left", "Right", "Left"]
        ds = toy_dataset(times, events,
                         factors={"side": (["Left", "Right", "Other"], labels)})
        fit = fit_cox(ds, ["side"])
        assert fit.covariates == ["side=Right", "side=Other"]


class TestPredictRelativeRisk:
    def fit_small(self):
        times = [1, 2, 3, 4, 5, 6, 7, 8]
        events = [True] * 8
        count = [1, 2, 3, 1, 2, 1, 4, 2]
        smoke = ["Used", "Never", "Used", "Never", "Used", "Never", "Used",
                 "Never"]
        ds = toy_dataset(times, events,
                         continuous={"polyp_count": count},
                         factors={"smoking_status": (["Never", "Used"], smoke)})
        return fit_cox(ds, ["polyp_count", "smoking_status"])

    def test_reference_row_scores_one(self):
        fit = self.fit_small()
        row = {"polyp_count": 0.0, "smoking_status": "Never"}
        assert predict_relative_risk(fit, row) == 1.0

    def test_single_factor_change_multiplies_by_rr(self):
        fit = self.fit_small()
        base = {"polyp_count": 0.0, "smoking_status": "Never"}
        used = {"polyp_count": 0.0, "smoking_status": "Used"}
        ratio = predict_relative_risk(fit, used) / predict_relative_risk(fit, base)
        npt.assert_allclose(ratio, math.exp(fit.coefficients["smoking_status=Used"]),
                            rtol=1e-12)

    def test_unit_count_difference_is_exp_beta(self):
        fit = self.fit_small()
        a = {"polyp_count": 2.0, "smoking_status": "Used"}
        b = {"polyp_count": 3.0, "smoking_status": "Used"}
        ratio = predict_relative_risk(fit, b) / predict_relative_risk(fit, a)
        npt.assert_allclose(ratio, math.exp(fit.coefficients["polyp_count"]),
                            rtol=1e-12)

    def test_missing_covariate_raises(self):
        fit = self.fit_small()
        with pytest.raises(MissingCovariateError):
            predict_relative_risk(fit, {"polyp_count": 1.0})
