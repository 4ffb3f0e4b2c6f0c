import numpy as np
import numpy.testing as npt
import pytest
from scipy import stats

from polyrecur.survival import (
    apply_common_censor,
    chi_square_sf,
    km_by_factor,
    km_estimate,
    log_rank,
    screen_details,
    screen_variables,
    two_group_logrank_chi2,
)


from helpers import hand_km, hand_logrank_two_groups, toy_dataset


class TestKMEstimate:
    def test_all_events_no_censoring(self):
        curve = km_estimate([1, 2, 3], [True, True, True])
        npt.assert_allclose(curve.survival, [2 / 3, 1 / 3, 0.0], rtol=1e-12)
        npt.assert_array_equal(curve.times, [1, 2, 3])
        npt.assert_array_equal(curve.n_at_risk, [3, 2, 1])

    def test_no_events(self):
        curve = km_estimate([5, 8], [False, False])
        assert curve.times.size == 0
        assert curve.survival_at(100.0) == 1.0
        assert curve.median_time is None

    def test_censoring_with_tied_time(self):
        # subjects: 2(event), 3(censored), 3(event), 5(event); the censored
        # subject is still at risk at time 3, so S(3) = 3/4 * 2/3 = 1/2
        curve = km_estimate([2, 3, 3, 5], [True, False, True, True])
        expected = [s for _, s in hand_km([2, 3, 3, 5],
                                          [True, False, True, True])]
        npt.assert_allclose(curve.survival, expected, rtol=1e-12)
        npt.assert_allclose(curve.survival, [3 / 4, 1 / 2, 0.0], rtol=1e-12)
        npt.assert_array_equal(curve.n_at_risk, [4, 3, 1])

    def test_matches_hand_oracle_on_random_data(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = rng.integers(1, 40)
            times = rng.integers(1, 15, size=n).astype(float)
            events = rng.random(n) < 0.7
            curve = km_estimate(times, events)
            oracle = hand_km(times, events)
            npt.assert_array_equal(curve.times, [t for t, _ in oracle])
            npt.assert_allclose(curve.survival, [s for _, s in oracle],
                                rtol=1e-12)

    def test_equals_one_minus_ecdf_without_censoring(self):
        rng = np.random.default_rng(3)
        times = rng.integers(1, 50, size=200).astype(float)
        curve = km_estimate(times, np.ones(200, dtype=bool))
        for t, s in zip(curve.times, curve.survival):
            npt.assert_allclose(s, np.mean(times > t), atol=1e-12)

    def test_row_order_invariance(self):
        rng = np.random.default_rng(5)
        times = rng.integers(1, 30, size=60).astype(float)
        events = rng.random(60) < 0.6
        a = km_estimate(times, events)
        perm = rng.permutation(60)
        b = km_estimate(times[perm], events[perm])
        npt.assert_array_equal(a.times, b.times)
        npt.assert_array_equal(a.survival, b.survival)

    def test_median_time(self):
        curve = km_estimate([1, 2, 3, 4], [True] * 4)
        assert curve.median_time == 2.0
        curve = km_estimate([1, 2], [True, False])
        assert curve.survival_at(1) == 0.5
        assert curve.median_time == 1.0

    def test_monotone_and_starts_below_one(self):
        rng = np.random.default_rng(8)
        times = rng.integers(1, 20, size=50).astype(float)
        events = rng.random(50) < 0.5
        curve = km_estimate(times, events)
        assert np.all(np.diff(curve.survival) <= 1e-15)
        assert np.all(curve.survival <= 1.0)
        assert np.all(np.diff(curve.n_at_risk) < 0)

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            km_estimate([1, 2], [True])

    def test_nonpositive_times_raise(self):
        with pytest.raises(ValueError):
            km_estimate([0, 2], [True, True])


class TestLogRank:
    def test_identical_groups_give_zero(self):
        g = ([1, 2, 3, 4], [True, True, False, True])
        res = log_rank([g, g])
        assert res.chi_square == 0.0
        assert res.p_value == 1.0

    def test_two_group_hand_example(self):
        res = log_rank([([1, 2, 3], [True] * 3), ([10, 20, 30], [True] * 3)])
        oracle = hand_logrank_two_groups([1, 2, 3], [True] * 3,
                                         [10, 20, 30], [True] * 3)
        assert abs(res.chi_square - oracle) < 1e-9
        assert res.p_value < 0.05

    def test_three_groups_df(self):
        rng = np.random.default_rng(0)
        groups = [(rng.integers(1, 30, 20).astype(float),
                   np.ones(20, dtype=bool)) for _ in range(3)]
        res = log_rank(groups)
        assert res.degrees_of_freedom == 2

    def test_p_consistent_with_chi_square_cdf(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            g1 = (rng.integers(1, 40, 30).astype(float), rng.random(30) < 0.8)
            g2 = (rng.integers(1, 40, 30).astype(float), rng.random(30) < 0.8)
            res = log_rank([g1, g2])
            ref = stats.chi2.sf(res.chi_square, res.degrees_of_freedom)
            assert abs(res.p_value - ref) < 1e-9

    def test_matches_brute_force_on_random_censored_data(self):
        rng = np.random.default_rng(22)
        for _ in range(25):
            na, nb = rng.integers(3, 25, size=2)
            ta = rng.integers(1, 20, na).astype(float)
            ea = rng.random(na) < 0.7
            tb = rng.integers(1, 20, nb).astype(float)
            eb = rng.random(nb) < 0.7
            if not (ea.any() or eb.any()):
                continue
            res = log_rank([(ta, ea), (tb, eb)])
            oracle = hand_logrank_two_groups(ta, ea, tb, eb)
            assert abs(res.chi_square - oracle) < 1e-9

    def test_multigroup_reduces_to_two_group(self):
        rng = np.random.default_rng(9)
        ta = rng.integers(1, 25, 30).astype(float)
        ea = rng.random(30) < 0.7
        tb = rng.integers(1, 25, 30).astype(float)
        eb = rng.random(30) < 0.7
        two = log_rank([(ta, ea), (tb, eb)])
        oracle = hand_logrank_two_groups(ta, ea, tb, eb)
        npt.assert_allclose(two.chi_square, oracle, atol=1e-9)

    def test_random_half_splits_not_systematically_significant(self):
        rng = np.random.default_rng(42)
        times = rng.integers(1, 100, 80).astype(float)
        events = rng.random(80) < 0.75
        n_small = 0
        for _ in range(100):
            perm = rng.permutation(80)
            half = perm[:40]
            other = perm[40:]
            res = log_rank([(times[half], events[half]),
                            (times[other], events[other])])
            if res.p_value < 0.01:
                n_small += 1
        assert n_small <= 5

    def test_fewer_than_two_groups_raises(self):
        with pytest.raises(ValueError):
            log_rank([([1, 2], [True, True])])

    def test_zero_events_raises(self):
        with pytest.raises(ValueError):
            log_rank([([1, 2], [False, False]), ([3], [False])])


class TestApplyCommonCensor:
    def test_cutoff_arithmetic(self):
        ds = toy_dataset([1950.0, 2000.0, 1200.0], [True, True, True])
        out = apply_common_censor(ds, 0.95)
        assert out.time_days[0] == 1900.0 and not out.event[0]
        assert out.time_days[1] == 1900.0 and not out.event[1]
        assert out.time_days[2] == 1200.0 and out.event[2]

    def test_quantile_one_is_identity(self):
        ds = toy_dataset([100.0, 250.0], [True, False])
        out = apply_common_censor(ds, 1.0)
        npt.assert_array_equal(out.time_days, ds.time_days)
        npt.assert_array_equal(out.event, ds.event)

    def test_never_increases_time_or_uncensors(self):
        rng = np.random.default_rng(2)
        times = rng.integers(1, 2000, 100).astype(float)
        events = rng.random(100) < 0.6
        ds = toy_dataset(times, events)
        out = apply_common_censor(ds, 0.9)
        assert np.all(out.time_days <= ds.time_days)
        assert not np.any(out.event & ~ds.event)

    def test_input_unmodified(self):
        ds = toy_dataset([100.0, 2000.0], [True, True])
        apply_common_censor(ds, 0.5)
        assert ds.time_days[1] == 2000.0 and ds.event[1]

    def test_invalid_quantile(self):
        ds = toy_dataset([10.0], [True])
        with pytest.raises(ValueError):
            apply_common_censor(ds, 0.0)


class TestScreening:
    def separating_dataset(self):
        # group A fails early, group B late; "flat" copies the same outcome
        # distribution into both levels
        times = [1, 2, 3, 4, 50, 60, 70, 80]
        events = [True] * 8
        sep = ["A"] * 4 + ["B"] * 4
        flat = ["X", "Y"] * 4
        return toy_dataset(
            times, events,
            factors={"sep": (["A", "B"], sep), "flat": (["X", "Y"], flat)})

    def test_separating_factor_admitted_identical_excluded(self):
        ds = self.separating_dataset()
        admitted = screen_variables(ds, ["sep", "flat"], threshold=0.2)
        assert admitted == ["sep"]

    def test_threshold_one_admits_everything_testable(self):
        ds = self.separating_dataset()
        admitted = screen_variables(ds, ["sep", "flat"], threshold=1.0)
        assert admitted == ["sep", "flat"]

    def test_single_level_factor_skipped(self):
        ds = toy_dataset([1, 2, 3], [True, True, True],
                         factors={"const": (["only"], ["only"] * 3)})
        details = screen_details(ds, ["const"])
        assert details[0].skipped and not details[0].admitted

    def test_identical_groups_have_p_one(self):
        ds = toy_dataset([1, 2, 1, 2], [True, True, True, True],
                         factors={"f": (["a", "b"], ["a", "a", "b", "b"])})
        details = screen_details(ds, ["f"])
        assert details[0].p_value == 1.0

    def test_km_by_factor_levels(self):
        ds = self.separating_dataset()
        curves = km_by_factor(ds, "sep")
        assert set(curves) == {"A", "B"}
        assert curves["A"].n_total == 4


def test_chi_square_sf_matches_scipy():
    for x in (0.0, 0.5, 3.2, 10.0, 50.0):
        for df in (1, 2, 5):
            assert abs(chi_square_sf(x, df) - stats.chi2.sf(x, df)) < 1e-12


def test_two_group_kernel_order_independent_exact():
    rng = np.random.default_rng(17)
    times = rng.integers(1, 12, 40).astype(float)
    events = rng.random(40) < 0.7
    mask = rng.random(40) < 0.5
    if not events.any() or mask.all() or not mask.any():
        pytest.skip("degenerate draw")
    base = two_group_logrank_chi2(times, events, mask)
    perm = rng.permutation(40)
    assert two_group_logrank_chi2(times[perm], events[perm], mask[perm]) == base
