"""
Experiment statistics tests: Welch tests, distribution shift and sharing savings
"""
import math
from bisect import bisect_right

import numpy as np
import pytest
from scipy import integrate

from app.models import DiffDat, DiffMeta, ExperimentGroup, ExperimentSample, SimConfig
from app.utils.errors import StatisticsError, UnknownDiffError
from app.utils.experiment_stats import (
    POOLED, assign_groups, build_baseline_table, build_experiment_samples, counterfactual_savings,
    distribution_shift, net_benefit, pct_delta_dat, split_by_sharing, stratified_test, wasserstein_1,
    welch_t_test
)
from app.utils.workload_simulator import sample_experiment_population

HOUR = 3_600_000


def _t_density(x, df):
    log_norm = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))


def _two_sided_p(t, df):
    tail, _ = integrate.quad(_t_density, abs(t), np.inf, args=(df,), epsabs=1e-13, epsrel=1e-11, limit=200)
    return min(1.0, 2 * tail)


def _cdf_distance(a, b):
    a, b = sorted(a), sorted(b)
    points = sorted(set(a) | set(b))
    total = 0.0
    for left, right in zip(points, points[1:]):
        fa = bisect_right(a, left) / len(a)
        fb = bisect_right(b, left) / len(b)
        total += abs(fa - fb) * (right - left)
    return total


def _sample(diff_id, group, files, dat):
    return ExperimentSample(diff_id, group, files, float(dat))


@pytest.mark.stats
class TestWelchTTest:
    """Two-tailed Welch test"""

    def test_reference_values(self):
        """[10,12,14] against [20,22,24]"""
        result = welch_t_test([10, 12, 14], [20, 22, 24])

        assert result.t == pytest.approx(-6.1237, abs=1e-4)
        assert result.df == pytest.approx(4.0)
        assert result.p == pytest.approx(0.00357, abs=5e-5)
        assert result.stratum == POOLED

    def test_one_side_constant(self):
        """Variance on one side is enough"""
        result = welch_t_test([0, 0, 0, 1], [0, 0, 0, 0])

        assert math.isfinite(result.t)
        assert result.p < 1
        assert result.df == pytest.approx(3.0)

    def test_pct_saved(self):
        """Savings are relative to the control mean"""
        result = welch_t_test([100, 110, 90], [80, 90, 70])

        assert result.pct_saved == pytest.approx(0.2)
        assert result.size_ratio == 1.0

    def test_undersized_group(self):
        """Fewer than two samples on a side cannot be tested"""
        with pytest.raises(StatisticsError) as excinfo:
            welch_t_test([1], [1, 2, 3])

        assert 'undersized group' in str(excinfo.value)
        assert excinfo.value.exit_code == 3

    def test_no_variance(self):
        """Two constant groups cannot be tested"""
        with pytest.raises(StatisticsError) as excinfo:
            welch_t_test([5, 5, 5], [7, 7])

        assert 'no variance' in str(excinfo.value)

    def test_p_matches_integrated_density(self):
        """p agrees with numerical integration of the t density"""
        rng = np.random.default_rng(21)
        for n_a, n_b in ((3, 3), (5, 12), (20, 8), (50, 50)):
            for shift in (0.0, 0.3, 1.0, 2.5):
                a = rng.normal(10, 1, n_a)
                b = rng.normal(10 - shift, 2, n_b)

                result = welch_t_test(a, b)

                assert result.p == pytest.approx(_two_sided_p(result.t, result.df), abs=1e-6)

    def test_df_matches_formula(self):
        """Degrees of freedom follow the Welch-Satterthwaite formula"""
        a, b = [1.0, 4.0, 2.0, 8.0], [3.0, 3.5, 9.0, 1.0, 2.0, 6.0]
        va, vb = np.var(a, ddof=1) / len(a), np.var(b, ddof=1) / len(b)

        result = welch_t_test(a, b)

        assert result.df == pytest.approx((va + vb) ** 2 / (va ** 2 / 3 + vb ** 2 / 5))
        assert result.t == pytest.approx((np.mean(a) - np.mean(b)) / math.sqrt(va + vb))


    def test_swapping_groups_flips_t(self):
        """Exchanging control and test negates t and keeps p"""
        rng = np.random.default_rng(31)
        for _ in range(20):
            a = rng.normal(10, 2, int(rng.integers(2, 30)))
            b = rng.normal(11, 3, int(rng.integers(2, 30)))

            forward, backward = welch_t_test(a, b), welch_t_test(b, a)

            assert backward.t == pytest.approx(-forward.t)
            assert backward.p == pytest.approx(forward.p)
            assert backward.df == pytest.approx(forward.df)

    @pytest.mark.parametrize('scale', [0.001, 3.5, 60_000])
    def test_scale_free(self, scale):
        """Changing the unit of both groups leaves t and p alone"""
        a, b = np.array([3.0, 5.0, 4.0, 9.0, 7.0]), np.array([6.0, 8.0, 12.0, 7.5])

        plain, scaled = welch_t_test(a, b), welch_t_test(a * scale, b * scale)

        assert scaled.t == pytest.approx(plain.t, rel=1e-9)
        assert scaled.p == pytest.approx(plain.p, rel=1e-9)
        assert scaled.pct_saved == pytest.approx(plain.pct_saved, rel=1e-9)

    def test_identical_groups(self):
        """Two copies of one sample show no difference"""
        result = welch_t_test([4, 8, 15, 16, 23, 42], [4, 8, 15, 16, 23, 42])

        assert result.t == 0
        assert result.p == pytest.approx(1.0)


@pytest.mark.stats
class TestGroupsAndStrata:
    """Group assignment and the stratified comparison"""

    def test_assign_groups(self):
        """Migrated-only, unmigrated-only and mixed diffs"""
        diffs = [
            DiffMeta('D1', 'u1', ('c1',), files=('m1.py', 'other.py')),
            DiffMeta('D2', 'u1', ('c2',), files=('u1.py',)),
            DiffMeta('D3', 'u1', ('c3',), files=('m1.py', 'u1.py')),
            DiffMeta('D4', 'u1', ('c4',), files=('other.py',)),
        ]

        groups = assign_groups(diffs, {'m1.py'}, {'m1.py', 'u1.py'})

        assert [(g.diff_id, g.group) for g in groups] == [
            ('D1', ExperimentGroup.CONTROL), ('D2', ExperimentGroup.TEST), ('D3', ExperimentGroup.MIXED)
        ]

    def test_without_relevant_set(self):
        """With no relevant set every touched file counts"""
        diffs = [DiffMeta('D4', 'u1', ('c4',), files=('other.py',))]

        groups = assign_groups(diffs, {'m1.py'})

        assert groups[0].group == ExperimentGroup.TEST

    def test_samples_drop_mixed_and_missing(self):
        """Mixed diffs and diffs without DAT are not sampled"""
        diffs = [
            DiffMeta('D1', 'u1', ('c1',), files_changed=2, files=('m1.py',)),
            DiffMeta('D2', 'u1', ('c2',), files=('m1.py', 'u1.py')),
            DiffMeta('D3', 'u1', ('c3',), files=('u1.py',)),
        ]
        dats = [DiffDat('D1', 'u1', author_precise=10, anchor_extra=2), DiffDat('D2', 'u1', author_precise=5)]
        groups = assign_groups(diffs, {'m1.py'})

        samples = build_experiment_samples(dats, diffs, groups)

        assert samples == [ExperimentSample('D1', ExperimentGroup.CONTROL, 2, 12.0)]

    def test_rows_per_stratum_and_pool(self):
        """One row per stratum, the pooled row last; thin strata stay undefined"""
        samples = [
            _sample('C1', ExperimentGroup.CONTROL, 1, 10), _sample('C2', ExperimentGroup.CONTROL, 1, 12),
            _sample('T1', ExperimentGroup.TEST, 1, 8), _sample('T2', ExperimentGroup.TEST, 1, 9),
            _sample('C3', ExperimentGroup.CONTROL, 2, 20), _sample('T3', ExperimentGroup.TEST, 2, 15),
            _sample('M1', ExperimentGroup.MIXED, 1, 99),
        ]

        rows = stratified_test(samples)

        assert [r.stratum for r in rows] == ['1', '2', '3', '4', POOLED]
        assert rows[0].defined
        assert not rows[1].defined
        assert (rows[1].n_control, rows[1].n_test) == (1, 1)
        assert rows[1].mean_control == 20
        assert (rows[2].n_control, rows[2].mean_control) == (0, None)
        assert rows[-1].defined
        assert (rows[-1].n_control, rows[-1].n_test) == (3, 3)

    def test_pooled_mean_inside_strata(self):
        """The pooled control mean lies between the per-stratum means"""
        samples = sample_experiment_population(SimConfig(seed=4, effect_factor=0.86), 200)

        rows = stratified_test(samples)
        strata = [r.mean_control for r in rows[:-1]]

        assert min(strata) <= rows[-1].mean_control <= max(strata)

    @pytest.mark.slow
    def test_power(self):
        """A 14% reduction is recovered within 3 points at p < 0.001 in 95 of 100 seeds"""
        hits = 0
        for seed in range(100):
            samples = sample_experiment_population(SimConfig(seed=seed, effect_factor=0.86), 500)
            pooled = stratified_test(samples)[-1]
            if abs(pooled.pct_saved - 0.14) <= 0.03 and pooled.p < 0.001:
                hits += 1

        assert hits >= 95

    def test_large_diffs_dilute_pooled_savings(self):
        """Unaffected large diffs pull the pooled saving below every stratum"""
        samples = sample_experiment_population(
            SimConfig(seed=0), 2000,
            stratum_effects={1: 0.78, 2: 0.78, 3: 0.81, 4: 0.76},
            large_diff_fraction=0.3, large_diff_scale=5
        )

        rows = stratified_test(samples)

        assert all(r.defined for r in rows)
        assert rows[-1].pct_saved < min(r.pct_saved for r in rows[:-1])


@pytest.mark.stats
class TestDistributionShift:
    """Wasserstein-1 distance and relative mean change"""

    def test_reference_distances(self):
        """Shifted and point samples"""
        assert wasserstein_1([1, 2, 3], [2, 3, 4]) == pytest.approx(1.0)
        assert wasserstein_1([0], [5]) == pytest.approx(5.0)

    def test_matches_cdf_integration(self):
        """Agrees with integrating the gap between empirical CDFs"""
        rng = np.random.default_rng(8)
        for _ in range(200):
            a = [float(v) for v in rng.normal(0, 3, int(rng.integers(1, 12)))]
            b = [float(v) for v in rng.normal(1, 2, int(rng.integers(1, 12)))]
            assert wasserstein_1(a, b) == pytest.approx(_cdf_distance(a, b), rel=1e-12, abs=1e-12)

    def test_metric_properties(self):
        """Symmetric, obeys the triangle inequality and measures a shift exactly"""
        rng = np.random.default_rng(9)
        for _ in range(100):
            a, b, c = ([float(v) for v in rng.lognormal(2, 1, int(rng.integers(1, 15)))] for _ in range(3))

            assert wasserstein_1(a, b) == pytest.approx(wasserstein_1(b, a), rel=1e-12, abs=1e-12)
            assert wasserstein_1(a, c) <= wasserstein_1(a, b) + wasserstein_1(b, c) + 1e-9

    @pytest.mark.parametrize('shift', [-7.5, 0.0, 2.0, 1000.0])
    def test_translation(self, shift):
        """Moving every value by c costs exactly |c|"""
        a = [1.0, 4.0, 4.0, 9.0, 30.0]

        assert wasserstein_1(a, [v + shift for v in a]) == pytest.approx(abs(shift), abs=1e-9)

    def test_empty_sample(self):
        """Both samples need data"""
        with pytest.raises(StatisticsError):
            wasserstein_1([], [1])

    def test_pct_delta(self):
        """Relative drop in mean from the first sample"""
        assert pct_delta_dat([10, 10], [8, 8]) == pytest.approx(0.2)
        with pytest.raises(StatisticsError):
            pct_delta_dat([0, 0], [1])

    def test_shift_record(self):
        """The combined record keeps both numbers and the sizes"""
        shift = distribution_shift([1, 2, 3], [2, 3, 4])

        data = shift.to_dict()
        assert data['wasserstein_ms'] == pytest.approx(1.0)
        assert data['pct_delta_dat'] == pytest.approx(-0.5)
        assert (data['n_a'], data['n_b']) == (3, 3)


def _unshared(diff_id, platform, app, loc, dat):
    return DiffMeta(diff_id, 'u1', (f'{diff_id}-c1',), loc=loc, platform_apps=((platform, app),)), float(dat)


@pytest.mark.stats
class TestSharingSavings:
    """Counterfactual cost of shared code"""

    def test_trimmed_cell_mean(self):
        """A 20% trim drops the outlier"""
        unshared = [_unshared(f'D{i}', 'ios', 'app1', 10, v) for i, v in enumerate([1, 2, 3, 4, 100])]

        table = build_baseline_table(unshared, trim=0.2)

        assert table.cells == {('ios', 'app1', 1): pytest.approx(3.0)}
        assert table.counts == {('ios', 'app1', 1): 5}

    def test_loc_terciles(self):
        """Nearest-rank thresholds with ties in the lower tercile"""
        unshared = [_unshared(f'D{i}', 'ios', 'app1', loc, 1) for i, loc in enumerate([10, 20, 30, 40, 50, 60])]

        table = build_baseline_table(unshared)

        assert table.thresholds == (20, 40)
        assert [table.tercile_of(loc) for loc in (20, 21, 40, 41)] == [1, 2, 2, 3]

    def test_savings(self):
        """Targets costing 4h and 6h alone, built once in 3h, save 7h"""
        unshared = [_unshared('D1', 'ios', 'app1', 10, 4 * HOUR), _unshared('D2', 'web', 'app1', 10, 6 * HOUR)]
        shared = DiffMeta('D3', 'u1', ('D3-c1',), loc=10, shared=True,
                          platform_apps=(('ios', 'app1'), ('web', 'app1')))

        report = counterfactual_savings([(shared, 3 * HOUR)], build_baseline_table(unshared))

        assert report.total_counterfactual == pytest.approx(10 * HOUR)
        assert report.total_saved == pytest.approx(7 * HOUR)
        assert report.relative_improvement == pytest.approx(0.7)
        assert report.records[0].tercile == 1

    def _three_targets(self):
        unshared = [_unshared(f'D{i}', platform, 'app1', 10, 4 * HOUR)
                    for i, platform in enumerate(('ios', 'web', 'android'))]
        return build_baseline_table(unshared)

    def _shared(self, diff_id, platforms):
        return DiffMeta(diff_id, 'u1', (f'{diff_id}-c1',), loc=10, shared=True,
                        platform_apps=tuple((platform, 'app1') for platform in platforms))

    def test_savings_grow_with_targets(self):
        """The same actual cost saves more the more targets it serves"""
        table = self._three_targets()
        platforms = ('ios', 'web', 'android')

        saved = [counterfactual_savings([(self._shared('D9', platforms[:n]), 3 * HOUR)], table).total_saved
                 for n in (1, 2, 3)]

        assert saved == pytest.approx([1 * HOUR, 5 * HOUR, 9 * HOUR])
        assert saved == sorted(saved)

    def test_portfolio_above_half(self):
        """Two shared diffs together save more than half of their counterfactual"""
        shared = [(self._shared('D10', ('ios', 'web', 'android')), 5 * HOUR),
                  (self._shared('D11', ('ios', 'web')), 3 * HOUR)]

        report = counterfactual_savings(shared, self._three_targets())

        assert report.total_counterfactual == pytest.approx(20 * HOUR)
        assert report.relative_improvement == pytest.approx(0.6)
        assert report.relative_improvement > 0.5

    def test_net_benefit(self):
        """Savings minus the Anchor-DAT of the diffs that built the support"""
        report = counterfactual_savings([(self._shared('D10', ('ios', 'web')), 3 * HOUR)],
                                        self._three_targets())
        dats = [DiffDat('D0', 'u1', author_precise=HOUR, anchor_extra=HOUR),
                DiffDat('D1', 'u1', author_precise=HOUR)]

        benefit = net_benefit(report, dats, ['D0', 'D1'])

        assert benefit.development_cost == 3 * HOUR
        assert benefit.net == pytest.approx(2 * HOUR)
        assert benefit.return_ratio == pytest.approx(5 / 3)

    def test_net_benefit_unknown_diff(self):
        """A development diff missing from the results exits 2"""
        report = counterfactual_savings([(self._shared('D10', ('ios',)), HOUR)], self._three_targets())

        with pytest.raises(UnknownDiffError) as excinfo:
            net_benefit(report, [], ['D0'])

        assert excinfo.value.exit_code == 2

    def test_missing_baseline_cell(self):
        """A target without a baseline cell is an error"""
        unshared = [_unshared('D1', 'ios', 'app1', 10, HOUR)]
        shared = DiffMeta('D3', 'u1', ('D3-c1',), loc=10, shared=True,
                          platform_apps=(('ios', 'app1'), ('android', 'app2')))

        with pytest.raises(StatisticsError) as excinfo:
            counterfactual_savings([(shared, HOUR)], build_baseline_table(unshared))

        assert 'android/app2' in str(excinfo.value)

    def test_unshared_needs_one_target(self):
        """Unshared diffs must name exactly one platform-app"""
        meta = DiffMeta('D1', 'u1', ('c1',), loc=10, platform_apps=(('ios', 'app1'), ('web', 'app1')))

        with pytest.raises(StatisticsError):
            build_baseline_table([(meta, 1.0)])

    def test_trim_range(self):
        """Trimming half of each tail leaves nothing"""
        with pytest.raises(StatisticsError):
            build_baseline_table([_unshared('D1', 'ios', 'app1', 10, 1)], trim=0.5)

    def test_split_by_sharing(self):
        """Diffs pair with their Anchor-DAT and split on the shared flag"""
        metas = [
            DiffMeta('D2', 'u1', ('c2',), shared=True, platform_apps=(('ios', 'app1'), ('web', 'app1'))),
            DiffMeta('D1', 'u1', ('c1',), platform_apps=(('ios', 'app1'),)),
            DiffMeta('D9', 'u1', ('c9',)),
        ]
        dats = [DiffDat('D1', 'u1', author_precise=5, anchor_extra=1), DiffDat('D2', 'u1', author_precise=3)]

        unshared, shared = split_by_sharing(dats, metas)

        assert [(m.diff_id, v) for m, v in unshared] == [('D1', 6.0)]
        assert [(m.diff_id, v) for m, v in shared] == [('D2', 3.0)]
