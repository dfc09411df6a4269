import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixpois.errors import BudgetError, DomainError, InfeasibleTargetError, RegimeWarning
from mixpois.gamma_exact import GammaCase, P_exact, p_exact
from mixpois.poisson_ldp import pmf_exact
from mixpois.rates import DeterministicRate, Exponential, PoissonRate, TwoPoint, rate_function
from mixpois.sampling import (
    Z_95,
    EstimatorConfig,
    StreamPartition,
    efficiency_diagnostic,
    is_fast,
    is_slow,
    mc_P,
    pool_results,
)

EXP25 = Exponential(2.5)
PART = StreamPartition(314)


def joint_dev(result, exact):
    return abs(result.estimate - exact) / (result.ci_halfwidth_95 / Z_95)


class TestStreams:
    def test_validation(self):
        with pytest.raises(DomainError):
            StreamPartition(-1)
        with pytest.raises(DomainError):
            StreamPartition(0, 0)
        with pytest.raises(DomainError):
            StreamPartition(0, 2, 5)

    def test_layout(self):
        assert StreamPartition(0, 3).layout(10) == [(0, 4), (1, 3), (2, 3)]
        assert StreamPartition(0, 3, 1).layout(10) == [(1, 3)]
        assert StreamPartition(0, 4).layout(3) == [(0, 1), (1, 1), (2, 1)]

    def test_counter_based_independence(self):
        p = StreamPartition(123, 2)
        a = p.generator(0).random(8)
        b = p.generator(1).random(8)
        a2 = p.generator(0).random(8)
        assert np.array_equal(a, a2)
        assert not np.array_equal(a, b)


class TestReproducibility:
    def test_bit_identical_rerun(self):
        kwargs = dict(dist=EXP25, alpha=1.2, a=1.0, N=10.0, runs=40_000)
        r1 = mc_P(partition=StreamPartition(7, 3), **kwargs)
        r2 = mc_P(partition=StreamPartition(7, 3), **kwargs)
        assert r1 == r2

    def test_shard_merge_equals_full_run(self):
        kwargs = dict(dist=EXP25, alpha=1.2, a=1.0, N=10.0, runs=50_001)
        full = is_fast(partition=StreamPartition(7, 3), **kwargs)
        parts = [is_fast(partition=StreamPartition(7, 3, s), **kwargs) for s in range(3)]
        assert pool_results(parts) == full

    def test_changing_shards_changes_stream_not_contract(self):
        kwargs = dict(dist=EXP25, alpha=1.2, a=1.0, N=10.0, runs=40_000)
        one = mc_P(partition=StreamPartition(7, 1), **kwargs)
        three = mc_P(partition=StreamPartition(7, 3), **kwargs)
        assert one.runs == three.runs
        assert one.estimate != three.estimate  # different streams


class TestEstimatorResult:
    def test_invariants(self):
        r = mc_P(EXP25, 1.0, 1.0, 10.0, 30_000, PART)
        assert r.ci_halfwidth_95 == pytest.approx(Z_95 * math.sqrt(r.sample_variance / r.runs), rel=1e-12)
        assert r.second_moment >= r.estimate**2
        assert r.runs == 30_000
        assert r.base_seed == 314

    def test_certain_event(self):
        r = mc_P(EXP25, 1.0, 0.0, 10.0, 1000, PART)
        assert r.estimate == 1.0
        assert r.sample_variance == 0.0


class TestCrudeMonteCarlo:
    def test_matches_exact(self):
        exact = P_exact(GammaCase(1.0, 2.5, 1.0, 2.0, 10.0))
        r = mc_P(EXP25, 1.0, 2.0, 10.0, 10**6, PART)
        assert joint_dev(r, exact) < 4.0

    def test_integer_slot_kinds(self):
        # two-point rates go through the rounded slot-count path
        tp = TwoPoint(0.75, 1.0, 5.0)
        r = mc_P(tp, 1.0, 3.0, 6.0, 10**5, PART)
        assert 0.0 < r.estimate < 1.0

    def test_budget_guard(self):
        with pytest.raises(BudgetError):
            mc_P(TwoPoint(0.75, 1.0, 5.0), 2.0, 3.0, 1000.0, 10**6, PART, op_budget=10**6)


class TestFastEstimator:
    def test_unit_weights_without_mixing(self):
        # point estimate at the deterministic rate itself: weights are all one
        lam = 2.0
        N, a = 12.0, 2.0
        r = is_fast(DeterministicRate(lam), 2.0, a, N, 10**5, PART, quantity="point")
        exact = pmf_exact(N, a, lam)
        assert joint_dev(r, exact) < 4.0
        assert r.second_moment == pytest.approx(r.estimate, rel=1e-12)  # w in {0,1}

    def test_point_matches_exact(self):
        exact = p_exact(GammaCase(1.0, 2.5, 1.2, 1.0, 10.0))
        r = is_fast(EXP25, 1.2, 1.0, 10.0, 10**6, PART, quantity="point")
        assert joint_dev(r, exact) < 4.0

    def test_tail_matches_exact(self):
        exact = P_exact(GammaCase(1.0, 2.5, 1.2, 1.0, 10.0))
        r = is_fast(EXP25, 1.2, 1.0, 10.0, 10**6, PART, quantity="tail")
        assert joint_dev(r, exact) < 4.0

    def test_tail_by_sum_matches_exact(self):
        exact = P_exact(GammaCase(1.0, 2.5, 1.2, 1.0, 10.0))
        r = is_fast(EXP25, 1.2, 1.0, 10.0, 10**5, PART, quantity="tail_by_sum", K=70)
        assert joint_dev(r, exact) < 4.0

    def test_validation(self):
        with pytest.raises(DomainError):
            is_fast(EXP25, 2.0, 0.2, 10.0, 100, PART)  # below the mean
        with pytest.raises(DomainError):
            is_fast(EXP25, 2.0, 1.0, 10.0, 100, PART, quantity="tail_by_sum", K=5)
        with pytest.raises(DomainError):
            is_fast(EXP25, 2.0, 1.0, 10.0, 100, PART, quantity="nope")
        with pytest.raises(DomainError):
            is_fast(EXP25, 2.0, 1.05, 10.0, 100, PART, quantity="point")  # fractional count

    def test_regime_warning(self):
        with pytest.warns(RegimeWarning):
            is_fast(EXP25, 0.8, 1.0, 10.0, 1000, PART)


class TestSlowEstimator:
    def test_twist_root(self):
        assert rate_function(Exponential(1.0), 2.0).theta_star == pytest.approx(0.5, rel=1e-12)

    def test_matches_exact_deep_tail(self):
        exact = P_exact(GammaCase(1.0, 2.5, 0.5, 2.0, 100.0))
        r = is_slow(EXP25, 0.5, 2.0, 100.0, 10**6, PART)
        assert exact < 1e-10  # far beyond crude-MC reach
        assert joint_dev(r, exact) < 4.0

    def test_integer_slot_kinds(self):
        exact_rate = PoissonRate(2.0)
        with pytest.warns(RegimeWarning):
            r = is_slow(exact_rate, 1.0, 3.0, 9.0, 2 * 10**5, PART)
        crude = mc_P(exact_rate, 1.0, 3.0, 9.0, 2 * 10**5, StreamPartition(77))
        joint = math.hypot(r.ci_halfwidth_95, crude.ci_halfwidth_95)
        assert abs(r.estimate - crude.estimate) < 2.5 * joint

    def test_infeasible_twist(self):
        with pytest.raises(InfeasibleTargetError):
            is_slow(TwoPoint(0.75, 1.0, 5.0), 0.5, 6.0, 10.0, 100, PART)
        with pytest.raises(DomainError):
            is_slow(EXP25, 0.5, 0.2, 10.0, 100, PART)

    def test_regime_warning(self):
        with pytest.warns(RegimeWarning):
            is_slow(EXP25, 1.5, 1.0, 4.0, 1000, PART)


class TestRepeatedSeedCoverage:
    @pytest.mark.parametrize(
        "runner,exact",
        [
            (
                lambda seed: mc_P(EXP25, 1.0, 1.0, 10.0, 10**5, StreamPartition(seed)),
                P_exact(GammaCase(1.0, 2.5, 1.0, 1.0, 10.0)),
            ),
            (
                lambda seed: is_fast(EXP25, 1.2, 1.0, 10.0, 10**5, StreamPartition(seed),
                                     quantity="tail"),
                P_exact(GammaCase(1.0, 2.5, 1.2, 1.0, 10.0)),
            ),
            (
                lambda seed: is_fast(EXP25, 1.2, 1.0, 10.0, 10**5, StreamPartition(seed),
                                     quantity="point"),
                p_exact(GammaCase(1.0, 2.5, 1.2, 1.0, 10.0)),
            ),
            (
                lambda seed: is_slow(EXP25, 0.5, 2.0, 25.0, 10**5, StreamPartition(seed)),
                P_exact(GammaCase(1.0, 2.5, 0.5, 2.0, 25.0)),
            ),
        ],
        ids=["mc", "is-fast-tail", "is-fast-point", "is-slow"],
    )
    def test_within_four_se_across_twenty_seeds(self, runner, exact):
        covered = sum(1 for seed in range(1000, 1020) if joint_dev(runner(seed), exact) <= 4.0)
        assert covered >= 19  # 95% of 20 independently seeded repetitions


class TestWeightFiniteness:
    @given(
        lam=st.floats(min_value=0.3, max_value=4.0),
        alpha=st.floats(min_value=0.3, max_value=2.5),
        a_mult=st.floats(min_value=1.05, max_value=4.0),
        N=st.integers(min_value=2, max_value=30),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    @settings(max_examples=25, deadline=None)
    def test_no_nonfinite_weights(self, lam, alpha, a_mult, N, seed):
        import warnings

        dist = Exponential(lam)
        a = a_mult / lam
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            fast = is_fast(dist, alpha, a, float(N), 2000, StreamPartition(seed))
            slow = is_slow(dist, alpha, a, float(N), 2000, StreamPartition(seed))
        for r in (fast, slow):
            assert math.isfinite(r.estimate)
            assert math.isfinite(r.second_moment)

    @given(
        lam=st.floats(min_value=0.1, max_value=3.0),
        a_mult=st.floats(min_value=1.05, max_value=3.0),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    @settings(max_examples=15, deadline=None)
    def test_poisson_rate_zero_pooled_rate(self, lam, a_mult, seed):
        # Poisson rates can draw an all-zero pooled rate; weights must stay finite
        dist = PoissonRate(lam)
        r = is_fast(dist, 2.0, lam * a_mult, 3.0, 2000, StreamPartition(seed))
        assert math.isfinite(r.estimate)


class TestEfficiencyDiagnostic:
    def test_grid_validation(self):
        cfg = EstimatorConfig("mc", EXP25, 1.0, 1.0, 1000)
        with pytest.raises(DomainError):
            efficiency_diagnostic(cfg, [1.0, 2.0])
        with pytest.raises(DomainError):
            efficiency_diagnostic(cfg, [1.0, 3.0, 2.0])

    def test_crude_indicator_ratio_is_half(self):
        cfg = EstimatorConfig("mc", EXP25, 0.5, 1.0, 50_000, base_seed=5)
        diag = efficiency_diagnostic(cfg, [1.0, 2.0, 4.0])
        for row in diag.rows:
            assert row.ratio == pytest.approx(0.5, abs=1e-12)

    def test_deterministic_rate_ratio_approaches_one(self):
        cfg = EstimatorConfig(
            "is-fast", DeterministicRate(1.0), 2.0, 2.0, 10**5, quantity="point", base_seed=5
        )
        diag = efficiency_diagnostic(cfg, [4.0, 16.0, 64.0])
        ratios = [row.ratio for row in diag.rows]
        assert ratios == sorted(ratios)
        assert ratios[-1] > 0.9

    def test_unknown_method(self):
        cfg = EstimatorConfig("bogus", EXP25, 1.0, 1.0, 10)
        with pytest.raises(DomainError):
            cfg.run(4.0)
