import math

import numpy as np
import pytest

from mixpois.errors import DomainError, InfeasibleTargetError, LatticeError, ParseError
from mixpois.rates import (
    DeterministicRate,
    Exponential,
    GammaRate,
    PoissonRate,
    TwoPoint,
    bahadur_rao_constant,
    parse_rate,
    rate_function,
)
from mixpois.sampling import StreamPartition

ALL_KINDS = [
    Exponential(2.5),
    GammaRate(2.0, 2.0),
    PoissonRate(2.0),
    TwoPoint(0.75, 1.0, 5.0),
    DeterministicRate(2.0),
]


def rng(seed=0):
    return StreamPartition(seed).generator(0)


class TestConstruction:
    def test_means(self):
        assert Exponential(2.5).mean == pytest.approx(0.4)
        assert GammaRate(2.0, 4.0).mean == pytest.approx(0.5)
        assert PoissonRate(3.0).mean == 3.0
        assert TwoPoint(0.75, 1.0, 5.0).mean == pytest.approx(2.0)
        assert DeterministicRate(1.5).mean == 1.5

    def test_mgf_domain(self):
        assert Exponential(2.5).mgf_domain_sup == 2.5
        assert GammaRate(1.0, 3.0).mgf_domain_sup == 3.0
        assert math.isinf(PoissonRate(1.0).mgf_domain_sup)
        assert math.isinf(TwoPoint(0.5, 1.0, 2.0).mgf_domain_sup)

    def test_support_sup(self):
        assert math.isinf(Exponential(1.0).support_sup)
        assert TwoPoint(0.5, 1.0, 2.0).support_sup == 2.0
        assert DeterministicRate(3.0).support_sup == 3.0

    def test_lattice_flags(self):
        assert not Exponential(1.0).lattice
        assert not GammaRate(1.0, 1.0).lattice
        assert PoissonRate(1.0).lattice
        assert TwoPoint(0.5, 1.0, 2.0).lattice
        assert DeterministicRate(1.0).lattice

    @pytest.mark.parametrize(
        "factory",
        [
            lambda: Exponential(0.0),
            lambda: GammaRate(-1.0, 1.0),
            lambda: PoissonRate(-2.0),
            lambda: TwoPoint(1.5, 1.0, 2.0),
            lambda: TwoPoint(0.5, 2.0, 1.0),
            lambda: DeterministicRate(0.0),
        ],
    )
    def test_invalid(self, factory):
        with pytest.raises(DomainError):
            factory()


class TestCgf:
    @pytest.mark.parametrize("dist", ALL_KINDS)
    def test_normalization(self, dist):
        assert dist.cgf(0.0) == pytest.approx(0.0, abs=1e-14)
        assert dist.cgf_d1(0.0) == pytest.approx(dist.mean, rel=1e-13)
        assert dist.cgf_d2(0.0) == pytest.approx(dist.variance, rel=1e-12, abs=1e-13)

    def test_exponential_values(self):
        # d/dt of -log(1 - t/lam) is 1/(lam - t)
        e = Exponential(2.0)
        assert e.cgf(1.0) == pytest.approx(math.log(2.0), abs=1e-13)
        assert e.cgf_d1(1.0) == pytest.approx(1.0, abs=1e-13)
        assert e.cgf_d2(1.0) == pytest.approx(1.0, abs=1e-13)

    def test_two_point_mean(self):
        assert TwoPoint(0.75, 1.0, 5.0).cgf_d1(0.0) == pytest.approx(2.0)

    def test_two_point_overflow_safe(self):
        tp = TwoPoint(0.75, 1.0, 5.0)
        # at a huge tilt the high state dominates; values must stay finite
        assert tp.cgf_d1(300.0) == pytest.approx(5.0)
        assert tp.cgf(300.0) == pytest.approx(300.0 * 5.0 + math.log(0.25), rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            Exponential(2.0).cgf(2.0)
        with pytest.raises(DomainError):
            GammaRate(1.0, 2.0).cgf_d1(3.0)

    @pytest.mark.parametrize("dist", ALL_KINDS[:4])
    def test_derivatives_by_finite_differences(self, dist):
        h = 1e-6
        for t in (-0.5, 0.0, 0.7):
            d1 = (dist.cgf(t + h) - dist.cgf(t - h)) / (2.0 * h)
            d2 = (dist.cgf(t + h) - 2.0 * dist.cgf(t) + dist.cgf(t - h)) / h**2
            assert dist.cgf_d1(t) == pytest.approx(d1, rel=1e-7, abs=1e-7)
            assert dist.cgf_d2(t) == pytest.approx(d2, rel=1e-3, abs=1e-3)


class TestRateFunction:
    @pytest.mark.parametrize("dist", ALL_KINDS)
    def test_zero_at_mean(self, dist):
        point = rate_function(dist, dist.mean)
        assert point.value == pytest.approx(0.0, abs=1e-12)
        assert point.theta_star == pytest.approx(0.0, abs=1e-10)

    def test_exponential_closed_form(self):
        point = rate_function(Exponential(2.5), 1.0)
        assert point.value == pytest.approx(2.5 - 1.0 - math.log(2.5), rel=1e-12)
        assert point.theta_star == pytest.approx(1.5, rel=1e-12)

    def test_poisson_closed_form(self):
        point = rate_function(PoissonRate(2.0), 3.0)
        assert point.value == pytest.approx(3.0 * math.log(1.5) - 1.0, rel=1e-12)
        assert point.theta_star == pytest.approx(math.log(1.5), rel=1e-12)

    @pytest.mark.parametrize(
        "dist,targets",
        [
            (Exponential(2.5), (0.15, 0.4, 1.0, 3.0)),
            (GammaRate(2.0, 2.0), (0.3, 1.0, 2.0, 7.0)),
            (PoissonRate(2.0), (0.5, 2.0, 3.0, 9.0)),
            (TwoPoint(0.75, 1.0, 5.0), (1.2, 2.0, 3.3, 4.8)),
        ],
    )
    def test_numeric_matches_auto(self, dist, targets):
        for a in targets:
            auto = rate_function(dist, a, "auto")
            numeric = rate_function(dist, a, "numeric")
            assert numeric.theta_star == pytest.approx(auto.theta_star, abs=1e-10)
            assert numeric.value == pytest.approx(auto.value, abs=1e-10)

    @pytest.mark.parametrize("dist", ALL_KINDS[:4])
    def test_nonneg_convex_and_duality(self, dist):
        lo, hi = dist._tilt_range()
        lo = max(lo, 1e-3)
        hi = min(hi, 5.0 * dist.mean)
        grid = [lo + (hi - lo) * i / 40.0 for i in range(1, 40)]
        values = []
        for a in grid:
            point = rate_function(dist, a)
            values.append(point.value)
            assert point.value >= -1e-12
            if abs(a - dist.mean) > 1e-3:
                assert point.value > 0.0
            # Legendre duality
            assert dist.cgf(point.theta_star) + point.value == pytest.approx(
                point.theta_star * a, abs=1e-10
            )
            assert point.first_deriv_of_I == point.theta_star
        second_diffs = [values[i - 1] - 2 * values[i] + values[i + 1] for i in range(1, len(values) - 1)]
        assert min(second_diffs) >= -1e-9

    def test_two_point_boundaries(self):
        tp = TwoPoint(0.75, 1.0, 5.0)
        low = rate_function(tp, 1.0)
        assert low.value == pytest.approx(-math.log(0.75), rel=1e-12)
        assert low.theta_star == -math.inf
        high = rate_function(tp, 5.0)
        assert high.value == pytest.approx(-math.log(0.25), rel=1e-12)
        assert high.theta_star == math.inf

    def test_infeasible(self):
        with pytest.raises(InfeasibleTargetError):
            rate_function(TwoPoint(0.75, 1.0, 5.0), 6.0)
        with pytest.raises(InfeasibleTargetError):
            rate_function(Exponential(1.0), -0.5)
        with pytest.raises(InfeasibleTargetError):
            rate_function(DeterministicRate(2.0), 3.0)

    def test_deterministic_at_mean(self):
        point = rate_function(DeterministicRate(2.0), 2.0)
        assert point.value == 0.0
        assert point.theta_star == 0.0


class TestBahadurRaoConstant:
    def test_exponential_examples(self):
        # theta* = lam - 1/a and CGF'' = a^2 at the tilt
        assert bahadur_rao_constant(Exponential(2.5), 1.0) == pytest.approx(
            1.0 / (1.5 * math.sqrt(2.0 * math.pi)), rel=1e-12
        )
        assert bahadur_rao_constant(Exponential(1.0), 2.0) == pytest.approx(
            1.0 / (0.5 * math.sqrt(8.0 * math.pi)), rel=1e-12
        )

    def test_gamma_example(self):
        assert bahadur_rao_constant(GammaRate(2.0, 2.0), 2.0) == pytest.approx(
            1.0 / math.sqrt(4.0 * math.pi), rel=1e-12
        )

    @pytest.mark.parametrize("dist", [PoissonRate(1.0), TwoPoint(0.5, 1.0, 3.0), DeterministicRate(1.0)])
    def test_lattice_rejected(self, dist):
        with pytest.raises(LatticeError):
            bahadur_rao_constant(dist, 2.0 * dist.mean)

    def test_needs_upper_deviation(self):
        with pytest.raises(DomainError):
            bahadur_rao_constant(Exponential(1.0), 0.5)


class TestSampling:
    def test_deterministic(self):
        assert list(DeterministicRate(2.0).sample(rng(), 3)) == [2.0, 2.0, 2.0]

    def test_exponential_mean(self):
        x = Exponential(2.0).sample(rng(1), 10**6)
        assert abs(x.mean() - 0.5) < 5e-3

    def test_two_point_fraction(self):
        tp = TwoPoint(0.75, 1.0, 5.0)
        x = tp.sample(rng(2), 10**6)
        frac_high = float(np.mean(x == 5.0))
        assert abs(frac_high - 0.25) < 3.3 * math.sqrt(0.25 * 0.75 / 10**6)
        assert set(np.unique(x)) == {1.0, 5.0}

    def test_gamma_non_integer_shape(self):
        g = GammaRate(0.5, 1.0)
        x = g.sample(rng(3), 10**6)
        assert abs(x.mean() - 0.5) < 4.0 * math.sqrt(g.variance / 10**6)

    @pytest.mark.parametrize("dist", ALL_KINDS)
    def test_zero_twist_is_identical(self, dist):
        a = dist.sample(rng(7), 1000)
        b = dist.sample_twisted(0.0, rng(7), 1000)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize(
        "dist,theta",
        [
            (Exponential(1.0), 0.5),
            (GammaRate(2.0, 2.0), 0.8),
            (PoissonRate(2.0), math.log(1.5)),
            (TwoPoint(0.75, 1.0, 5.0), 0.4),
        ],
    )
    def test_twist_consistency(self, dist, theta):
        n = 10**6
        x = dist.sample_twisted(theta, rng(11), n)
        se = math.sqrt(dist.cgf_d2(theta) / n)
        assert abs(x.mean() - dist.cgf_d1(theta)) < 4.0 * se

    def test_twisted_exponential_mean_two(self):
        # tilt moving the mean to 2: theta = lam - 1/a = 0.5
        x = Exponential(1.0).sample_twisted(0.5, rng(5), 10**6)
        assert abs(x.mean() - 2.0) < 7e-3

    def test_twisted_poisson_mean(self):
        x = PoissonRate(2.0).sample_twisted(math.log(1.5), rng(6), 10**6)
        assert abs(x.mean() - 3.0) < 4.0 * math.sqrt(3.0 / 10**6)


class TestParse:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("exp:2.5", Exponential(2.5)),
            ("gamma:2,2", GammaRate(2.0, 2.0)),
            ("pois:0.1", PoissonRate(0.1)),
            ("twopoint:0.75,1,5", TwoPoint(0.75, 1.0, 5.0)),
            ("det:1.5", DeterministicRate(1.5)),
        ],
    )
    def test_round_trip(self, text, expected):
        dist = parse_rate(text)
        assert dist == expected
        assert parse_rate(dist.label()) == expected

    @pytest.mark.parametrize(
        "text",
        [
            "exp",
            "exp:",
            "exp:1,2",
            "norm:1",
            "exp: 1",
            "exp:1 ",
            "twopoint:0.75,5,1",
            "gamma:2",
            "exp:-1",
            "pois:abc",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            parse_rate(text)
