"""Infinite-server layer: service-time laws, slot retention probabilities,
sharp approximations of the occupancy tail, and crude simulation.

Time is normalized so the observation epoch is 1 and arrivals in slot i of N
get thinned by the retention probability omega_i(N), the chance that such an
arrival is still in service at the observation epoch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, HypothesisWarning, MgfDomainError, ParseError, RarityError
from .numerics import Interval, QuadratureSpec, find_root_increasing, integrate
from .poisson_ldp import ceil_count, exact_count, poisson_rate
from .rates import RateDistribution
from .sampling import DEFAULT_OP_BUDGET, EstimatorResult, StreamPartition, _check_budget, _run_chunked
from .tail_asymptotics import DecayRate

__all__ = [
    "ServiceTime",
    "ExpService",
    "DetService",
    "Pareto2Service",
    "QueueApprox",
    "LoadVariance",
    "parse_service",
    "omega",
    "omega_vector",
    "mc_Q",
    "theta_star_queue",
    "queue_approx",
    "log_asym_Q",
    "load_and_variance",
]

_QUAD = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)


class ServiceTime:
    """Service-time law described through its complementary cdf."""

    twice_differentiable_on_01: bool = True

    def __init__(self, mean: float):
        if not mean > 0.0:
            raise DomainError(f"service mean must be positive, got {mean}")
        self.mean = float(mean)

    def sf(self, x: float) -> float:
        """Complementary distribution function at x >= 0."""
        raise NotImplementedError

    def sf_complement(self, x: float) -> float:
        """1 - sf(x), computed without cancellation for small x."""
        raise NotImplementedError

    def sf_integral(self, u: float, v: float) -> float:
        """Exact integral of sf over [u, v]."""
        raise NotImplementedError

    def sf_sq_integral(self, u: float, v: float) -> float:
        """Exact integral of sf^2 over [u, v]."""
        raise NotImplementedError

    def sf_sq_integral_total(self) -> float:
        """Exact integral of sf^2 over [0, infinity)."""
        raise NotImplementedError

    @property
    def breakpoints_in_unit(self) -> tuple[float, ...]:
        """Kink locations of sf strictly inside (0, 1)."""
        return ()

    def label(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(mean={self.mean})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.mean == other.mean

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.mean))


class ExpService(ServiceTime):
    """Exponential service times."""

    def sf(self, x: float) -> float:
        return math.exp(-x / self.mean)

    def sf_complement(self, x: float) -> float:
        return -math.expm1(-x / self.mean)

    def sf_integral(self, u: float, v: float) -> float:
        E = self.mean
        return E * (math.exp(-u / E) - math.exp(-v / E))

    def sf_sq_integral(self, u: float, v: float) -> float:
        E = self.mean
        return 0.5 * E * (math.exp(-2.0 * u / E) - math.exp(-2.0 * v / E))

    def sf_sq_integral_total(self) -> float:
        return 0.5 * self.mean

    def label(self) -> str:
        return f"exp:{self.mean:g}"


class DetService(ServiceTime):
    """Deterministic service times; the complementary cdf is an indicator."""

    twice_differentiable_on_01 = False

    def sf(self, x: float) -> float:
        return 1.0 if x < self.mean else 0.0

    def sf_complement(self, x: float) -> float:
        return 0.0 if x < self.mean else 1.0

    def sf_integral(self, u: float, v: float) -> float:
        return max(0.0, min(v, self.mean) - min(u, self.mean))

    def sf_sq_integral(self, u: float, v: float) -> float:
        return self.sf_integral(u, v)

    def sf_sq_integral_total(self) -> float:
        return self.mean

    @property
    def breakpoints_in_unit(self) -> tuple[float, ...]:
        return (self.mean,) if 0.0 < self.mean < 1.0 else ()

    def label(self) -> str:
        return f"det:{self.mean:g}"


class Pareto2Service(ServiceTime):
    """Pareto service times with tail exponent 2 (finite mean, infinite variance)."""

    def sf(self, x: float) -> float:
        return (1.0 + x / self.mean) ** -2

    def sf_complement(self, x: float) -> float:
        t = x / self.mean
        return t * (2.0 + t) / (1.0 + t) ** 2

    def sf_integral(self, u: float, v: float) -> float:
        E = self.mean
        return E * ((1.0 + u / E) ** -1 - (1.0 + v / E) ** -1)

    def sf_sq_integral(self, u: float, v: float) -> float:
        E = self.mean
        return E / 3.0 * ((1.0 + u / E) ** -3 - (1.0 + v / E) ** -3)

    def sf_sq_integral_total(self) -> float:
        return self.mean / 3.0

    def label(self) -> str:
        return f"pareto:{self.mean:g}"


def parse_service(text: str) -> ServiceTime:
    """Parse a service specification: ``exp:<E>``, ``det:<E>`` or ``pareto:<E>``."""
    if any(ch.isspace() for ch in text):
        raise ParseError(f"service specification must not contain whitespace: {text!r}")
    kind, sep, arg = text.partition(":")
    if not sep:
        raise ParseError(f"missing ':' in service specification {text!r}")
    try:
        mean = float(arg)
    except ValueError:
        raise ParseError(f"malformed service mean {arg!r}") from None
    try:
        if kind == "exp":
            return ExpService(mean)
        if kind == "det":
            return DetService(mean)
        if kind == "pareto":
            return Pareto2Service(mean)
    except DomainError as exc:
        raise ParseError(f"invalid parameters in {text!r}: {exc}") from None
    raise ParseError(f"unknown service kind {kind!r} (expected exp, det or pareto)")


def omega(i: int, N: int, service: ServiceTime) -> float:
    """Retention probability of slot i among N: N * int_{(i-1)/N}^{i/N} sf."""
    if not (isinstance(i, int) and isinstance(N, int)):
        raise DomainError("slot index and slot count must be integers")
    if not (1 <= i <= N):
        raise DomainError(f"slot index must satisfy 1 <= i <= N, got i={i}, N={N}")
    return N * service.sf_integral((i - 1) / N, i / N)


def omega_vector(N: int, service: ServiceTime) -> np.ndarray:
    return np.array([omega(i, N, service) for i in range(1, N + 1)])


def mean_load(dist: RateDistribution, service: ServiceTime) -> float:
    """Scaled mean occupancy at the observation epoch: mean rate times int sf."""
    return dist.mean * service.sf_integral(0.0, 1.0)


def _quad_spec(service: ServiceTime) -> QuadratureSpec:
    return QuadratureSpec(
        breakpoints=service.breakpoints_in_unit,
        abs_tol=_QUAD.abs_tol,
        rel_tol=_QUAD.rel_tol,
    )


def _tilt_cap_exp(dist: RateDistribution) -> float:
    """Upper limit for theta when the tilt enters through e^theta - 1.

    The margin keeps the integrand's boundary layer at the MGF wall wide
    enough for the quadrature to resolve; it costs only a logarithmic sliver
    of the reachable occupancy range.
    """
    sup = dist.mgf_domain_sup
    if math.isinf(sup):
        return math.inf
    return math.log1p(sup - 1e-9 * max(1.0, sup))


def theta_star_queue(dist: RateDistribution, service: ServiceTime, a: float) -> float:
    """Tilt making the expected occupancy equal a.

    Solves int_0^1 CGF'(sf(x) (e^t - 1)) sf(x) e^t dx = a, which is strictly
    increasing in t; requires a above the mean load and a tilt within the
    MGF domain.
    """
    load = mean_load(dist, service)
    if not a > load:
        raise RarityError(f"occupancy level a={a} must exceed the mean load {load}")
    spec = _quad_spec(service)
    unit = Interval(0.0, 1.0)

    def g(theta: float) -> float:
        tau = math.expm1(theta)
        e_t = math.exp(theta)
        val = integrate(
            lambda x: dist.cgf_d1_tilted(tau, service.sf(x), service.sf_complement(x))
            * service.sf(x)
            * e_t,
            unit,
            spec,
        )
        return val - a

    cap = _tilt_cap_exp(dist)
    try:
        return find_root_increasing(
            g, Interval(0.0, min(1.0, cap)), tol=1e-12, lo_limit=0.0, hi_limit=cap
        )
    except DomainError:
        reachable = g(cap) + a if math.isfinite(cap) else math.inf
        raise MgfDomainError(
            f"occupancy level a={a} is unreachable: tilts are confined to "
            f"(0, {cap:.6g}] by the MGF domain, which only reaches mean occupancy "
            f"{reachable:.6g}"
        ) from None


@dataclass(frozen=True)
class QueueApprox:
    """Sharp occupancy-tail approximation at one (N, a).

    ``hypothesis_violated`` flags service laws whose complementary cdf is not
    twice differentiable on the unit interval (deterministic service); the
    formula is still evaluated, matching how the reference tables are built.
    """

    theta_star: float
    sigma2: float
    log_q_check: float
    log_Q_check: float
    integral_cgf: float
    hypothesis_violated: bool

    @property
    def q_check(self) -> float:
        return math.exp(self.log_q_check)

    @property
    def Q_check(self) -> float:
        return math.exp(self.log_Q_check)


def queue_approx(dist: RateDistribution, service: ServiceTime, N: float, a: float) -> QueueApprox:
    """Sharp approximation of the occupancy point and tail probabilities."""
    if not N > 0.0:
        raise DomainError(f"N must be positive, got {N}")
    theta = theta_star_queue(dist, service, a)
    tau = math.expm1(theta)
    spec = _quad_spec(service)
    unit = Interval(0.0, 1.0)
    integral_cgf = integrate(
        lambda x: dist.cgf_tilted(tau, service.sf(x), service.sf_complement(x)), unit, spec
    )
    e2t = math.exp(2.0 * theta)
    sigma2 = a + integrate(
        lambda x: dist.cgf_d2_tilted(tau, service.sf(x), service.sf_complement(x))
        * service.sf(x) ** 2
        * e2t,
        unit,
        spec,
    )
    log_q = (
        -theta * N * a
        + N * integral_cgf
        - 0.5 * math.log(2.0 * math.pi * N)
        - 0.5 * math.log(sigma2)
    )
    log_Q = log_q - math.log(-math.expm1(-theta))
    violated = not service.twice_differentiable_on_01
    if violated:
        warnings.warn(
            f"{service.label()}: the sharp occupancy formula assumes a twice "
            "differentiable complementary cdf; value computed anyway",
            HypothesisWarning,
            stacklevel=2,
        )
    return QueueApprox(
        theta_star=theta,
        sigma2=sigma2,
        log_q_check=log_q,
        log_Q_check=log_Q,
        integral_cgf=integral_cgf,
        hypothesis_violated=violated,
    )


def mc_Q(
    dist: RateDistribution,
    service: ServiceTime,
    N: int,
    a: float,
    runs: int,
    partition: StreamPartition,
    point: bool = False,
    op_budget: int = DEFAULT_OP_BUDGET,
) -> EstimatorResult:
    """Crude Monte Carlo for the occupancy tail (or point mass) at level N*a."""
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"N must be a positive integer, got {N}")
    _check_budget(runs, N + 1, op_budget)
    omegas = omega_vector(N, service)
    k = exact_count(N * a) if point else ceil_count(N * a)

    def weights(rng: np.random.Generator, m: int) -> np.ndarray:
        x = dist.sample(rng, m * N).reshape(m, N)
        lam = x @ omegas
        z = rng.poisson(lam)
        hit = (z == k) if point else (z >= k)
        return hit.astype(np.float64)

    weights.scalars_per_run = N + 1
    return _run_chunked(partition, runs, weights)


def log_asym_Q(dist: RateDistribution, service: ServiceTime, alpha: float, a: float) -> DecayRate:
    """Decay rate of the occupancy tail for any alpha > 0."""
    if alpha <= 0.0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    load = mean_load(dist, service)
    if not a > load:
        raise RarityError(f"occupancy level a={a} must exceed the mean load {load}")
    spec = _quad_spec(service)
    unit = Interval(0.0, 1.0)

    if alpha > 1.0:
        return DecayRate(rate=poisson_rate(a, load).rate, gamma=1.0)

    if alpha == 1.0:
        theta = theta_star_queue(dist, service, a)
        tau = math.expm1(theta)
        integral = integrate(
            lambda x: dist.cgf_tilted(tau, service.sf(x), service.sf_complement(x)), unit, spec
        )
        return DecayRate(rate=theta * a - integral, gamma=1.0)

    # linear tilt: sup_t {t a - int CGF(t sf(x)) dx}
    sup = dist.mgf_domain_sup
    cap = math.inf if math.isinf(sup) else sup - 1e-9 * max(1.0, sup)

    def g(theta: float) -> float:
        val = integrate(
            lambda x: dist.cgf_d1_tilted(theta, service.sf(x), service.sf_complement(x))
            * service.sf(x),
            unit,
            spec,
        )
        return val - a

    try:
        theta = find_root_increasing(
            g, Interval(0.0, min(1.0, cap)), tol=1e-12, lo_limit=0.0, hi_limit=cap
        )
    except DomainError:
        raise MgfDomainError(
            f"occupancy level a={a} is unreachable by linear tilts within (0, {cap:.6g})"
        ) from None
    integral = integrate(
        lambda x: dist.cgf_tilted(theta, service.sf(x), service.sf_complement(x)), unit, spec
    )
    return DecayRate(rate=theta * a - integral, gamma=alpha)


@dataclass(frozen=True)
class LoadVariance:
    """Mean and variance decomposition of the occupancy."""

    M1: float                  # transient mean at the observation epoch
    M_inf: float               # stationary mean, N * mean rate * mean service
    var_total: float
    var_overdispersion: float  # N * Var(rate) * int_0^inf sf^2
    var_poisson: float         # N * mean rate * mean service


def load_and_variance(dist: RateDistribution, service: ServiceTime, N: int) -> LoadVariance:
    """Occupancy mean and stationary variance split into its two sources."""
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"N must be a positive integer, got {N}")
    m1 = dist.mean * float(omega_vector(N, service).sum())
    m_inf = N * dist.mean * service.mean
    var_over = N * dist.variance * service.sf_sq_integral_total()
    var_pois = N * dist.mean * service.mean
    return LoadVariance(
        M1=m1,
        M_inf=m_inf,
        var_total=var_over + var_pois,
        var_overdispersion=var_over,
        var_poisson=var_pois,
    )
