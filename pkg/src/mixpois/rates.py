"""Arrival-rate distributions and their large-deviations machinery.

Each distribution knows its cumulant generating function (CGF) with two
derivatives, the supremum of the MGF domain, the supremum of its support,
how to sample itself, and how to sample its exponentially twisted version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleTargetError, LatticeError, ParseError
from .numerics import Interval, find_root_increasing

__all__ = [
    "RateDistribution",
    "Exponential",
    "GammaRate",
    "PoissonRate",
    "TwoPoint",
    "DeterministicRate",
    "RateFunctionPoint",
    "rate_function",
    "bahadur_rao_constant",
    "parse_rate",
]


class RateDistribution:
    """Base class; concrete kinds are the frozen dataclasses below."""

    lattice: bool = False

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    @property
    def mgf_domain_sup(self) -> float:
        """Supremum of theta with finite MGF."""
        return math.inf

    @property
    def support_sup(self) -> float:
        """Supremum of the support (b+)."""
        return math.inf

    def _check_theta(self, theta: float) -> None:
        if theta >= self.mgf_domain_sup:
            raise DomainError(
                f"theta={theta} is outside the MGF domain (sup {self.mgf_domain_sup}) of {self}"
            )

    def cgf(self, theta: float) -> float:
        raise NotImplementedError

    def cgf_d1(self, theta: float) -> float:
        raise NotImplementedError

    def cgf_d2(self, theta: float) -> float:
        raise NotImplementedError

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    # CGF evaluation at the damped tilt tau * sf.  The split argument lets
    # finite-MGF kinds compute the distance to their wall without
    # cancellation: lam - tau*sf = (lam - tau) + tau*(1 - sf), a sum of
    # nonnegative terms when 0 <= tau < lam.  Other kinds simply multiply.
    def cgf_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.cgf(tau * sf_value)

    def cgf_d1_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.cgf_d1(tau * sf_value)

    def cgf_d2_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.cgf_d2(tau * sf_value)

    # range of means reachable by exponential tilting (open interval)
    def _tilt_range(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def _closed_rate_function(self, a: float) -> "RateFunctionPoint | None":
        return None

    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(RateDistribution):
    """Exponential with rate lam (mean 1/lam)."""

    lam: float

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise DomainError(f"exponential rate must be positive, got {self.lam}")

    @property
    def mean(self) -> float:
        return 1.0 / self.lam

    @property
    def variance(self) -> float:
        return 1.0 / self.lam**2

    @property
    def mgf_domain_sup(self) -> float:
        return self.lam

    def cgf(self, theta: float) -> float:
        self._check_theta(theta)
        return -math.log1p(-theta / self.lam)

    def cgf_d1(self, theta: float) -> float:
        self._check_theta(theta)
        return 1.0 / (self.lam - theta)

    def cgf_d2(self, theta: float) -> float:
        self._check_theta(theta)
        return 1.0 / (self.lam - theta) ** 2

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        return stream.exponential(1.0 / self.lam, size=n)

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        self._check_theta(theta)
        return stream.exponential(1.0 / (self.lam - theta), size=n)

    def _closed_rate_function(self, a: float) -> "RateFunctionPoint":
        theta = self.lam - 1.0 / a
        return RateFunctionPoint(
            a=a,
            value=self.lam * a - 1.0 - math.log(self.lam * a),
            theta_star=theta,
            second_deriv=a * a,
            first_deriv_of_I=theta,
        )

    def _wall_gap(self, tau: float, sf_value: float, sf_complement: float) -> float:
        gap = (self.lam - tau) + tau * sf_complement
        if gap <= 0.0:
            raise DomainError(f"tilt {tau} * {sf_value} reaches the MGF wall of {self}")
        return gap

    def cgf_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return math.log(self.lam) - math.log(self._wall_gap(tau, sf_value, sf_complement))

    def cgf_d1_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return 1.0 / self._wall_gap(tau, sf_value, sf_complement)

    def cgf_d2_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return 1.0 / self._wall_gap(tau, sf_value, sf_complement) ** 2

    def label(self) -> str:
        return f"exp:{self.lam:g}"


@dataclass(frozen=True)
class GammaRate(RateDistribution):
    """Gamma with shape beta and rate lam (mean beta/lam)."""

    beta: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.beta > 0.0 and self.lam > 0.0):
            raise DomainError(f"gamma parameters must be positive, got beta={self.beta}, lam={self.lam}")

    @property
    def mean(self) -> float:
        return self.beta / self.lam

    @property
    def variance(self) -> float:
        return self.beta / self.lam**2

    @property
    def mgf_domain_sup(self) -> float:
        return self.lam

    def cgf(self, theta: float) -> float:
        self._check_theta(theta)
        return -self.beta * math.log1p(-theta / self.lam)

    def cgf_d1(self, theta: float) -> float:
        self._check_theta(theta)
        return self.beta / (self.lam - theta)

    def cgf_d2(self, theta: float) -> float:
        self._check_theta(theta)
        return self.beta / (self.lam - theta) ** 2

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        return stream.gamma(self.beta, 1.0 / self.lam, size=n)

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        self._check_theta(theta)
        return stream.gamma(self.beta, 1.0 / (self.lam - theta), size=n)

    def _closed_rate_function(self, a: float) -> "RateFunctionPoint":
        theta = self.lam - self.beta / a
        return RateFunctionPoint(
            a=a,
            value=self.lam * a - self.beta - self.beta * math.log(self.lam * a / self.beta),
            theta_star=theta,
            second_deriv=a * a / self.beta,
            first_deriv_of_I=theta,
        )

    def _wall_gap(self, tau: float, sf_value: float, sf_complement: float) -> float:
        gap = (self.lam - tau) + tau * sf_complement
        if gap <= 0.0:
            raise DomainError(f"tilt {tau} * {sf_value} reaches the MGF wall of {self}")
        return gap

    def cgf_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.beta * (math.log(self.lam) - math.log(self._wall_gap(tau, sf_value, sf_complement)))

    def cgf_d1_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.beta / self._wall_gap(tau, sf_value, sf_complement)

    def cgf_d2_tilted(self, tau: float, sf_value: float, sf_complement: float) -> float:
        return self.beta / self._wall_gap(tau, sf_value, sf_complement) ** 2

    def label(self) -> str:
        return f"gamma:{self.beta:g},{self.lam:g}"


@dataclass(frozen=True)
class PoissonRate(RateDistribution):
    """Poisson-distributed arrival rate with mean lam."""

    lam: float
    lattice = True

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise DomainError(f"poisson mean must be positive, got {self.lam}")

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return self.lam

    def cgf(self, theta: float) -> float:
        return self.lam * math.expm1(theta)

    def cgf_d1(self, theta: float) -> float:
        return self.lam * math.exp(theta)

    def cgf_d2(self, theta: float) -> float:
        return self.lam * math.exp(theta)

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        return stream.poisson(self.lam, size=n).astype(np.float64)

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        return stream.poisson(self.lam * math.exp(theta), size=n).astype(np.float64)

    def _closed_rate_function(self, a: float) -> "RateFunctionPoint":
        theta = math.log(a / self.lam)
        return RateFunctionPoint(
            a=a,
            value=a * math.log(a / self.lam) - a + self.lam,
            theta_star=theta,
            second_deriv=a,
            first_deriv_of_I=theta,
        )

    def label(self) -> str:
        return f"pois:{self.lam:g}"


@dataclass(frozen=True)
class TwoPoint(RateDistribution):
    """Two-point rate: lam1 with probability p, lam2 with probability 1-p."""

    p: float
    lam1: float
    lam2: float
    lattice = True

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"two-point weight must satisfy 0 < p < 1, got {self.p}")
        if not (0.0 < self.lam1 < self.lam2):
            raise DomainError(
                f"two-point levels must satisfy 0 < lam1 < lam2, got {self.lam1}, {self.lam2}"
            )

    @property
    def mean(self) -> float:
        return self.p * self.lam1 + (1.0 - self.p) * self.lam2

    @property
    def variance(self) -> float:
        return self.p * (1.0 - self.p) * (self.lam2 - self.lam1) ** 2

    @property
    def support_sup(self) -> float:
        return self.lam2

    def _log_weights(self, theta: float) -> tuple[float, float, float]:
        """Shifted log weights (w1, w2, shift) with max(w1, w2) = 0."""
        a1 = math.log(self.p) + theta * self.lam1
        a2 = math.log1p(-self.p) + theta * self.lam2
        m = max(a1, a2)
        return a1 - m, a2 - m, m

    def cgf(self, theta: float) -> float:
        b1, b2, m = self._log_weights(theta)
        return m + math.log(math.exp(b1) + math.exp(b2))

    def cgf_d1(self, theta: float) -> float:
        b1, b2, _ = self._log_weights(theta)
        w1, w2 = math.exp(b1), math.exp(b2)
        return (self.lam1 * w1 + self.lam2 * w2) / (w1 + w2)

    def cgf_d2(self, theta: float) -> float:
        b1, b2, _ = self._log_weights(theta)
        w1, w2 = math.exp(b1), math.exp(b2)
        return w1 * w2 * (self.lam2 - self.lam1) ** 2 / (w1 + w2) ** 2

    def _twisted_p(self, theta: float) -> float:
        b1, b2, _ = self._log_weights(theta)
        w1, w2 = math.exp(b1), math.exp(b2)
        return w1 / (w1 + w2)

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        u = stream.random(n)
        return np.where(u < self.p, self.lam1, self.lam2)

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        u = stream.random(n)
        return np.where(u < self._twisted_p(theta), self.lam1, self.lam2)

    def _tilt_range(self) -> tuple[float, float]:
        return (self.lam1, self.lam2)

    def label(self) -> str:
        return f"twopoint:{self.p:g},{self.lam1:g},{self.lam2:g}"


@dataclass(frozen=True)
class DeterministicRate(RateDistribution):
    """Point mass at lam."""

    lam: float
    lattice = True

    def __post_init__(self) -> None:
        if not self.lam > 0.0:
            raise DomainError(f"deterministic rate must be positive, got {self.lam}")

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return 0.0

    @property
    def support_sup(self) -> float:
        return self.lam

    def cgf(self, theta: float) -> float:
        return self.lam * theta

    def cgf_d1(self, theta: float) -> float:
        return self.lam

    def cgf_d2(self, theta: float) -> float:
        return 0.0

    def sample(self, stream: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, self.lam, dtype=np.float64)

    def sample_twisted(self, theta: float, stream: np.random.Generator, n: int) -> np.ndarray:
        return self.sample(stream, n)

    def _tilt_range(self) -> tuple[float, float]:
        return (self.lam, self.lam)

    def label(self) -> str:
        return f"det:{self.lam:g}"


@dataclass(frozen=True)
class RateFunctionPoint:
    """Legendre transform of the CGF evaluated at target mean ``a``."""

    a: float
    value: float
    theta_star: float
    second_deriv: float
    first_deriv_of_I: float


def rate_function(dist: RateDistribution, a: float, method: str = "auto") -> RateFunctionPoint:
    """Rate function I_X(a) = sup_theta {theta*a - CGF(theta)} with optimizer.

    ``method`` selects between the closed form (where one exists) and the
    numeric solve of CGF'(theta) = a; "auto" prefers the closed form.
    """
    if method not in ("auto", "closed", "numeric"):
        raise DomainError(f"unknown rate_function method {method!r}")
    if isinstance(dist, DeterministicRate):
        if a != dist.lam:
            raise InfeasibleTargetError(
                f"deterministic rate {dist.lam} cannot reach target mean {a}"
            )
        return RateFunctionPoint(a=a, value=0.0, theta_star=0.0, second_deriv=0.0, first_deriv_of_I=0.0)

    lo, hi = dist._tilt_range()
    if isinstance(dist, TwoPoint):
        if a == dist.lam1:
            t = -math.inf
            return RateFunctionPoint(a=a, value=-math.log(dist.p), theta_star=t,
                                     second_deriv=0.0, first_deriv_of_I=t)
        if a == dist.lam2:
            t = math.inf
            return RateFunctionPoint(a=a, value=-math.log1p(-dist.p), theta_star=t,
                                     second_deriv=0.0, first_deriv_of_I=t)
    if not (lo < a < hi):
        raise InfeasibleTargetError(
            f"target mean {a} is outside the reachable range ({lo}, {hi}) of {dist}"
        )

    if method in ("auto", "closed"):
        closed = dist._closed_rate_function(a)
        if closed is not None:
            return closed
        if method == "closed":
            raise DomainError(f"{dist} has no closed-form rate function")

    sup = dist.mgf_domain_sup
    hi_limit = math.inf if math.isinf(sup) else sup - 1e-12 * max(1.0, abs(sup))
    theta = find_root_increasing(
        lambda t: dist.cgf_d1(t) - a,
        Interval(-1.0, min(1.0, hi_limit)),
        tol=1e-13,
        hi_limit=hi_limit,
    )
    return RateFunctionPoint(
        a=a,
        value=theta * a - dist.cgf(theta),
        theta_star=theta,
        second_deriv=dist.cgf_d2(theta),
        first_deriv_of_I=theta,
    )


def bahadur_rao_constant(dist: RateDistribution, a: float) -> float:
    """Sharp-asymptotics prefactor 1/(theta* sqrt(2 pi CGF''(theta*))).

    Defined here for non-lattice rate laws with a above the mean, so that
    theta* is positive.
    """
    if dist.lattice:
        raise LatticeError(f"{dist} is lattice; its tail prefactor is not of this form")
    if not a > dist.mean:
        raise DomainError(f"prefactor requires a > mean, got a={a}, mean={dist.mean}")
    point = rate_function(dist, a)
    return 1.0 / (point.theta_star * math.sqrt(2.0 * math.pi * point.second_deriv))


def _parse_floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise ParseError(f"{what} expects {n} comma-separated numbers, got {text!r}")
    out = []
    for part in parts:
        if part != part.strip() or not part:
            raise ParseError(f"malformed number {part!r} in {what} specification")
        try:
            out.append(float(part))
        except ValueError:
            raise ParseError(f"malformed number {part!r} in {what} specification") from None
    return out


def parse_rate(text: str) -> RateDistribution:
    """Parse a rate-distribution specification.

    Grammar: ``exp:<lam>``, ``gamma:<beta>,<lam>``, ``pois:<lam>``,
    ``twopoint:<p>,<lam1>,<lam2>``, ``det:<lam>``.
    """
    if any(ch.isspace() for ch in text):
        raise ParseError(f"rate specification must not contain whitespace: {text!r}")
    kind, sep, args = text.partition(":")
    if not sep:
        raise ParseError(f"missing ':' in rate specification {text!r}")
    try:
        if kind == "exp":
            return Exponential(*_parse_floats(args, 1, "exp"))
        if kind == "gamma":
            return GammaRate(*_parse_floats(args, 2, "gamma"))
        if kind == "pois":
            return PoissonRate(*_parse_floats(args, 1, "pois"))
        if kind == "twopoint":
            return TwoPoint(*_parse_floats(args, 3, "twopoint"))
        if kind == "det":
            return DeterministicRate(*_parse_floats(args, 1, "det"))
    except DomainError as exc:
        raise ParseError(f"invalid parameters in {text!r}: {exc}") from None
    raise ParseError(f"unknown rate kind {kind!r} (expected exp, gamma, pois, twopoint or det)")
