"""Asymptotic dimensioning: smallest capacity level meeting an overflow
target, with the bracketing integer server counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, MgfDomainError
from .queue import ServiceTime, load_and_variance, mc_Q, mean_load, queue_approx
from .rates import RateDistribution
from .sampling import EstimatorResult, StreamPartition

__all__ = ["StaffingResult", "StaffingRow", "solve_staffing", "staffing_table"]


@dataclass(frozen=True)
class StaffingResult:
    """Dimensioning output at one (distribution, service, N, epsilon)."""

    a_eps: float
    servers_floor: int
    servers_ceil: int
    Q_at_floor: float
    Q_at_ceil: float
    M1: float
    M_inf: float
    epsilon: float
    verification: EstimatorResult | None = None


def _Q_check(dist, service, N, a) -> float:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # deterministic-service hypothesis flag
        return queue_approx(dist, service, N, a).Q_check


def solve_staffing(
    dist: RateDistribution,
    service: ServiceTime,
    N: int,
    eps: float,
    tol: float = 1e-9,
    verify_runs: int = 0,
    partition: StreamPartition | None = None,
) -> StaffingResult:
    """Smallest a with the occupancy-tail approximation at most eps.

    Bisection on a runs until |Q(a) - eps| < tol; the returned level is then
    re-evaluated at the two bracketing integer server counts.  With
    ``verify_runs`` > 0 a crude Monte Carlo audit of the solution is attached.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError(f"target epsilon must be in (0, 1), got {eps}")
    if not 0.0 < tol < eps:
        raise DomainError(
            f"tol must lie in (0, eps): the termination band |Q - eps| < tol is "
            f"meaningless otherwise (got tol={tol}, eps={eps})"
        )
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"N must be a positive integer, got {N}")

    lo = mean_load(dist, service) * (1.0 + 1e-6)
    if _Q_check(dist, service, N, lo) < eps:
        raise DomainError(
            f"epsilon={eps} is met already at the rarity boundary a={lo:.6g}; "
            "no dimensioning needed"
        )
    hi = lo
    for _ in range(80):
        hi *= 2.0
        try:
            if _Q_check(dist, service, N, hi) < eps:
                break
        except MgfDomainError:
            raise MgfDomainError(
                f"epsilon={eps} is unreachable: the approximation cannot be pushed "
                f"below it within the MGF domain of {dist}"
            ) from None
    else:
        raise ConvergenceError("no upper bracket found for the staffing level")

    a = 0.5 * (lo + hi)
    for _ in range(200):
        a = 0.5 * (lo + hi)
        q = _Q_check(dist, service, N, a)
        if abs(q - eps) < tol:
            break
        if q > eps:
            lo = a
        else:
            hi = a
    else:
        raise ConvergenceError(
            f"staffing bisection did not reach |Q - eps| < {tol} "
            f"(bracket [{lo}, {hi}])"
        )

    servers_floor = math.floor(N * a)
    servers_ceil = math.ceil(N * a)
    loads = load_and_variance(dist, service, N)
    verification = None
    if verify_runs > 0:
        verification = mc_Q(
            dist, service, N, a, verify_runs, partition or StreamPartition(0)
        )
    return StaffingResult(
        a_eps=a,
        servers_floor=servers_floor,
        servers_ceil=servers_ceil,
        Q_at_floor=_Q_check(dist, service, N, servers_floor / N),
        Q_at_ceil=_Q_check(dist, service, N, servers_ceil / N),
        M1=loads.M1,
        M_inf=loads.M_inf,
        epsilon=eps,
        verification=verification,
    )


@dataclass(frozen=True)
class StaffingRow:
    service: ServiceTime
    epsilon: float
    result: StaffingResult | None
    error: str | None


def staffing_table(
    dist: RateDistribution,
    services: list[ServiceTime],
    N: int,
    eps_list: list[float],
    tol: float = 1e-9,
    verify_runs: int = 0,
    base_seed: int = 0,
) -> list[StaffingRow]:
    """One staffing row per (service, epsilon) pair; failures become row errors."""
    if not services or not eps_list:
        raise DomainError("services and eps_list must be nonempty")
    rows = []
    for service in services:
        for eps in eps_list:
            try:
                result = solve_staffing(
                    dist, service, N, eps, tol=tol,
                    verify_runs=verify_runs,
                    partition=StreamPartition(base_seed),
                )
                rows.append(StaffingRow(service, eps, result, None))
            except Exception as exc:  # per-row error column instead of abort
                rows.append(StaffingRow(service, eps, None, f"{type(exc).__name__}: {exc}"))
    return rows
