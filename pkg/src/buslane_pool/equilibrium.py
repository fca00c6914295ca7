"""System optimum and user equilibrium of the solo/pool split.

The split ``beta`` sends ``beta * x_rs`` ride-hailing passengers into the bus
network as pooled trips and the rest into the vehicle network as solo trips.
Both problems are one-dimensional and convex (for ``b > 1``), so each solver
classifies the endpoints by the sign of the objective slope and otherwise
bisects the slope to a root.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable

from .errors import ContractError, InfeasibleError, NumericError
from .model import (
    DemandProfile,
    NetworkParams,
    ServiceParams,
    SpaceAllocation,
    Split,
    bus_user_delay,
    pool_delay,
    vehicle_delay,
)

__all__ = [
    "SolverSettings",
    "Scenario",
    "PhtBreakdown",
    "SplitKind",
    "SplitSolution",
    "ConditionReport",
    "Feasibility",
    "pht",
    "pht_gradient",
    "delay_derivatives",
    "so_stationarity_gap",
    "solve_system_optimum",
    "solve_user_equilibrium",
    "so_conditions",
    "ue_conditions",
    "condition_report",
    "feasibility_check",
    "price_of_anarchy",
    "poa_from",
]

log = logging.getLogger(__name__)

# Slack when testing a beta against the capacity interval computed in closed form.
_FEASIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class SolverSettings:
    tol_beta: float = 1e-8
    tol_abs: float = 1e-9
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not (self.tol_beta > 0 and self.tol_abs > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_SETTINGS = SolverSettings()


@dataclass(frozen=True)
class Scenario:
    params: NetworkParams
    space: SpaceAllocation
    demand: DemandProfile
    service: ServiceParams

    def with_alpha(self, alpha: float) -> Scenario:
        return dataclasses.replace(self, space=dataclasses.replace(self.space, alpha=alpha))

    @property
    def alpha(self) -> float:
        return self.space.alpha

    def delays(self, beta: float) -> tuple[float, float, float]:
        """``(t_V, t_B, t_b)`` at split ``beta``."""
        split = Split(beta)
        x_rs = self.demand.x_rs
        x_s, x_p = split.solo_flow(x_rs), split.pool_flow(x_rs)
        p, s, d, v = self.params, self.space, self.demand, self.service
        return (
            vehicle_delay(x_s, d, s, p),
            pool_delay(x_p, d, s, p, v),
            bus_user_delay(x_p, d, s, p, v),
        )


@dataclass(frozen=True)
class PhtBreakdown:
    """Passenger-hours travelled per user group."""

    pht_pv: float
    pht_rs: float
    pht_b: float
    total: float


class SplitKind(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY_ZERO = "boundary_zero"
    BOUNDARY_ONE = "boundary_one"
    # endpoints of the capacity-feasible interval when it is strictly inside [0, 1]
    CAPACITY_LOWER = "capacity_lower"
    CAPACITY_UPPER = "capacity_upper"


@dataclass(frozen=True)
class SplitSolution:
    """A solved split.

    ``slope`` is the derivative of the minimized objective with respect to
    ``beta`` divided by ``x_rs`` (hours): the PHT gradient for the system
    optimum, ``t_B + toll - t_V`` for the user equilibrium. ``residual`` is
    ``|slope|`` at interior solutions and 0 at endpoints.
    """

    beta: float
    kind: SplitKind
    delays: tuple[float, float, float]
    pht: PhtBreakdown
    residual: float
    slope: float
    restricted: bool = False
    feasible: bool = True


@dataclass(frozen=True)
class ConditionReport:
    """Closed-form sufficient conditions; ``None`` marks a half not evaluated."""

    so_excludes_one: bool | None = None
    so_forces_zero: bool | None = None
    ue_excludes_one: bool | None = None
    ue_forces_zero: bool | None = None


@dataclass(frozen=True)
class Feasibility:
    feasible_all_beta: bool
    beta_range: tuple[float, float] | None
    violations: tuple[str, ...] = ()

    def contains(self, beta: float) -> bool:
        if self.beta_range is None:
            return False
        lo, hi = self.beta_range
        return lo - _FEASIBILITY_SLACK <= beta <= hi + _FEASIBILITY_SLACK


def _as_beta(beta: float | Split) -> float:
    return beta.beta if isinstance(beta, Split) else Split(beta).beta


def pht(beta: float | Split, sc: Scenario) -> PhtBreakdown:
    b = _as_beta(beta)
    t_v, t_pool, t_bus = sc.delays(b)
    d = sc.demand
    pht_pv = d.x_pv * t_v
    pht_rs = (1.0 - b) * d.x_rs * t_v + b * d.x_rs * t_pool
    pht_b = d.x_b * t_bus
    return PhtBreakdown(pht_pv, pht_rs, pht_b, pht_pv + pht_rs + pht_b)


def _ratios(b: float, sc: Scenario) -> tuple[float, float]:
    p, s, d, v = sc.params, sc.space, sc.demand, sc.service
    vehicle = (d.x_pv + (1.0 - b) * d.x_rs) / (s.omega * s.alpha * p.C)
    bus = (b * d.x_rs / v.o_p + d.f_b) / (s.alpha_bar * p.C)
    return vehicle, bus


def pht_gradient(beta: float | Split, sc: Scenario) -> float:
    """Closed-form derivative of total PHT with respect to ``beta``.

    Four terms: congestion the solo side relieves, the solo delay given up,
    the pool delay taken on, and the congestion pooled vehicles add for pool
    and bus riders.
    """
    b = _as_beta(beta)
    p, s, d, v = sc.params, sc.space, sc.demand, sc.service
    t_v, t_pool, _ = sc.delays(b)
    ra, rb = _ratios(b, sc)
    tfab = p.t_f * p.a * p.b
    bus_cap = v.o_p * s.alpha_bar * p.C
    return (
        -tfab * d.x_rs * ra**p.b
        - d.x_rs * t_v
        + d.x_rs * t_pool
        + tfab * d.x_rs * v.k / bus_cap * rb ** (p.b - 1.0) * (d.x_b * v.delta_b + b * d.x_rs * v.delta_p)
    )


def delay_derivatives(beta: float | Split, sc: Scenario) -> tuple[float, float, float]:
    """``(dt_V/dbeta, dt_B/dbeta, dt_b/dbeta)``."""
    b = _as_beta(beta)
    p, s, d, v = sc.params, sc.space, sc.demand, sc.service
    ra, rb = _ratios(b, sc)
    tfab = p.t_f * p.a * p.b
    dt_v = -tfab * d.x_rs / (s.omega * s.alpha * p.C) * ra ** (p.b - 1.0)
    bus_common = tfab * d.x_rs / (v.o_p * s.alpha_bar * p.C) * rb ** (p.b - 1.0) * v.k
    return dt_v, bus_common * v.delta_p, bus_common * v.delta_b


def so_stationarity_gap(beta: float | Split, sc: Scenario) -> float:
    """Left minus right side of the interior optimality identity, in passenger-hours.

    ``(x_pv + (1-beta) x_rs) dt_V + beta x_rs dt_B + x_b dt_b = x_rs (t_V - t_B)``
    """
    b = _as_beta(beta)
    d = sc.demand
    dt_v, dt_pool, dt_bus = delay_derivatives(b, sc)
    t_v, t_pool, _ = sc.delays(b)
    lhs = (d.x_pv + (1.0 - b) * d.x_rs) * dt_v + b * d.x_rs * dt_pool + d.x_b * dt_bus
    return lhs - d.x_rs * (t_v - t_pool)


def feasibility_check(sc: Scenario) -> Feasibility:
    """Range of ``beta`` keeping both subnetworks at or under capacity.

    Vehicle network: ``x_pv + (1-beta) x_rs <= omega alpha C`` gives a lower
    bound on beta; bus network: ``beta x_rs / o_p + f_b <= (1-alpha) C`` an
    upper bound.
    """
    p, s, d, v = sc.params, sc.space, sc.demand, sc.service
    veh_cap = s.omega * s.alpha * p.C
    bus_cap = s.alpha_bar * p.C
    lo = max(0.0, 1.0 - (veh_cap - d.x_pv) / d.x_rs)
    hi = min(1.0, (bus_cap - d.f_b) * v.o_p / d.x_rs)

    violations: list[str] = []
    if d.x_pv > veh_cap:
        violations.append(
            f"vehicle network: x_pv + (1-beta)*x_rs <= omega*alpha*C fails for every beta "
            f"(x_pv = {d.x_pv!r} > {veh_cap!r})"
        )
    if d.f_b > bus_cap:
        violations.append(
            f"bus network: beta*x_rs/o_p + f_b <= (1-alpha)*C fails for every beta "
            f"(f_b = {d.f_b!r} > {bus_cap!r})"
        )
    if not violations and lo > hi:
        violations.append(
            f"no beta satisfies both capacity limits: vehicle network needs beta >= {lo!r}, "
            f"bus network needs beta <= {hi!r}"
        )
    if violations:
        return Feasibility(False, None, tuple(violations))
    return Feasibility(lo == 0.0 and hi == 1.0, (lo, hi))


def _bisect(f: Callable[[float], float], lo: float, hi: float, settings: SolverSettings) -> float:
    """Root of a function that is positive at ``lo`` and negative at ``hi``.

    Runs to float resolution (or ``max_iter``) rather than stopping at
    ``tol_beta``, so downstream identities hold to rounding.
    """
    for _ in range(settings.max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    if hi - lo > settings.tol_beta:
        raise NumericError(f"bisection did not reach tol_beta within {settings.max_iter} iterations")
    flo, fhi = abs(f(lo)), abs(f(hi))
    return lo if flo <= fhi else hi


def _search_interval(sc: Scenario, restrict: bool) -> tuple[float, float]:
    if not restrict:
        return 0.0, 1.0
    feas = feasibility_check(sc)
    if feas.beta_range is None:
        raise InfeasibleError("; ".join(feas.violations))
    return feas.beta_range


def _endpoint_kind(beta: float, lower: bool) -> SplitKind:
    if lower:
        return SplitKind.BOUNDARY_ZERO if beta == 0.0 else SplitKind.CAPACITY_LOWER
    return SplitKind.BOUNDARY_ONE if beta == 1.0 else SplitKind.CAPACITY_UPPER


def _solve_increasing_slope(
    slope: Callable[[float], float],
    sc: Scenario,
    restrict: bool,
    settings: SolverSettings,
) -> SplitSolution:
    lo, hi = _search_interval(sc, restrict)
    s_lo = slope(lo)
    if s_lo >= 0.0:
        beta, kind, s_at, residual = lo, _endpoint_kind(lo, True), s_lo, 0.0
    else:
        s_hi = slope(hi)
        if s_hi <= 0.0:
            beta, kind, s_at, residual = hi, _endpoint_kind(hi, False), s_hi, 0.0
        else:
            beta = _bisect(lambda x: -slope(x), lo, hi, settings)
            s_at = slope(beta)
            kind, residual = SplitKind.INTERIOR, abs(s_at)
            if residual > settings.tol_abs:
                log.warning("interior residual %.3g h exceeds tol_abs at beta=%r", residual, beta)
    return SplitSolution(
        beta=beta,
        kind=kind,
        delays=sc.delays(beta),
        pht=pht(beta, sc),
        residual=residual,
        slope=s_at,
        restricted=restrict,
        feasible=feasibility_check(sc).contains(beta),
    )


def solve_system_optimum(
    sc: Scenario, *, restrict: bool = False, settings: SolverSettings = DEFAULT_SETTINGS
) -> SplitSolution:
    """Split minimizing total PHT over ``[0, 1]``.

    With ``restrict=True`` the search is limited to the capacity-feasible
    interval from :func:`feasibility_check`.
    """
    if not sc.params.convex:
        raise ContractError(f"system optimum needs b > 1 for uniqueness, got b={sc.params.b}")
    x_rs = sc.demand.x_rs
    return _solve_increasing_slope(lambda x: pht_gradient(x, sc) / x_rs, sc, restrict, settings)


def solve_user_equilibrium(
    sc: Scenario,
    toll: float = 0.0,
    *,
    restrict: bool = False,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> SplitSolution:
    """Wardrop split between solo and pool with an additive pool toll (hours).

    Solo cost minus pool cost ``t_V - t_B - toll`` strictly decreases in beta.
    """
    if not math.isfinite(toll):
        raise ValueError(f"toll must be finite, got {toll}")

    def slope(b: float) -> float:
        t_v, t_pool, _ = sc.delays(b)
        return t_pool + toll - t_v

    return _solve_increasing_slope(slope, sc, restrict, settings)


def _so_threshold(sc: Scenario) -> float:
    b, o_p = sc.params.b, sc.service.o_p
    return ((b + 1.0) / (b / o_p + 1.0)) ** (1.0 / b)


def so_conditions(sc: Scenario) -> ConditionReport:
    """Sufficient conditions excluding an all-pool optimum or forcing ``beta = 0``."""
    if not sc.params.convex:
        raise ContractError(f"system-optimum conditions need b > 1, got b={sc.params.b}")
    s, d, v = sc.space, sc.demand, sc.service
    ratio = s.omega * s.alpha / s.alpha_bar
    c = _so_threshold(sc)
    return ConditionReport(
        so_excludes_one=ratio * (d.x_rs / v.o_p + d.f_b) > c * d.x_pv,
        so_forces_zero=ratio * d.f_b >= c * (d.x_pv + d.x_rs),
    )


def ue_conditions(sc: Scenario) -> ConditionReport:
    s, d, v = sc.space, sc.demand, sc.service
    return ConditionReport(
        ue_excludes_one=s.alpha_bar * d.x_pv < s.omega * s.alpha * (d.x_rs / v.o_p + d.f_b),
        ue_forces_zero=s.alpha_bar * (d.x_pv + d.x_rs) < s.omega * s.alpha * d.f_b,
    )


def condition_report(sc: Scenario) -> ConditionReport:
    so, ue = so_conditions(sc), ue_conditions(sc)
    return dataclasses.replace(so, ue_excludes_one=ue.ue_excludes_one, ue_forces_zero=ue.ue_forces_zero)


def poa_from(ue: SplitSolution, so: SplitSolution, settings: SolverSettings = DEFAULT_SETTINGS) -> float:
    if abs(ue.beta - so.beta) <= settings.tol_beta:
        return 1.0
    return ue.pht.total / so.pht.total


def price_of_anarchy(
    sc: Scenario, *, restrict: bool = False, settings: SolverSettings = DEFAULT_SETTINGS
) -> float:
    """Total PHT at user equilibrium over total PHT at system optimum."""
    ue = solve_user_equilibrium(sc, restrict=restrict, settings=settings)
    so = solve_system_optimum(sc, restrict=restrict, settings=settings)
    return poa_from(ue, so, settings)
