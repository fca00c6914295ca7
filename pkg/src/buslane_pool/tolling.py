"""Additive pool toll that moves the user equilibrium onto the system optimum."""

from __future__ import annotations

from dataclasses import dataclass

from .equilibrium import (
    DEFAULT_SETTINGS,
    Scenario,
    SolverSettings,
    SplitKind,
    solve_system_optimum,
    solve_user_equilibrium,
)
from .model import Split

__all__ = ["TollResult", "marginal_toll", "compute_toll"]


@dataclass(frozen=True)
class TollResult:
    """Toll in hours of time-equivalent cost; negative values are discounts.

    ``active`` is False when the system optimum keeps pooled vehicles out of
    the bus lanes (``beta_so == 0``): the policy is switched off and
    ``tau_p`` is reported as zero. ``required`` is True when the untolled
    equilibrium differs from the optimum, i.e. the toll actually changes
    behaviour.
    """

    tau_p: float
    beta_so: float
    beta_ue: float
    beta_ue_tolled: float
    restored: bool
    active: bool
    required: bool

    @property
    def applied(self) -> float:
        return self.tau_p if self.required else 0.0

    def monetary(self, value_of_time: float) -> float:
        return self.tau_p * value_of_time


def marginal_toll(beta: float | Split, sc: Scenario) -> float:
    """Pool toll (hours) whose equilibrium condition reproduces optimality at ``beta``.

    Equals the PHT externality per ride-hailing passenger: the relief given
    to the vehicle network minus the extra congestion pooled vehicles impose
    on bus-network users.
    """
    b = beta.beta if isinstance(beta, Split) else Split(beta).beta
    p, s, d, v = sc.params, sc.space, sc.demand, sc.service
    vehicle_ratio = (d.x_pv + (1.0 - b) * d.x_rs) / (s.omega * s.alpha * p.C)
    bus_ratio = (b * d.x_rs / v.o_p + d.f_b) / (s.alpha_bar * p.C)
    tfab = p.t_f * p.a * p.b
    return -tfab * vehicle_ratio**p.b + tfab * v.k / (v.o_p * s.alpha_bar * p.C) * bus_ratio ** (
        p.b - 1.0
    ) * (b * d.x_rs * v.delta_p + d.x_b * v.delta_b)


def compute_toll(
    sc: Scenario, *, restrict: bool = False, settings: SolverSettings = DEFAULT_SETTINGS
) -> TollResult:
    so = solve_system_optimum(sc, restrict=restrict, settings=settings)
    ue = solve_user_equilibrium(sc, restrict=restrict, settings=settings)
    required = abs(ue.beta - so.beta) > settings.tol_beta
    if so.kind is SplitKind.BOUNDARY_ZERO:
        return TollResult(
            tau_p=0.0,
            beta_so=so.beta,
            beta_ue=ue.beta,
            beta_ue_tolled=ue.beta,
            restored=not required,
            active=False,
            required=required,
        )
    tau = marginal_toll(so.beta, sc)
    tolled = solve_user_equilibrium(sc, tau, restrict=restrict, settings=settings)
    return TollResult(
        tau_p=tau,
        beta_so=so.beta,
        beta_ue=ue.beta,
        beta_ue_tolled=tolled.beta,
        restored=abs(tolled.beta - so.beta) <= settings.tol_beta,
        active=True,
        required=required,
    )
