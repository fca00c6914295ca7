"""Aggregate delay functions for the vehicle and bus subnetworks.

All flows are hourly rates in the units of the capacity ``C``; delays are in
hours. The bus network carries pooled ride-hailing vehicles (``x_p / o_p``)
on top of the bus flow ``f_b``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Callable

from scipy.optimize import brentq

from .errors import DomainError, NumericError

__all__ = [
    "NetworkParams",
    "SpaceAllocation",
    "DemandProfile",
    "ServiceParams",
    "Split",
    "base_delay",
    "vehicle_delay",
    "pool_delay",
    "bus_user_delay",
    "accumulation",
    "mfd_flow",
]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


def _finite(**values: float) -> None:
    for name, v in values.items():
        if not isinstance(v, numbers.Real) or isinstance(v, bool) or not math.isfinite(v):
            raise DomainError(f"{name} must be a finite number, got {v!r}")


@dataclass(frozen=True)
class NetworkParams:
    """Constants of the base delay ``t_f * (1 + a * (x / C) ** b)``."""

    t_f: float
    a: float
    b: float
    C: float

    def __post_init__(self) -> None:
        _finite(t_f=self.t_f, a=self.a, b=self.b, C=self.C)
        _require(self.t_f > 0, f"t_f must be > 0, got {self.t_f}")
        _require(self.a > 0, f"a must be > 0, got {self.a}")
        _require(self.b > 0, f"b must be > 0, got {self.b}")
        _require(self.C > 0, f"C must be > 0, got {self.C}")

    @property
    def convex(self) -> bool:
        """True when ``b > 1``, the condition under which the system optimum is unique."""
        return self.b > 1


@dataclass(frozen=True)
class SpaceAllocation:
    """Share of road space given to the vehicle network and its idle-fleet capacity loss.

    ``omega`` is stored already evaluated at ``n_e``; use :meth:`from_idle_fleet`
    to derive it from a capacity-reduction function.
    """

    alpha: float
    n_e: float = 0.0
    omega: float = 1.0

    def __post_init__(self) -> None:
        _finite(alpha=self.alpha, n_e=self.n_e, omega=self.omega)
        _require(0 < self.alpha < 1, f"alpha must lie in (0, 1), got {self.alpha}")
        _require(self.n_e >= 0, f"n_e must be >= 0, got {self.n_e}")
        _require(0 < self.omega <= 1, f"omega must lie in (0, 1], got {self.omega}")
        _require(self.n_e > 0 or self.omega == 1, "omega must equal 1 when n_e = 0")

    @classmethod
    def from_idle_fleet(
        cls, alpha: float, n_e: float, omega_fn: Callable[[float], float]
    ) -> SpaceAllocation:
        return cls(alpha=alpha, n_e=n_e, omega=float(omega_fn(n_e)))

    @property
    def alpha_bar(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class DemandProfile:
    x_pv: float
    x_rs: float
    x_b: float
    f_b: float

    def __post_init__(self) -> None:
        _finite(x_pv=self.x_pv, x_rs=self.x_rs, x_b=self.x_b, f_b=self.f_b)
        for name in ("x_pv", "x_rs", "x_b", "f_b"):
            v = getattr(self, name)
            _require(v > 0, f"{name} must be > 0, got {v}")
        _require(self.f_b < self.x_b, f"f_b must be < x_b, got f_b={self.f_b}, x_b={self.x_b}")


@dataclass(frozen=True)
class ServiceParams:
    """Pool and bus mode constants.

    ``k`` is the bus-interference factor already evaluated at the (fixed) bus
    flow; :meth:`with_interference` evaluates a user-supplied ``k(f_b)`` once.
    """

    o_p: float
    delta_p: float
    delta_b: float
    gamma: float
    k: float

    def __post_init__(self) -> None:
        _finite(o_p=self.o_p, delta_p=self.delta_p, delta_b=self.delta_b, gamma=self.gamma, k=self.k)
        _require(self.o_p > 1, f"o_p must be > 1, got {self.o_p}")
        _require(self.delta_p > 1, f"delta_p must be > 1, got {self.delta_p}")
        _require(self.delta_b > 1, f"delta_b must be > 1, got {self.delta_b}")
        _require(self.gamma > 0, f"gamma must be > 0, got {self.gamma}")
        _require(self.k > 1, f"k must be > 1, got {self.k}")

    @classmethod
    def with_interference(
        cls,
        o_p: float,
        delta_p: float,
        delta_b: float,
        gamma: float,
        k_fn: Callable[[float], float],
        f_b: float,
    ) -> ServiceParams:
        return cls(o_p=o_p, delta_p=delta_p, delta_b=delta_b, gamma=gamma, k=float(k_fn(f_b)))


@dataclass(frozen=True)
class Split:
    """Fraction ``beta`` of ride-hailing demand that pools."""

    beta: float

    def __post_init__(self) -> None:
        _finite(beta=self.beta)
        _require(0 <= self.beta <= 1, f"beta must lie in [0, 1], got {self.beta}")

    def pool_flow(self, x_rs: float) -> float:
        return self.beta * x_rs

    def solo_flow(self, x_rs: float) -> float:
        return (1.0 - self.beta) * x_rs


def base_delay(x: float, p: NetworkParams) -> float:
    """Average travel time at flow ``x`` on a network with parameters ``p``."""
    if x < 0:
        raise DomainError(f"flow must be >= 0, got {x}")
    return p.t_f * (1.0 + p.a * (x / p.C) ** p.b)


def _check_rs_flow(name: str, x: float, d: DemandProfile) -> None:
    if not 0 <= x <= d.x_rs:
        raise DomainError(f"{name} must lie in [0, x_rs={d.x_rs}], got {x}")


def vehicle_delay(x_s: float, d: DemandProfile, s: SpaceAllocation, p: NetworkParams) -> float:
    """Travel time in the vehicle network carrying private cars and solo rides."""
    _check_rs_flow("x_s", x_s, d)
    ratio = (d.x_pv + x_s) / (s.omega * s.alpha * p.C)
    return p.t_f * (1.0 + p.a * ratio**p.b)


def _bus_network_factor(
    x_p: float, d: DemandProfile, s: SpaceAllocation, p: NetworkParams, v: ServiceParams
) -> float:
    ratio = (x_p / v.o_p + d.f_b) / (s.alpha_bar * p.C)
    return p.t_f * (1.0 + p.a * ratio**p.b) * v.k


def pool_delay(
    x_p: float, d: DemandProfile, s: SpaceAllocation, p: NetworkParams, v: ServiceParams
) -> float:
    """Travel time of pooled riders in the bus network."""
    _check_rs_flow("x_p", x_p, d)
    return _bus_network_factor(x_p, d, s, p, v) * v.delta_p


def bus_user_delay(
    x_p: float, d: DemandProfile, s: SpaceAllocation, p: NetworkParams, v: ServiceParams
) -> float:
    """Travel time of bus passengers, including the boarding penalty ``gamma``."""
    _check_rs_flow("x_p", x_p, d)
    return _bus_network_factor(x_p, d, s, p, v) * v.delta_b + v.gamma


def accumulation(x: float, p: NetworkParams) -> float:
    """Vehicles in the network at steady flow ``x`` (flow times travel time)."""
    return x * base_delay(x, p)


def mfd_flow(n: float, p: NetworkParams) -> float:
    """Invert :func:`accumulation` on the increasing branch.

    The bracket starts at ``[0, C]`` and doubles its upper end until it
    contains ``n``.
    """
    if n < 0:
        raise DomainError(f"accumulation must be >= 0, got {n}")
    if n == 0:
        return 0.0
    hi = p.C
    try:
        while accumulation(hi, p) < n:
            hi *= 2.0
            if not math.isfinite(hi):
                raise NumericError(f"could not bracket accumulation {n}")
    except OverflowError:
        raise NumericError(f"could not bracket accumulation {n}") from None
    return brentq(lambda x: accumulation(x, p) - n, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
