"""Randomized scenarios around the reference parameter set, for property checks."""

from __future__ import annotations

import numpy as np

from .equilibrium import Scenario, feasibility_check
from .model import DemandProfile, NetworkParams, ServiceParams, SpaceAllocation

__all__ = ["REFERENCE", "random_scenario", "random_scenarios"]

REFERENCE = {
    "t_f": 0.1,
    "a": 0.8,
    "C": 150000.0,
    "x_pv": 80000.0,
    "x_rs": 35000.0,
    "x_b": 100000.0,
    "f_b": 12000.0,
    "gamma": 0.05,
    # excess over 1 for factors constrained to exceed 1, shortfall below 1 for omega
    "o_p-1": 0.6,
    "delta_p-1": 0.2,
    "delta_b-1": 0.4,
    "k-1": 0.15,
    "1-omega": 0.03,
}


def _decade(rng: np.random.Generator, ref: float) -> float:
    return float(ref * 10.0 ** rng.uniform(-1.0, 1.0))


def random_scenario(rng: np.random.Generator, max_tries: int = 10_000) -> Scenario:
    """Draw until a scenario has a non-empty capacity-feasible split range.

    Scale-like parameters are log-uniform within one decade of the reference;
    ``b`` is log-uniform on [1.5, 12] and ``alpha`` uniform on [0.05, 0.95].
    """
    r = REFERENCE
    for _ in range(max_tries):
        f_b, x_b = _decade(rng, r["f_b"]), _decade(rng, r["x_b"])
        if f_b >= x_b:
            continue
        sc = Scenario(
            params=NetworkParams(
                t_f=_decade(rng, r["t_f"]),
                a=_decade(rng, r["a"]),
                b=float(np.exp(rng.uniform(np.log(1.5), np.log(12.0)))),
                C=_decade(rng, r["C"]),
            ),
            space=SpaceAllocation(
                alpha=float(rng.uniform(0.05, 0.95)),
                n_e=1.0,
                omega=1.0 - min(_decade(rng, r["1-omega"]), 0.5),
            ),
            demand=DemandProfile(
                x_pv=_decade(rng, r["x_pv"]), x_rs=_decade(rng, r["x_rs"]), x_b=x_b, f_b=f_b
            ),
            service=ServiceParams(
                o_p=1.0 + _decade(rng, r["o_p-1"]),
                delta_p=1.0 + _decade(rng, r["delta_p-1"]),
                delta_b=1.0 + _decade(rng, r["delta_b-1"]),
                gamma=_decade(rng, r["gamma"]),
                k=1.0 + _decade(rng, r["k-1"]),
            ),
        )
        if feasibility_check(sc).beta_range is not None:
            return sc
    raise RuntimeError(f"no feasible scenario in {max_tries} draws")


def random_scenarios(n: int, seed: int = 0) -> list[Scenario]:
    rng = np.random.default_rng(seed)
    return [random_scenario(rng) for _ in range(n)]
