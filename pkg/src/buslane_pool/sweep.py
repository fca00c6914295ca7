"""Evaluate a scenario across a grid of space splits ``alpha``."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Literal, Sequence

from scipy.optimize import minimize_scalar

from .equilibrium import (
    DEFAULT_SETTINGS,
    Feasibility,
    PhtBreakdown,
    Scenario,
    SolverSettings,
    SplitSolution,
    feasibility_check,
    pht,
    poa_from,
    solve_system_optimum,
    solve_user_equilibrium,
)
from .errors import DomainError
from .tolling import TollResult, compute_toll

__all__ = [
    "OUTPUTS",
    "SweepSpec",
    "SweepRow",
    "OptimalAlpha",
    "alpha_range",
    "evaluate_alpha",
    "run_sweep",
    "find_optimal_alpha",
]

OUTPUTS = frozenset({"pht_bm", "pht_ue", "pht_so", "beta_ue", "beta_so", "poa", "toll"})


def alpha_range(alpha_min: float = 0.5, alpha_max: float = 0.95, step: float = 0.005) -> tuple[float, ...]:
    """Inclusive grid from ``alpha_min`` to ``alpha_max``, rounded to kill drift."""
    if step <= 0 or alpha_max < alpha_min:
        raise DomainError(f"bad alpha grid: min={alpha_min}, max={alpha_max}, step={step}")
    n = math.floor((alpha_max - alpha_min) / step + 1e-9) + 1
    return tuple(round(alpha_min + i * step, 12) for i in range(n))


@dataclass(frozen=True)
class SweepSpec:
    """Base scenario (its own ``alpha`` is ignored) and the grid to evaluate."""

    base: Scenario
    alpha_grid: tuple[float, ...]
    outputs: frozenset[str] = OUTPUTS
    settings: SolverSettings = DEFAULT_SETTINGS
    workers: int | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        grid = tuple(float(a) for a in self.alpha_grid)
        object.__setattr__(self, "alpha_grid", grid)
        if not grid:
            raise DomainError("alpha grid is empty")
        if any(not 0 < a < 1 for a in grid):
            raise DomainError("alpha grid values must lie in (0, 1)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("alpha grid must be strictly increasing")
        unknown = set(self.outputs) - OUTPUTS
        if unknown:
            raise DomainError(f"unknown sweep outputs: {sorted(unknown)}")


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    feasibility: Feasibility
    benchmark: PhtBreakdown | None
    ue: SplitSolution | None
    so: SplitSolution | None
    poa: float | None
    toll: TollResult | None

    @property
    def feasible(self) -> bool:
        """Some split keeps both subnetworks within capacity."""
        return self.feasibility.beta_range is not None

    @property
    def feasible_bm(self) -> bool:
        return self.benchmark is not None


def evaluate_alpha(spec: SweepSpec, alpha: float) -> SweepRow:
    """One sweep row.

    When a feasible split range exists the solvers are restricted to it;
    otherwise they run unrestricted and their solutions are marked
    infeasible.
    """
    sc = spec.base.with_alpha(alpha)
    feas = feasibility_check(sc)
    restrict = feas.beta_range is not None
    want = spec.outputs
    settings = spec.settings

    benchmark = pht(0.0, sc) if feas.contains(0.0) else None
    need_ue = bool(want & {"pht_ue", "beta_ue", "poa"})
    need_so = bool(want & {"pht_so", "beta_so", "poa"})
    ue = solve_user_equilibrium(sc, restrict=restrict, settings=settings) if need_ue else None
    so = solve_system_optimum(sc, restrict=restrict, settings=settings) if need_so else None
    poa = None
    if "poa" in want and ue is not None and so is not None and ue.feasible and so.feasible:
        poa = poa_from(ue, so, settings)
    toll = compute_toll(sc, restrict=restrict, settings=settings) if "toll" in want else None
    return SweepRow(alpha, feas, benchmark, ue, so, poa, toll)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Rows in grid order; ``spec.workers > 1`` evaluates them in worker processes."""
    if spec.workers and spec.workers > 1 and len(spec.alpha_grid) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(partial(evaluate_alpha, spec), spec.alpha_grid))
    return [evaluate_alpha(spec, a) for a in spec.alpha_grid]


@dataclass(frozen=True)
class OptimalAlpha:
    """Best grid ``alpha`` for an objective; ``alpha is None`` when no row qualifies."""

    alpha: float | None
    total: float | None
    objective: str
    status: str

    @property
    def found(self) -> bool:
        return self.alpha is not None


Objective = Literal["bm_total", "so_total"]


def _objective_value(row: SweepRow, objective: Objective) -> float | None:
    if objective == "bm_total":
        return row.benchmark.total if row.benchmark is not None else None
    if row.so is None or not row.so.feasible:
        return None
    return row.so.pht.total


def _best(rows: Iterable[SweepRow], objective: Objective) -> tuple[int, float] | None:
    best: tuple[int, float] | None = None
    for i, row in enumerate(rows):
        value = _objective_value(row, objective)
        # strict comparison on an increasing grid breaks ties toward smaller alpha
        if value is not None and (best is None or value < best[1]):
            best = (i, value)
    return best


def find_optimal_alpha(
    spec: SweepSpec,
    objective: Objective = "bm_total",
    *,
    refine: bool = False,
    rows: Sequence[SweepRow] | None = None,
) -> OptimalAlpha:
    """Grid ``alpha`` minimizing total PHT of the benchmark or the system optimum.

    Only rows where that configuration is capacity-feasible compete. With
    ``refine=True`` a bounded scalar search runs over the grid cells either
    side of the best point.
    """
    if objective not in ("bm_total", "so_total"):
        raise DomainError(f"unknown objective {objective!r}")
    needed = frozenset({"pht_bm"}) if objective == "bm_total" else frozenset({"pht_so"})
    if rows is None:
        rows = run_sweep(SweepSpec(spec.base, spec.alpha_grid, needed, spec.settings, spec.workers))
    best = _best(rows, objective)
    if best is None:
        return OptimalAlpha(None, None, objective, "no feasible configuration")
    i, value = best
    grid = spec.alpha_grid
    alpha = grid[i]
    if refine and len(grid) > 1:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        probe = SweepSpec(spec.base, (alpha,), needed, spec.settings)

        def f(a: float) -> float:
            v = _objective_value(evaluate_alpha(probe, a), objective)
            return math.inf if v is None else v

        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        if math.isfinite(res.fun) and res.fun < value:
            alpha, value = float(res.x), float(res.fun)
    return OptimalAlpha(alpha, value, objective, "ok")
