"""Pool ride-hailing in bus lanes: delay model, equilibria, price of anarchy and tolls."""

from .equilibrium import (
    ConditionReport,
    Feasibility,
    PhtBreakdown,
    Scenario,
    SolverSettings,
    SplitKind,
    SplitSolution,
    condition_report,
    feasibility_check,
    pht,
    pht_gradient,
    price_of_anarchy,
    so_conditions,
    solve_system_optimum,
    solve_user_equilibrium,
    ue_conditions,
)
from .errors import ContractError, DomainError, InfeasibleError, NumericError
from .model import (
    DemandProfile,
    NetworkParams,
    ServiceParams,
    SpaceAllocation,
    Split,
    accumulation,
    base_delay,
    bus_user_delay,
    mfd_flow,
    pool_delay,
    vehicle_delay,
)
from .scenario_file import ScenarioFile, ScenarioFileError, load_fixture
from .sweep import SweepRow, SweepSpec, find_optimal_alpha, run_sweep
from .tolling import TollResult, compute_toll, marginal_toll

__version__ = "0.1.0"
