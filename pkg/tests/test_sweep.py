import math

import pytest

from buslane_pool.equilibrium import pht, solve_system_optimum, solve_user_equilibrium
from buslane_pool.errors import DomainError
from buslane_pool.sweep import (
    OUTPUTS,
    SweepSpec,
    alpha_range,
    evaluate_alpha,
    find_optimal_alpha,
    run_sweep,
)
from buslane_pool.tolling import compute_toll

TOL_BETA = 1e-8


@pytest.fixture(scope="module")
def fixture_rows(paper_file):
    spec = SweepSpec(paper_file.scenario, paper_file.sweep_grid())
    return spec, run_sweep(spec)


def test_alpha_range_inclusive_and_clean():
    grid = alpha_range(0.5, 0.95, 0.005)
    assert len(grid) == 91
    assert grid[0] == 0.5 and grid[-1] == 0.95
    assert grid[74] == 0.87


@pytest.mark.parametrize("grid", [(), (0.5, 0.5), (0.6, 0.5), (0.0, 0.5), (0.5, 1.0)])
def test_bad_grids_rejected(paper, grid):
    with pytest.raises(DomainError):
        SweepSpec(paper, grid)


def test_bad_range_arguments():
    with pytest.raises(DomainError):
        alpha_range(0.5, 0.9, 0.0)
    with pytest.raises(DomainError):
        alpha_range(0.9, 0.5, 0.01)


def test_unknown_output_rejected(paper):
    with pytest.raises(DomainError):
        SweepSpec(paper, (0.5,), frozenset({"pht_xx"}))


def test_single_point_sweep_forcing_zero(paper):
    (row,) = run_sweep(SweepSpec(paper, (0.915,)))
    assert row.ue.beta == row.so.beta == 0.0
    assert row.poa == 1.0
    assert not row.toll.active


def test_row_matches_direct_calls(paper):
    spec = SweepSpec(paper, (0.869,))
    row = evaluate_alpha(spec, 0.869)
    sc = paper.with_alpha(0.869)
    assert row.benchmark == pht(0.0, sc)
    assert row.ue == solve_user_equilibrium(sc, restrict=True)
    assert row.so == solve_system_optimum(sc, restrict=True)
    assert row.toll == compute_toll(sc, restrict=True)
    assert row.poa == row.ue.pht.total / row.so.pht.total


def test_outputs_subset_skips_work(paper):
    row = evaluate_alpha(SweepSpec(paper, (0.8,), frozenset({"pht_bm"})), 0.8)
    assert row.ue is None and row.so is None and row.toll is None and row.poa is None
    assert row.benchmark is not None


def test_fixture_benchmark_window(fixture_rows):
    _, rows = fixture_rows
    bm = [r.alpha for r in rows if r.feasible_bm]
    assert bm[0] == 0.795 and bm[-1] == 0.915
    assert all(r.feasible_bm for r in rows if 0.795 <= r.alpha <= 0.915)


def test_fixture_infeasible_rows_have_no_poa(fixture_rows):
    _, rows = fixture_rows
    for r in rows:
        if not r.feasible:
            assert r.poa is None
            assert not r.ue.feasible and not r.so.feasible


def test_fixture_split_structure(fixture_rows):
    _, rows = fixture_rows
    feasible = [r for r in rows if r.feasible]
    ue = [r.ue.beta for r in feasible]
    so = [r.so.beta for r in feasible]
    assert all(b2 <= b1 + TOL_BETA for b1, b2 in zip(ue, ue[1:]))
    assert all(b2 <= b1 + TOL_BETA for b1, b2 in zip(so, so[1:]))
    assert all(u <= s + TOL_BETA for u, s in zip(ue, so))
    assert ue[0] == so[0] == 1.0 and ue[-1] == so[-1] == 0.0
    assert max(r.poa for r in feasible) > 1.0
    assert all(r.poa >= 1.0 - 1e-9 for r in feasible)


def test_parallel_matches_sequential(paper):
    grid = alpha_range(0.6, 0.9, 0.05)
    seq = run_sweep(SweepSpec(paper, grid))
    par = run_sweep(SweepSpec(paper, grid, workers=2))
    assert seq == par


def test_optimal_alpha_benchmark(fixture_rows):
    spec, rows = fixture_rows
    best = find_optimal_alpha(spec, "bm_total", rows=rows)
    assert best.found and best.status == "ok"
    assert best.alpha == pytest.approx(0.869, abs=0.005)


def test_optimal_alpha_system_optimum(fixture_rows):
    spec, rows = fixture_rows
    best = find_optimal_alpha(spec, "so_total", rows=rows)
    assert best.alpha == pytest.approx(0.647, abs=0.005)


def test_optimal_alpha_without_precomputed_rows(paper):
    spec = SweepSpec(paper, alpha_range(0.85, 0.89, 0.005))
    assert find_optimal_alpha(spec).alpha == 0.87


def test_refinement_does_not_worsen(paper_file):
    spec = SweepSpec(paper_file.scenario, alpha_range(0.8, 0.9, 0.01))
    coarse = find_optimal_alpha(spec)
    fine = find_optimal_alpha(spec, refine=True)
    assert fine.total <= coarse.total
    assert abs(fine.alpha - coarse.alpha) <= 0.01
    assert math.isfinite(fine.total)


def test_refinement_next_to_infeasible_cells(paper):
    # neighbours of the lowest feasible benchmark cell are infeasible
    spec = SweepSpec(paper, (0.79, 0.795, 0.8))
    best = find_optimal_alpha(spec, refine=True)
    assert best.found and math.isfinite(best.total)
    assert 0.79 <= best.alpha <= 0.8


def test_single_point_optimum(paper):
    best = find_optimal_alpha(SweepSpec(paper, (0.869,)), refine=True)
    assert best.alpha == 0.869


def test_no_feasible_configuration(paper):
    best = find_optimal_alpha(SweepSpec(paper, (0.6, 0.65)))
    assert not best.found and best.total is None
    assert best.status == "no feasible configuration"


def test_unknown_objective(paper):
    with pytest.raises(DomainError):
        find_optimal_alpha(SweepSpec(paper, (0.8,)), "ue_total")


def test_outputs_constant():
    assert "toll" in OUTPUTS and "poa" in OUTPUTS
