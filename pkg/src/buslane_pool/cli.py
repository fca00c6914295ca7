"""Command-line front end.

Subcommands ``solve``, ``sweep``, ``mfd`` and ``toll`` read a TOML scenario
file (see :mod:`buslane_pool.scenario_file`). Machine output is CSV with
shortest round-trip float formatting; human output is a fixed-width table.

Exit codes: 0 ok, 2 parse/validation error, 3 infeasible alpha, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .equilibrium import (
    Scenario,
    SolverSettings,
    feasibility_check,
    pht,
    poa_from,
    solve_system_optimum,
    solve_user_equilibrium,
)
from .errors import DomainError
from .model import NetworkParams, accumulation, mfd_flow
from .scenario_file import ScenarioFile, ScenarioFileError, load
from .sweep import SweepRow, SweepSpec, run_sweep
from .tolling import compute_toll

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

SWEEP_HEADER = ("alpha", "feasible_bm", "pht_bm", "pht_ue", "pht_so", "beta_ue", "beta_so", "poa", "toll")
MFD_HEADER = ("n", "x_total", "x_vehicle_subnet", "x_bus_subnet")
POLICY_OFF = "off"


class CliError(Exception):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


def fmt(value: Any) -> str:
    """Full-precision, byte-stable text for a CSV cell."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _load(args: argparse.Namespace) -> tuple[ScenarioFile, Scenario, SolverSettings]:
    try:
        sf = load(args.file)
    except ScenarioFileError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc.strerror or exc}", EXIT_IO) from None
    sc = sf.scenario
    try:
        if getattr(args, "alpha", None) is not None:
            sc = sc.with_alpha(args.alpha)
        settings = sf.solver
        if getattr(args, "tol_beta", None) is not None:
            settings = dataclasses.replace(settings, tol_beta=args.tol_beta)
    except (DomainError, ValueError) as exc:
        raise CliError(f"invalid option: {exc}", EXIT_INVALID) from None
    return sf, sc, settings


def _require_feasible(sc: Scenario) -> None:
    feas = feasibility_check(sc)
    if feas.beta_range is None:
        lines = [f"alpha = {sc.alpha!r} is infeasible:"] + [f"  {v}" for v in feas.violations]
        raise CliError("\n".join(lines), EXIT_INFEASIBLE)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[fmt(v) for v in row] for row in rows])
    return buf.getvalue()


# --------------------------------------------------------------------- solve


def solve_records(
    sc: Scenario, settings: SolverSettings, value_of_time: float | None = None
) -> list[tuple[str, Any]]:
    """Key/value records printed by ``solve``; assumes a feasible split exists."""
    feas = feasibility_check(sc)
    restrict = feas.beta_range is not None
    bm = pht(0.0, sc) if feas.contains(0.0) else None
    ue = solve_user_equilibrium(sc, restrict=restrict, settings=settings)
    so = solve_system_optimum(sc, restrict=restrict, settings=settings)
    toll = compute_toll(sc, restrict=restrict, settings=settings)
    lo, hi = feas.beta_range if feas.beta_range else (None, None)
    rec: list[tuple[str, Any]] = [
        ("alpha", sc.alpha),
        ("beta_min_feasible", lo),
        ("beta_max_feasible", hi),
        ("feasible_bm", bm is not None),
    ]
    for label, br in (("bm", bm),):
        for part in ("pht_pv", "pht_rs", "pht_b", "total"):
            rec.append((f"{label}.{part}", getattr(br, part) if br else None))
    for label, sol in (("ue", ue), ("so", so)):
        rec += [
            (f"{label}.beta", sol.beta),
            (f"{label}.kind", sol.kind.value),
            (f"{label}.t_V", sol.delays[0]),
            (f"{label}.t_B", sol.delays[1]),
            (f"{label}.t_b", sol.delays[2]),
            (f"{label}.pht_pv", sol.pht.pht_pv),
            (f"{label}.pht_rs", sol.pht.pht_rs),
            (f"{label}.pht_b", sol.pht.pht_b),
            (f"{label}.total", sol.pht.total),
        ]
    rec.append(("poa", poa_from(ue, so, settings) if ue.feasible and so.feasible else None))
    rec += _toll_records(toll, value_of_time)
    return rec


def _toll_records(toll: Any, value_of_time: float | None) -> list[tuple[str, Any]]:
    rec: list[tuple[str, Any]] = [
        ("toll.active", toll.active),
        ("toll.required", toll.required),
        ("toll.tau_p", toll.tau_p),
        ("toll.applied", toll.applied),
        ("toll.beta_so", toll.beta_so),
        ("toll.beta_ue", toll.beta_ue),
        ("toll.beta_ue_tolled", toll.beta_ue_tolled),
        ("toll.restored", toll.restored),
    ]
    if value_of_time is not None:
        rec.append(("toll.tau_p_money", toll.monetary(value_of_time)))
    return rec


def _human_solve(rec: list[tuple[str, Any]]) -> str:
    d = dict(rec)
    out = [f"alpha = {d['alpha']:.4f}   feasible beta range = "
           + (f"[{d['beta_min_feasible']:.4f}, {d['beta_max_feasible']:.4f}]")]
    out.append("")
    out.append(f"{'':10s}{'BM':>12s}{'UE':>12s}{'SO':>12s}")
    for part, name in (("pht_pv", "PHT pv"), ("pht_rs", "PHT rs"), ("pht_b", "PHT b"), ("total", "Total")):
        cells = []
        for label in ("bm", "ue", "so"):
            v = d[f"{label}.{part}"]
            cells.append(f"{v:12.1f}" if v is not None else f"{'-':>12s}")
        out.append(f"{name:10s}" + "".join(cells))
    bm_beta = f"{0.0:12.4f}" if d["feasible_bm"] else f"{'-':>12s}"
    out.append(f"{'beta':10s}{bm_beta}{d['ue.beta']:12.4f}{d['so.beta']:12.4f}")
    out.append("")
    out.append(f"UE kind: {d['ue.kind']}   SO kind: {d['so.kind']}")
    out.append(f"PoA = {d['poa']:.6f}" if d["poa"] is not None else "PoA = -")
    out.append(_human_toll_line(d))
    return "\n".join(out) + "\n"


def _human_toll_line(d: dict[str, Any]) -> str:
    if not d["toll.active"]:
        return "toll: policy off (system optimum keeps pooled vehicles out of bus lanes)"
    line = f"toll tau_p = {d['toll.tau_p']:+.6f} h"
    if "toll.tau_p_money" in d:
        line += f" ({d['toll.tau_p_money']:+.4f} money units)"
    line += "  required" if d["toll.required"] else "  not required"
    return line


def cmd_solve(args: argparse.Namespace) -> int:
    _, sc, settings = _load(args)
    _require_feasible(sc)
    rec = solve_records(sc, settings, args.value_of_time)
    sys.stdout.write(_human_solve(rec))
    if args.out:
        _write(args.out, _csv_text(("key", "value"), rec))
    return EXIT_OK


# --------------------------------------------------------------------- sweep


def sweep_cells(row: SweepRow, value_of_time: float | None = None) -> list[Any]:
    def usable(sol: Any) -> Any:
        return sol if sol is not None and sol.feasible else None

    ue, so = usable(row.ue), usable(row.so)
    toll: Any = None
    if row.toll is not None and row.feasible:
        if not row.toll.active:
            toll = POLICY_OFF
        else:
            toll = row.toll.applied * (value_of_time if value_of_time is not None else 1.0)
    return [
        row.alpha,
        row.feasible_bm,
        row.benchmark.total if row.benchmark else None,
        ue.pht.total if ue else None,
        so.pht.total if so else None,
        ue.beta if ue else None,
        so.beta if so else None,
        row.poa,
        toll,
    ]


def sweep_csv(rows: Sequence[SweepRow], value_of_time: float | None = None) -> str:
    return _csv_text(SWEEP_HEADER, [sweep_cells(r, value_of_time) for r in rows])


def cmd_sweep(args: argparse.Namespace) -> int:
    sf, sc, settings = _load(args)
    try:
        grid = sf.sweep_grid()
        spec = SweepSpec(sc, grid, settings=settings, workers=args.workers)
    except DomainError as exc:
        raise CliError(f"invalid sweep: {exc}", EXIT_INVALID) from None
    _write(args.out, sweep_csv(run_sweep(spec), args.value_of_time))
    return EXIT_OK


# ----------------------------------------------------------------------- mfd


def mfd_rows(params: NetworkParams, alpha: float, points: int = 500) -> list[tuple[float, float, float, float]]:
    """Flow against accumulation for the whole network and both subnetworks.

    The subnetworks use capacities ``alpha * C`` and ``(1 - alpha) * C``.
    The accumulation grid spans zero to the full network's value at capacity.
    """
    vehicle = dataclasses.replace(params, C=alpha * params.C)
    bus = dataclasses.replace(params, C=(1.0 - alpha) * params.C)
    n_max = accumulation(params.C, params)
    grid = np.linspace(0.0, n_max, points)
    return [(float(n), mfd_flow(n, params), mfd_flow(n, vehicle), mfd_flow(n, bus)) for n in grid]


def cmd_mfd(args: argparse.Namespace) -> int:
    _, sc, _ = _load(args)
    if args.points < 3:
        raise CliError("--points must be >= 3", EXIT_INVALID)
    _write(args.out, _csv_text(MFD_HEADER, mfd_rows(sc.params, sc.alpha, args.points)))
    return EXIT_OK


# ---------------------------------------------------------------------- toll


def cmd_toll(args: argparse.Namespace) -> int:
    _, sc, settings = _load(args)
    _require_feasible(sc)
    toll = compute_toll(sc, restrict=True, settings=settings)
    rec = [("alpha", sc.alpha)] + _toll_records(toll, args.value_of_time)
    d = dict(rec)
    lines = [
        f"alpha = {sc.alpha:.4f}",
        f"beta SO              = {toll.beta_so:.6f}",
        f"beta UE (no toll)    = {toll.beta_ue:.6f}",
        f"beta UE (with toll)  = {toll.beta_ue_tolled:.6f}",
        _human_toll_line(d),
        f"restored: {'yes' if toll.restored else 'no'}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        _write(args.out, _csv_text(("key", "value"), rec))
    return EXIT_OK


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buslane-pool",
        description="Solo/pool split, price of anarchy and pool tolls for a two-subnetwork city.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, alpha: bool = True) -> None:
        p.add_argument("file", help="TOML scenario file")
        if alpha:
            p.add_argument("--alpha", type=float, help="override the vehicle-network space share")
        p.add_argument("--tol-beta", type=float, dest="tol_beta", help="split tolerance")

    p = sub.add_parser("solve", help="benchmark, equilibrium and optimum at one alpha")
    common(p)
    p.add_argument("--value-of-time", type=float, dest="value_of_time", help="money per hour for the toll")
    p.add_argument("--out", help="also write key,value CSV records here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="CSV of results over the alpha grid")
    common(p, alpha=False)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--value-of-time", type=float, dest="value_of_time", help="report tolls in money units")
    p.add_argument("--workers", type=int, default=None, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mfd", help="CSV of flow-accumulation curves")
    common(p)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--points", type=int, default=500)
    p.set_defaults(func=cmd_mfd)

    p = sub.add_parser("toll", help="pool toll restoring the system optimum")
    common(p)
    p.add_argument("--value-of-time", type=float, dest="value_of_time", help="money per hour for the toll")
    p.add_argument("--out", help="also write key,value CSV records here")
    p.set_defaults(func=cmd_toll)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
