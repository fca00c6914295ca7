"""TOML scenario files: load, validate, dump.

Layout::

    [network]  t_f, a, b, C
    [space]    alpha, n_e, omega
    [demand]   x_pv, x_rs, x_b, f_b
    [service]  o_p, delta_p, delta_b, gamma, k
    [sweep]    alpha_min, alpha_max, alpha_step      (optional)
    [solver]   tol_beta, tol_abs, max_iter           (optional)
    [meta]     free-form string entries              (optional)

Validation errors name the section, key and source line.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .equilibrium import DEFAULT_SETTINGS, Scenario, SolverSettings
from .errors import DomainError
from .model import DemandProfile, NetworkParams, ServiceParams, SpaceAllocation
from .sweep import alpha_range

__all__ = [
    "ScenarioFileError",
    "SweepGrid",
    "ScenarioFile",
    "loads",
    "load",
    "dumps",
    "dump",
    "fixture_path",
    "load_fixture",
    "FIXTURES",
]

FIXTURES = ("paper_vi", "paper_vi_alt")

_REQUIRED = {
    "network": ("t_f", "a", "b", "C"),
    "space": ("alpha", "n_e", "omega"),
    "demand": ("x_pv", "x_rs", "x_b", "f_b"),
    "service": ("o_p", "delta_p", "delta_b", "gamma", "k"),
}
_OPTIONAL = {
    "sweep": ("alpha_min", "alpha_max", "alpha_step"),
    "solver": ("tol_beta", "tol_abs", "max_iter"),
}
_SECTION_TYPES = {
    "network": NetworkParams,
    "space": SpaceAllocation,
    "demand": DemandProfile,
    "service": ServiceParams,
}


class ScenarioFileError(ValueError):
    """Parse or validation failure, carrying one message per problem."""

    def __init__(self, problems: list[str], source: str = "<string>") -> None:
        self.problems = problems
        self.source = source
        super().__init__("\n".join(f"{source}: {p}" for p in problems))


@dataclass(frozen=True)
class SweepGrid:
    alpha_min: float = 0.5
    alpha_max: float = 0.95
    alpha_step: float = 0.005

    def grid(self) -> tuple[float, ...]:
        return alpha_range(self.alpha_min, self.alpha_max, self.alpha_step)


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    sweep: SweepGrid | None = None
    solver: SolverSettings = DEFAULT_SETTINGS
    meta: Mapping[str, str] = field(default_factory=dict)

    def sweep_grid(self) -> tuple[float, ...]:
        return (self.sweep or SweepGrid()).grid()


_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_]+)\s*\]")
_KEY = re.compile(r"^\s*([A-Za-z0-9_]+)\s*=")


def _key_lines(text: str) -> dict[tuple[str, str | None], int]:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    lines: dict[tuple[str, str | None], int] = {}
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if m := _HEADER.match(line):
            section = m.group(1)
            lines.setdefault((section, None), lineno)
        elif m := _KEY.match(line):
            lines.setdefault((section, m.group(1)), lineno)
    return lines


def loads(
    text: str,
    source: str = "<string>",
    *,
    omega_fn: Callable[[float], float] | None = None,
    k_fn: Callable[[float], float] | None = None,
) -> ScenarioFile:
    """Parse and validate scenario text.

    ``omega_fn(n_e)`` and ``k_fn(f_b)``, when given, are evaluated once and
    replace the ``omega`` / ``k`` entries, which then become optional.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioFileError([f"parse error: {exc}"], source) from None

    where = _key_lines(text)
    problems: list[str] = []

    def at(section: str, key: str | None = None) -> str:
        line = where.get((section, key)) or where.get((section, None))
        label = f"[{section}]" + (f" {key}" if key else "")
        return f"line {line}: {label}" if line else label

    allowed = set(_REQUIRED) | set(_OPTIONAL) | {"meta"}
    for name, value in doc.items():
        if name not in allowed:
            problems.append(f"{at(name)}: unknown section")
        elif not isinstance(value, dict):
            problems.append(f"{at(name)}: expected a table")

    computed = {("space", "omega"): omega_fn is not None, ("service", "k"): k_fn is not None}
    values: dict[str, dict[str, Any]] = {}
    for section, keys in {**_REQUIRED, **_OPTIONAL}.items():
        table = doc.get(section)
        if table is None:
            if section in _REQUIRED:
                problems.append(f"[{section}]: missing section")
            continue
        if not isinstance(table, dict):
            continue
        for key in table:
            if key not in keys:
                problems.append(f"{at(section, key)}: unknown key")
        row: dict[str, Any] = {}
        for key in keys:
            if key not in table:
                if section in _REQUIRED and not computed.get((section, key)):
                    problems.append(f"{at(section)}: missing key {key!r}")
                continue
            v = table[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                problems.append(f"{at(section, key)}: expected a number, got {v!r}")
                continue
            if key == "max_iter":
                if not isinstance(v, int):
                    problems.append(f"{at(section, key)}: expected an integer, got {v!r}")
                    continue
                row[key] = v
            else:
                row[key] = float(v)
        values[section] = row

    meta = doc.get("meta", {})
    if isinstance(meta, dict):
        for key, v in meta.items():
            if not isinstance(v, str):
                problems.append(f"{at('meta', key)}: meta entries must be strings")
    if problems:
        raise ScenarioFileError(problems, source)

    if omega_fn is not None:
        values["space"]["omega"] = float(omega_fn(values["space"]["n_e"]))
    if k_fn is not None:
        values["service"]["k"] = float(k_fn(values["demand"]["f_b"]))

    built: dict[str, Any] = {}
    for section, cls in _SECTION_TYPES.items():
        try:
            built[section] = cls(**values[section])
        except DomainError as exc:
            key = next((k for k in _REQUIRED[section] if str(exc).startswith(k + " ")), None)
            problems.append(f"{at(section, key)}: {exc}")
    sweep = solver = None
    try:
        if "sweep" in values:
            sweep = SweepGrid(**values["sweep"])
            sweep.grid()
            if not (0 < sweep.alpha_min and sweep.alpha_max < 1):
                raise DomainError("sweep bounds must lie in (0, 1)")
    except DomainError as exc:
        problems.append(f"{at('sweep')}: {exc}")
    try:
        if "solver" in values:
            solver = SolverSettings(**values["solver"])
    except ValueError as exc:
        problems.append(f"{at('solver')}: {exc}")
    if problems:
        raise ScenarioFileError(problems, source)

    scenario = Scenario(built["network"], built["space"], built["demand"], built["service"])
    return ScenarioFile(scenario, sweep, solver or DEFAULT_SETTINGS, dict(meta))


def load(path: str | Path, **kwargs: Any) -> ScenarioFile:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), str(path), **kwargs)


def _document(sf: ScenarioFile) -> dict[str, Any]:
    sc = sf.scenario
    doc: dict[str, Any] = {}
    if sf.meta:
        doc["meta"] = dict(sf.meta)
    for section, keys in _REQUIRED.items():
        obj = getattr(sc, "params" if section == "network" else section)
        doc[section] = {k: getattr(obj, k) for k in keys}
    if sf.sweep is not None:
        doc["sweep"] = {k: getattr(sf.sweep, k) for k in _OPTIONAL["sweep"]}
    if sf.solver != DEFAULT_SETTINGS:
        doc["solver"] = {k: getattr(sf.solver, k) for k in _OPTIONAL["solver"]}
    return doc


def dumps(sf: ScenarioFile) -> str:
    return tomli_w.dumps(_document(sf))


def dump(sf: ScenarioFile, path: str | Path) -> None:
    Path(path).write_text(dumps(sf), encoding="utf-8")


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return Path(str(resources.files(__package__).joinpath("fixtures", f"{name}.toml")))


def load_fixture(name: str) -> ScenarioFile:
    return load(fixture_path(name))
