import csv
import io
import os
import shutil
import subprocess
import sys

import pytest

from buslane_pool.cli import SWEEP_HEADER, main, solve_records
from buslane_pool.equilibrium import condition_report
from buslane_pool.model import mfd_flow
from buslane_pool.scenario_file import fixture_path, load

FIXTURE = str(fixture_path("paper_vi"))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def records(path):
    rows = read_csv(path)
    assert rows[0] == ["key", "value"]
    return dict(rows[1:])


# --------------------------------------------------------------------- solve


def test_solve_matches_library(tmp_path, capsys):
    out = tmp_path / "solve.csv"
    assert main(["solve", FIXTURE, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PoA" in text and "Total" in text
    sf = load(FIXTURE)
    expected = solve_records(sf.scenario, sf.solver)
    got = records(out)
    assert list(got) == [k for k, _ in expected]
    for key, value in expected:
        if isinstance(value, float):
            assert float(got[key]) == value, key
    assert got["feasible_bm"] == "true"
    assert float(got["bm.total"]) == pytest.approx(38476.16653787313, rel=1e-12)


def test_solve_alpha_override(tmp_path, capsys):
    out = tmp_path / "solve.csv"
    assert main(["solve", FIXTURE, "--alpha", "0.647", "--out", str(out)]) == 0
    got = records(out)
    assert got["feasible_bm"] == "false" and got["bm.total"] == ""
    assert float(got["so.beta"]) == 1.0
    assert float(got["poa"]) > 1.0
    assert "-" in capsys.readouterr().out


def test_solve_forcing_alpha_reports_zero(tmp_path):
    sf = load(FIXTURE)
    assert condition_report(sf.scenario.with_alpha(0.915)).ue_forces_zero
    out = tmp_path / "solve.csv"
    assert main(["solve", FIXTURE, "--alpha", "0.915", "--out", str(out)]) == 0
    got = records(out)
    assert float(got["ue.beta"]) == 0.0
    assert got["toll.active"] == "false"


def test_solve_value_of_time(tmp_path):
    out = tmp_path / "solve.csv"
    assert main(["solve", FIXTURE, "--alpha", "0.7", "--value-of-time", "20", "--out", str(out)]) == 0
    got = records(out)
    assert float(got["toll.tau_p_money"]) == pytest.approx(20 * float(got["toll.tau_p"]), rel=1e-15)


def test_infeasible_alpha_exit_code(capsys):
    assert main(["solve", FIXTURE, "--alpha", "0.99"]) == 3
    err = capsys.readouterr().err
    assert "bus network" in err and "0.99" in err


def test_invalid_file_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(fixture_path("paper_vi").read_text().replace("b = 6.0", "b = -6.0"))
    assert main(["solve", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "[network] b" in err and "line" in err


def test_invalid_alpha_option(capsys):
    assert main(["solve", FIXTURE, "--alpha", "1.5"]) == 2


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "absent.toml")]) == 4
    assert "cannot read" in capsys.readouterr().err


# --------------------------------------------------------------------- sweep


@pytest.fixture(scope="module")
def sweep_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep") / "sweep.csv"
    assert main(["sweep", FIXTURE, "--out", str(out)]) == 0
    return out


def test_sweep_header_and_rows(sweep_file):
    rows = read_csv(sweep_file)
    assert tuple(rows[0]) == SWEEP_HEADER
    assert len(rows) == 1 + 91


def test_sweep_rerun_byte_identical(sweep_file, tmp_path):
    again = tmp_path / "again.csv"
    assert main(["sweep", FIXTURE, "--out", str(again), "--workers", "2"]) == 0
    assert again.read_bytes() == sweep_file.read_bytes()


def test_sweep_poa_column(sweep_file):
    for row in csv.DictReader(open(sweep_file, newline="")):
        if row["poa"]:
            assert float(row["poa"]) == pytest.approx(float(row["pht_ue"]) / float(row["pht_so"]), rel=1e-12)


def test_sweep_toll_column(sweep_file):
    rows = {float(r["alpha"]): r for r in csv.DictReader(open(sweep_file, newline=""))}
    assert float(rows[0.58]["toll"]) == 0.0
    assert rows[0.915]["toll"] == "off"
    assert float(rows[0.7]["toll"]) < 0
    assert rows[0.95]["toll"] == "" and rows[0.95]["pht_ue"] == ""


def test_sweep_to_stdout(tmp_path, capsys):
    small = tmp_path / "small.toml"
    text = fixture_path("paper_vi").read_text()
    small.write_text(text.replace("alpha_min = 0.5", "alpha_min = 0.9"))
    assert main(["sweep", str(small)]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert [r[0] for r in rows[1:]] == ["0.9", "0.905", "0.91", "0.915", "0.92", "0.925", "0.93", "0.935", "0.94", "0.945", "0.95"]


def test_sweep_unwritable_path(tmp_path, capsys):
    target = tmp_path / "missing_dir" / "out.csv"
    assert main(["sweep", FIXTURE, "--out", str(target)]) == 4
    assert "cannot write" in capsys.readouterr().err


# ----------------------------------------------------------------------- mfd


@pytest.fixture(scope="module")
def mfd_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("mfd") / "mfd.csv"
    assert main(["mfd", FIXTURE, "--alpha", "0.8", "--out", str(out), "--points", "20"]) == 0
    rows = read_csv(out)
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


def test_mfd_starts_at_origin(mfd_file):
    header, rows = mfd_file
    assert header == ["n", "x_total", "x_vehicle_subnet", "x_bus_subnet"]
    assert rows[0] == [0.0, 0.0, 0.0, 0.0]
    assert len(rows) == 20


def test_mfd_round_trip(mfd_file):
    sf = load(FIXTURE)
    p = sf.scenario.params
    _, rows = mfd_file
    for n, x, _, _ in rows:
        assert x * p.t_f * (1 + p.a * (x / p.C) ** p.b) == pytest.approx(n, rel=1e-12, abs=1e-9)
    assert rows[-1][1] == pytest.approx(p.C, rel=1e-12)


def test_mfd_subnet_scaling(mfd_file):
    p = load(FIXTURE).scenario.params
    _, rows = mfd_file
    for n, _, x_veh, x_bus in rows[1:]:
        assert x_veh == pytest.approx(0.8 * mfd_flow(n / 0.8, p), rel=1e-9)
        assert x_bus == pytest.approx(0.2 * mfd_flow(n / 0.2, p), rel=1e-9)


def test_mfd_rejects_tiny_grid(capsys):
    assert main(["mfd", FIXTURE, "--points", "2"]) == 2


# ---------------------------------------------------------------------- toll


def test_toll_command(tmp_path, capsys):
    out = tmp_path / "toll.csv"
    assert main(["toll", FIXTURE, "--alpha", "0.7", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "restored: yes" in text
    got = records(out)
    assert float(got["toll.tau_p"]) < 0
    assert abs(float(got["toll.beta_ue_tolled"]) - float(got["toll.beta_so"])) <= 1e-8


def test_toll_command_policy_off(capsys):
    assert main(["toll", FIXTURE, "--alpha", "0.915"]) == 0
    assert "policy off" in capsys.readouterr().out


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2


@pytest.mark.skipif(shutil.which("buslane-pool") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(
        ["buslane-pool", "toll", FIXTURE, "--alpha", "0.7"],
        capture_output=True,
        text=True,
        env={**os.environ, "PYTHONWARNINGS": "ignore"},
    )
    assert proc.returncode == 0 and "tau_p" in proc.stdout


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "buslane_pool.cli", "solve", FIXTURE, "--alpha", "0.99"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 3
