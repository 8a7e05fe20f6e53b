"""CLI surface: subcommands, flags, exit codes, artifacts."""

import json

import pytest

from kettlepool.cli import main


def test_run_writes_report_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main([
        "run", "--households", "3", "--seed", "4", "--policy", "compliant",
        "--sim-duration-s", "900", "--out", str(out),
    ])
    assert code == 0
    assert out.exists()
    assert (tmp_path / "report.trace.tsv").exists()
    body = json.loads(out.read_text())
    assert body["policy"] == "compliant"
    assert body["config"]["seed"] == 4
    printed = capsys.readouterr().out
    assert "peak_w=" in printed


def test_compare_prints_table(tmp_path, capsys):
    out = tmp_path / "cmp.json"
    code = main([
        "compare", "--households", "4", "--sim-duration-s", "900",
        "--policies", "immediate,compliant", "--out", str(out),
    ])
    assert code == 0
    table = capsys.readouterr().out
    assert "immediate" in table and "compliant" in table
    body = json.loads(out.read_text())
    assert body["energy_consistent"] is True
    assert len(body["runs"]) == 2


def test_config_error_exits_one(capsys):
    assert main(["run", "--households", "0"]) == 1
    assert "households" in capsys.readouterr().err


def test_bad_flag_value_exits_one(capsys):
    assert main(["run", "--households", "many"]) == 1


def test_unknown_policy_rejected(capsys):
    assert main(["compare", "--policies", "immediate,psychic"]) == 1


def test_tariff_file_flows_into_run(tmp_path):
    tariff = tmp_path / "tariff.json"
    tariff.write_text(json.dumps({"multipliers": [2.0] * 10 + [1.0] * 20}))
    out = tmp_path / "r.json"
    code = main([
        "run", "--households", "2", "--tariff-file", str(tariff),
        "--sim-duration-s", "900", "--out", str(out),
    ])
    assert code == 0
    assert json.loads(out.read_text())["config"]["tariff"] == [2.0] * 10 + [1.0] * 20


def test_malformed_tariff_file_is_config_error(tmp_path, capsys):
    tariff = tmp_path / "tariff.json"
    tariff.write_text('{"prices": [1, 2]}')
    assert main(["run", "--tariff-file", str(tariff)]) == 1
    assert "multipliers" in capsys.readouterr().err


def test_wrong_tariff_length_is_config_error(tmp_path, capsys):
    tariff = tmp_path / "tariff.json"
    tariff.write_text(json.dumps({"multipliers": [1.0] * 7}))
    assert main(["run", "--tariff-file", str(tariff)]) == 1


def test_diurnal_flags_accepted(tmp_path):
    code = main([
        "run", "--households", "3", "--demand", "diurnal",
        "--demand-peaks", "200,500", "--demand-jitter-s", "60",
        "--sim-duration-s", "1500",
    ])
    assert code == 0


def test_entrypoint_module_runs(capsys):
    with pytest.raises(SystemExit):
        import runpy

        runpy.run_module("kettlepool", run_name="__main__", alter_sys=True)
