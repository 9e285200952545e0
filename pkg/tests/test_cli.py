"""Tests for the command-line interface."""

import csv
import json

import pytest

from semrelay.cli import main as main_module
from semrelay.cli.io import read_allocation, read_run_config
from semrelay.cli.main import (
    EXIT_CONFIG,
    EXIT_DISAGREEMENT,
    EXIT_MAX_ITERS,
    EXIT_OK,
    EXIT_REFUSAL,
    create_parser,
    main,
)
from semrelay.core.netmodel import build_arrays, sum_rate
from semrelay.oracle.grid import feasible
from semrelay.scenarios.generator import instance_from_config


@pytest.fixture(autouse=True)
def no_env_seed(monkeypatch):
    monkeypatch.delenv("SEMRELAY_SEED", raising=False)


@pytest.mark.unit
class TestParser:
    def test_subcommands(self):
        parser = create_parser()
        args = parser.parse_args(["sweep", "--config", "run.json", "--modes", "joint,fixed-b"])
        assert args.command == "sweep"
        assert args.modes == "joint,fixed-b"
        args = parser.parse_args(["scenarios", "--config", "run.json", "--placement"])
        assert args.placement

    def test_no_command_prints_help(self, capsys):
        assert main([]) == EXIT_OK
        assert "oracle-check" in capsys.readouterr().out


@pytest.mark.unit
class TestConfigurationErrors:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["solve", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
        assert "not found" in capsys.readouterr().err

    def test_negative_budget_names_field(self, temp_config_file, capsys):
        path = temp_config_file({"budgets": {"p_r_w": -1.0}})
        assert main(["solve", "--config", path]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "budgets.p_r_w" in err
        assert "-1.0" in err

    def test_unknown_mode(self, temp_config_file, capsys):
        path = temp_config_file()
        assert main(["solve", "--config", path, "--modes", "joint,fixed-x"]) == EXIT_CONFIG
        assert "fixed-x" in capsys.readouterr().err

    def test_oversized_oracle_check_refused(self, temp_config_file, tmp_path, capsys):
        path = temp_config_file({"scenario": {"clusters": 3}})
        code = main(["oracle-check", "--config", path, "--out", str(tmp_path / "out")])
        assert code == EXIT_REFUSAL
        assert "ORACLE_REFUSAL" in capsys.readouterr().err


@pytest.mark.integration
class TestSolveCommand:
    def test_writes_report_and_allocation(self, temp_config_file, tmp_path, capsys):
        out = tmp_path / "tiny"
        path = temp_config_file()
        assert main(["solve", "--config", path, "--out", str(out)]) == EXIT_OK
        assert "joint" in capsys.readouterr().out

        with open(out / "report.json") as f:
            report = json.load(f)
        assert report["mode"] == "joint"
        assert report["status"] == "converged"
        assert report["wall_ms"] == 0.0
        assert set(report["baselines"]) == {"joint"}
        assert len(report["placement"]) == 1
        assert len(report["links"]["users"]) == 2

        with open(out / "allocation.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [r["link"] for r in rows] == ["s2r", "user", "user"]

        instance = instance_from_config(read_run_config(path))
        alloc = read_allocation(out / "allocation.csv", build_arrays(instance))
        assert feasible(instance, alloc, 1e-9)[0]

    def test_iteration_limit_exit_code(self, temp_config_file, tmp_path):
        path = temp_config_file({"solver": {"outer_max_iters": 1, "multi_start": False}})
        assert main(["solve", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_MAX_ITERS

    def test_solver_failure_exit_code(self, temp_config_file, tmp_path, monkeypatch, capsys):
        def broken(*args, **kwargs):
            raise FloatingPointError("overflow in water level")

        monkeypatch.setattr("semrelay.solver.ao.solve_bandwidth", broken)
        path = temp_config_file({"solver": {"multi_start": False}})
        assert main(["solve", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "Solver error" in err
        assert "bandwidth" in err


@pytest.mark.integration
class TestSeriesCommands:
    def test_sweep_is_byte_stable(self, temp_config_file, tmp_path):
        path = temp_config_file({"sweep": {"axis": "b_r_hz", "values": [5e6, 1e7]},
                                 "solver": {"multi_start": False}})
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", "--config", path, "--out", str(first)]) == EXIT_OK
        assert main(["sweep", "--config", path, "--out", str(second)]) == EXIT_OK
        data = (first / "series.csv").read_bytes()
        assert data == (second / "series.csv").read_bytes()
        lines = data.decode().splitlines()
        assert lines[0] == "axis,mode,sum_rate_bps,iters,max_residual,wall_ms"
        assert len(lines) == 3
        assert lines[1].startswith("5000000.0,joint,")

    def test_json_format(self, temp_config_file, tmp_path):
        path = temp_config_file({"sweep": {"axis": "p_r_w", "values": [5.0]},
                                 "solver": {"multi_start": False}})
        out = tmp_path / "json"
        assert main(["sweep", "--config", path, "--out", str(out), "--format", "json"]) == EXIT_OK
        with open(out / "series.json") as f:
            rows = json.load(f)
        assert rows[0]["axis"] == 5.0 and rows[0]["mode"] == "joint"
        assert rows[0]["status"] == "converged"


@pytest.mark.slow
@pytest.mark.integration
class TestOracleCheckCommand:
    def test_tiny_instance_agrees(self, temp_config_file, tmp_path):
        out = tmp_path / "oracle"
        path = temp_config_file()
        assert main(["oracle-check", "--config", path, "--out", str(out)]) == EXIT_OK
        with open(out / "oracle_check.json") as f:
            result = json.load(f)
        assert result["solver_feasible"] and result["oracle_feasible"]
        assert result["relative_gap"] <= 0.02

    def test_degraded_solver_reports_disagreement(self, temp_config_file, tmp_path, monkeypatch):
        real = main_module.alternating_optimize

        def degraded(*args, **kwargs):
            report = real(*args, **kwargs)
            report.allocation.p_user = report.allocation.p_user * 1e-3
            report.objective = sum_rate(instance_from_config(read_run_config(path)), report.allocation)
            return report

        path = temp_config_file()
        monkeypatch.setattr(main_module, "alternating_optimize", degraded)
        out = tmp_path / "oracle"
        assert main(["oracle-check", "--config", path, "--out", str(out)]) == EXIT_DISAGREEMENT
        with open(out / "oracle_check.json") as f:
            result = json.load(f)
        assert result["solver_feasible"]
        assert result["relative_gap"] > 0.02
