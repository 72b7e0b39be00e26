"""
Integration tests for the squidsim orchestrator and command-line entry point.

Sweeps run on an explicit four-level model from the config, so no level
diagram has to be solved; the ledger is an in-memory database. One test
runs the shipped 80 fF config end to end through the eigensolver.
"""

import json
import sys
from pathlib import Path
from unittest.mock import MagicMock, patch

import pytest

from main import EXIT_FAILED, EXIT_OK, EXIT_PARSE, EXIT_SIMULATION, EXIT_VALIDATION, main
from squidsim.config import build_config, config_hash
from squidsim.errors import LevelSolveError
from squidsim.hooks.base import BaseHook
from squidsim.orchestrator import Orchestrator
from squidsim.storage.database import Database
from squidsim.storage.models import CheckResult

MODEL = {
    "e0_GHz": [14.0, 14.0, 0.0, 0.0],
    "k_GHz_per_Phi0": [-980.0, 980.0, -1000.0, 1000.0],
    "delta00_GHz": 0.05,
    "delta01_GHz": 0.3,
    "delta11_GHz": 0.6,
    "bias_ref_Phi0": 0.5,
}


def _raw_config(out_dir, **sections) -> dict:
    raw = {
        "model": MODEL,
        "sweep": {
            "bias_min": 0.49, "bias_max": 0.51, "n_bias": 5,
            "p_min": -30.0, "p_max": -10.0, "n_power": 3,
            "shots": 1000, "seed": 3,
        },
        "levels": {"n_bias": 5},
        "output": {"dir": str(out_dir), "database": ""},
    }
    raw.update(sections)
    return raw


@pytest.fixture
def db():
    database = Database(":memory:")
    yield database
    database.close()


@pytest.fixture
def orchestrator(tmp_path, db):
    orch = Orchestrator(build_config(_raw_config(tmp_path / "out")), database=db)
    yield orch
    orch.close()


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def test_sweep_writes_outputs_and_ledger(orchestrator, db, tmp_path):
    assert orchestrator.run("sweep") is True

    out = tmp_path / "out"
    for name in ("config_effective.json", "sweep_grid.csv", "sweep_grid.json", "features.json", "sweep_heatmap.svg"):
        assert (out / name).exists(), name

    first_line = (out / "sweep_grid.csv").read_text().splitlines()[0]
    assert first_line == f"# config_hash={orchestrator.config_hash}"
    payload = json.loads((out / "sweep_grid.json").read_text())
    assert payload["config_hash"] == orchestrator.config_hash

    run = db.get_runs("sweep")[0]
    assert run.status == "completed"
    assert len(db.get_sweep_cells(run.run_id)) == 15
    kinds = [kind for kind, _ in db.get_outputs(run.run_id)]
    assert kinds[0] == "config_json"
    assert "grid_csv" in kinds and "heatmap_svg" in kinds


def test_sweep_outputs_are_byte_identical_across_runs(orchestrator, tmp_path):
    out = tmp_path / "out"
    names = ("sweep_grid.csv", "sweep_grid.json", "features.json", "config_effective.json")

    orchestrator.run("sweep")
    first = {name: (out / name).read_bytes() for name in names}
    orchestrator.run("sweep")
    second = {name: (out / name).read_bytes() for name in names}

    assert first == second


def test_hooks_receive_run_events(orchestrator):
    hook = MagicMock(spec=BaseHook)
    orchestrator.register_hook(hook)

    orchestrator.run("sweep")

    hook.on_run_start.assert_called_once()
    assert hook.on_run_start.call_args.kwargs["command"] == "sweep"
    hook.on_model_extracted.assert_called_once()
    assert hook.on_cell_done.call_count == 15
    last = hook.on_cell_done.call_args_list[-1].kwargs
    assert last["index"] == 14 and last["total"] == 15
    hook.on_run_end.assert_called_once_with(run_id=orchestrator._run_id, status="completed")


def test_failing_hook_does_not_abort(orchestrator):
    class BrokenHook(BaseHook):
        def on_cell_done(self, **kwargs):
            raise RuntimeError("hook exploded")

    orchestrator.register_hook(BrokenHook())
    assert orchestrator.run("sweep") is True


def test_unknown_command(orchestrator):
    with pytest.raises(ValueError):
        orchestrator.run("animate")


# ---------------------------------------------------------------------------
# Scan, levels, verify
# ---------------------------------------------------------------------------

def test_scan_writes_both_curves(orchestrator, tmp_path):
    orchestrator.run("scan")

    lines = (tmp_path / "out" / "scan.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert len(lines) == 2 + 5
    assert (tmp_path / "out" / "scan.svg").exists()


def test_levels_records_model_source(orchestrator, tmp_path):
    orchestrator.run("levels")

    model = json.loads((tmp_path / "out" / "model.json").read_text())
    assert model["source"] == "config"
    assert model["model"]["delta01_GHz"] == 0.3
    assert (tmp_path / "out" / "levels.csv").exists()
    assert (tmp_path / "out" / "levels.svg").exists()


def test_resolved_tunneling_config_runs_levels_and_sweep(tmp_path, db):
    raw = json.loads(Path("configs/resolved_tunneling.json").read_text())
    raw["output"] = {"dir": str(tmp_path / "out"), "database": ""}
    raw["hooks"] = []
    raw["sweep"].update({"n_bias": 21, "n_power": 2})
    orch = Orchestrator(build_config(raw), database=db)

    assert orch.run("levels") is True
    assert orch.run("sweep") is True

    out = tmp_path / "out"
    for name in ("levels.csv", "model.json", "sweep_grid.csv", "features.json"):
        assert (out / name).exists(), name
    model = json.loads((out / "model.json").read_text())
    assert model["source"] == "extracted"
    assert 0 < model["model"]["delta00_GHz"] < model["model"]["delta01_GHz"]
    orch.close()


def test_level_solve_failure_marks_run_failed(tmp_path, db):
    raw = _raw_config(tmp_path / "out", levels={"n_bias": 3, "n_points": 201})
    orch = Orchestrator(build_config(raw), database=db)

    with pytest.raises(LevelSolveError):
        orch.run("levels")

    run = db.get_runs("levels")[0]
    assert run.status == "failed"
    assert "grid spacing" in run.message


def test_verify_failure_is_reported(orchestrator, db, capsys):
    failing = [CheckResult("round_trip", "delta00", False, "0.1 vs 0.05")]
    with patch("squidsim.orchestrator.run_all", return_value=failing):
        assert orchestrator.run("verify") is False

    assert "0/1 checks passed" in capsys.readouterr().out
    assert db.get_runs("verify")[0].status == "verify_failed"


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def _json_line(text: str) -> dict:
    return next(json.loads(line) for line in text.splitlines() if line.startswith("{"))


def test_main_missing_config(tmp_path, capsys):
    code = main(["sweep", "--config", str(tmp_path / "nope.json"), "--json-errors"])

    assert code == EXIT_PARSE
    assert _json_line(capsys.readouterr().out)["error"] == "ParseError"


def test_json_errors_keep_stdout_for_the_error_line(tmp_path, capsys):
    with patch("main.logging.basicConfig") as basic_config:
        code = main(["sweep", "--config", str(tmp_path / "nope.json"), "--json-errors"])

    assert code == EXIT_PARSE
    handler = basic_config.call_args.kwargs["handlers"][0]
    assert handler.stream is sys.stderr
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["error"] == "ParseError"


def test_logs_go_to_stdout_without_json_errors(tmp_path):
    with patch("main.logging.basicConfig") as basic_config:
        main(["sweep", "--config", str(tmp_path / "nope.json")])

    assert basic_config.call_args.kwargs["handlers"][0].stream is sys.stdout


def test_main_invalid_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"circuit": {"Ic": 4e-7, "beta_L": 1.39}}))

    code = main(["levels", "--config", str(path), "--json-errors"])

    assert code == EXIT_VALIDATION
    error = _json_line(capsys.readouterr().out)
    assert error["error"] == "ValidationError"
    assert error["field"] == "circuit.Ic"


def test_main_simulation_error(tmp_path):
    path = tmp_path / "coarse.json"
    path.write_text(json.dumps(_raw_config(tmp_path / "out", levels={"n_bias": 3, "n_points": 201})))

    assert main(["levels", "--config", str(path)]) == EXIT_SIMULATION


def test_main_sweep_with_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(_raw_config(tmp_path / "ignored")))
    out = tmp_path / "cli_out"

    code = main(["sweep", "--config", str(path), "--out", str(out), "--seed", "9", "--solver", "rate"])

    assert code == EXIT_OK
    effective = json.loads((out / "config_effective.json").read_text())
    assert effective["sweep"]["seed"] == 9
    assert not (tmp_path / "ignored").exists()


def test_main_verify_failure_exit_code(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(_raw_config(tmp_path / "out")))
    failing = [CheckResult("lz_oracle", "gap=0.1, v=1.0", False)]

    with patch("squidsim.orchestrator.run_all", return_value=failing):
        assert main(["verify", "--config", str(path)]) == EXIT_FAILED


def test_config_hash_survives_json_round_trip(tmp_path):
    raw = _raw_config(tmp_path / "out")
    assert config_hash(build_config(raw)) == config_hash(build_config(json.loads(json.dumps(raw))))
