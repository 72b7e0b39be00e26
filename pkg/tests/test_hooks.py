"""
Unit tests for the hook base class and the progress logging hook.
"""

import logging

import pytest

from squidsim.hooks import BaseHook, ProgressLogHook


def test_base_hook_methods_are_no_ops(reference_model):
    hook = BaseHook()
    hook.on_run_start(run_id=1, command="sweep", config_hash="h")
    hook.on_level_solved(bias=0.5, n_levels=8)
    hook.on_model_extracted(model=reference_model)
    hook.on_cell_done(index=0, total=1, bias=0.5, power_dbm=-20.0, population=0.5, provenance="rate")
    hook.on_output_written(kind="grid_csv", path="out/sweep_grid.csv")
    hook.on_run_end(run_id=1, status="completed")


def test_progress_logged_every_tenth(caplog):
    hook = ProgressLogHook(every=0.1)
    with caplog.at_level(logging.INFO, logger="squidsim.hooks.progress"):
        hook.on_run_start(run_id=None, command="sweep", config_hash="0" * 64)
        for i in range(40):
            hook.on_cell_done(i, 40, 0.5, -20.0, 0.5, "failed" if i == 3 else "rate")

    progress = [r.getMessage() for r in caplog.records if r.getMessage().startswith("Sweep")]
    assert len(progress) == 10
    assert "(40/40 cells, 1 failed" in progress[-1]


def test_progress_resets_between_runs(caplog):
    hook = ProgressLogHook(every=0.5)
    with caplog.at_level(logging.INFO, logger="squidsim.hooks.progress"):
        for _ in range(2):
            hook.on_run_start(run_id=None, command="sweep", config_hash="h")
            for i in range(4):
                hook.on_cell_done(i, 4, 0.5, -20.0, 0.5, "rate")

    progress = [r for r in caplog.records if r.getMessage().startswith("Sweep")]
    assert len(progress) == 4


def test_model_regime_is_reported(caplog, reference_model):
    with caplog.at_level(logging.INFO, logger="squidsim.hooks.progress"):
        ProgressLogHook().on_model_extracted(reference_model)
    assert "tunneling" in caplog.text


@pytest.mark.parametrize("every", [0.0, -0.1, 1.5])
def test_progress_rejects_bad_step(every):
    with pytest.raises(ValueError):
        ProgressLogHook(every=every)
