"""
Unit tests for the verification suites and their reporting.

The sweep-level suites double as the acceptance checks of the reference
model: resonance placement, inversion and non-monotonic power dependence.
"""

import pytest

from squidsim.storage.models import CheckResult
from squidsim.verify import (
    AGREEMENT_TOL,
    SUITES,
    check_harmonic_limit,
    check_lz_oracle,
    check_round_trip,
    check_solver_agreement,
    check_trace_preservation,
    format_table,
    one_photon_bias,
    run_all,
)


def test_lz_oracle_passes():
    results = check_lz_oracle()
    assert len(results) == 16
    assert all(r.passed for r in results), [r.detail for r in results if not r.passed]


def test_harmonic_limit_passes():
    results = check_harmonic_limit()
    assert len(results) == 5
    assert all(r.passed for r in results)


def test_round_trip_passes():
    results = check_round_trip()
    assert {r.name for r in results} >= {"delta00", "delta01", "delta11"}
    assert all(r.passed for r in results)


def test_short_trajectory_conserves_and_is_handed_out():
    seen = []
    results = check_trace_preservation(duration=5.0, on_trajectory=seen.append)

    assert [r.name for r in results] == ["trace", "hermiticity", "positivity"]
    assert all(r.passed for r in results)
    assert len(seen) == 1
    assert seen[0].times[-1] == pytest.approx(5.0)


def test_raising_suite_counts_as_failure():
    def broken():
        raise RuntimeError("boom")

    results = run_all({"ok": lambda: [CheckResult("ok", "one", True)], "broken": broken})

    assert [r.passed for r in results] == [True, False]
    assert "RuntimeError: boom" in results[1].detail


def test_format_table():
    table = format_table([CheckResult("lz_oracle", "gap=0.1, v=1.0", True, "ok"), CheckResult("x", "y", False)])
    lines = table.splitlines()
    assert lines[0].startswith("suite")
    assert "PASS" in lines[1] and "FAIL" in lines[2]
    assert lines[-1] == "1/2 checks passed"


@pytest.mark.parametrize("suite", [
    "lz_master_equation",
    "brute_force",
    "step_halving",
    "fixed_point",
    "rabi",
    "resonance_consistency",
    "bessel_scaling",
    "resonance_placement",
    "inversion",
    "power_dependence",
])
def test_suite_passes(suite):
    results = SUITES[suite]()
    assert results
    assert all(r.passed for r in results), [f"{r.name}: {r.detail}" for r in results if not r.passed]


def test_one_photon_bias_of_reference_model():
    assert one_photon_bias() == pytest.approx(0.5 - 1.9 / 1980, abs=1e-5)


def test_solver_agreement_reports_every_draw():
    results = check_solver_agreement(n_points=3, seed=1)

    assert len(results) == 3
    assert all(r.suite == "solver_agreement" for r in results)
    for r in results:
        rate = float(r.detail.split("rate=")[1].split()[0])
        full = float(r.detail.split("full=")[1].split()[0])
        if abs(rate - full) < AGREEMENT_TOL - 1e-3:
            assert r.passed
        elif abs(rate - full) > AGREEMENT_TOL + 1e-3:
            assert not r.passed


def test_trace_preservation_checks_every_sample():
    seen = []
    check_trace_preservation(duration=1.0, on_trajectory=seen.append)
    assert len(seen[0].asymmetry) == len(seen[0].times)
