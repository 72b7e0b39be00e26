"""
Unit tests for the circuit model.

Covers the energy scales, the double-well geometry at and away from the
symmetry point, and the regime warnings.
"""

import math

import numpy as np
import pytest

from squidsim.circuit import (
    beta_l,
    effective_critical_current,
    find_wells,
    lc_frequency,
    potential,
    potential_derivative,
    stationary_points,
    u0_ghz,
    validate_params,
)
from squidsim.errors import NoDoubleWell
from squidsim.storage.models import CircuitParams

from tests.conftest import BETA_DEVICE, C_DEVICE, L_DEVICE


def test_energy_scales(device_params):
    assert u0_ghz(device_params) == pytest.approx(151.35, rel=2e-3)
    assert lc_frequency(device_params) == pytest.approx(0.5415, rel=1e-3)
    assert device_params.Ic == pytest.approx(0.4236e-6, rel=1e-3)
    assert beta_l(device_params) == pytest.approx(BETA_DEVICE, rel=1e-12)


def test_cjj_flux_scales_critical_current(device_params):
    tuned = CircuitParams(L=L_DEVICE, C=C_DEVICE, Ic=device_params.Ic, phi_cjj=1.0 / 3.0)
    assert effective_critical_current(tuned) == pytest.approx(0.5 * device_params.Ic, rel=1e-9)
    assert beta_l(tuned) == pytest.approx(0.5 * BETA_DEVICE, rel=1e-9)


def test_symmetric_wells(device_params):
    wells = find_wells(device_params)

    assert wells.barrier_top == pytest.approx(0.5, abs=1e-6)
    assert 0.5 - wells.left_min == pytest.approx(0.2165, abs=1e-3)
    assert wells.right_min - 0.5 == pytest.approx(0.5 - wells.left_min, abs=1e-6)
    assert wells.U_left == pytest.approx(wells.U_right, abs=1e-6)
    assert wells.barrier_height == pytest.approx(26.4, rel=0.02)


def test_bias_below_half_lowers_left_well(device_params):
    wells = find_wells(device_params.with_bias(0.49))
    assert wells.U_left < wells.U_right

    wells = find_wells(device_params.with_bias(0.51))
    assert wells.U_right < wells.U_left


def test_no_double_well_below_beta_one():
    p = CircuitParams.from_beta_l(0.8, L=L_DEVICE, C=C_DEVICE)
    with pytest.raises(NoDoubleWell):
        find_wells(p)


def test_harmonic_potential_has_single_stationary_point():
    p = CircuitParams(L=L_DEVICE, C=C_DEVICE, Ic=0.0)
    points = stationary_points(p)
    assert len(points) == 1
    assert points[0] == pytest.approx(0.5, abs=1e-8)


def test_potential_derivative_matches_finite_difference(device_params):
    phi = np.linspace(0.3, 0.7, 9)
    h = 1e-6
    numeric = (potential(device_params, phi + h) - potential(device_params, phi - h)) / (2 * h)
    np.testing.assert_allclose(potential_derivative(device_params, phi), numeric, rtol=1e-5, atol=1e-3)


def test_potential_scalar_and_array(device_params):
    assert isinstance(potential(device_params, 0.5), float)
    assert potential(device_params, np.array([0.4, 0.5])).shape == (2,)
    # At the symmetry point the barrier top is U0 * beta_L
    assert potential(device_params, 0.5) == pytest.approx(u0_ghz(device_params) * BETA_DEVICE)


def test_validate_params_flags_regimes(device_params):
    warnings = validate_params(device_params, f_drive=15.9)
    assert any("LC frequency" in w for w in warnings)

    strong = CircuitParams.from_beta_l(5.0, L=L_DEVICE, C=80e-15)
    warnings = validate_params(strong)
    assert any("beta_L" in w for w in warnings)

    fine = CircuitParams.from_beta_l(BETA_DEVICE, L=L_DEVICE, C=80e-15)
    assert validate_params(fine, f_drive=15.9) == []


@pytest.mark.parametrize("kwargs", [
    {"L": 0.0, "C": C_DEVICE, "Ic": 1e-6},
    {"L": L_DEVICE, "C": -1.0, "Ic": 1e-6},
    {"L": L_DEVICE, "C": C_DEVICE, "Ic": -1e-6},
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        CircuitParams(**kwargs)


def test_phi0_value():
    from squidsim.storage.models import CONSTANTS
    assert CONSTANTS.Phi0 == pytest.approx(2.067833848e-15, rel=1e-9)
    assert math.isclose(CONSTANTS.h / (2 * 1.602176634e-19), CONSTANTS.Phi0, rel_tol=1e-12)
