"""
Unit tests for the Landau-Zener analytics and the rate-equation solver.
"""

import math

import numpy as np
import pytest
from scipy.special import jv

from squidsim.errors import InvalidOrder, SingularRateMatrix
from squidsim.lz import (
    bessel_argument,
    bessel_modulation_maxima,
    bessel_rate,
    lz_probability,
    numeric_lz_survival,
    rate_model,
    rate_right_well_population,
    rate_steady_state,
)
from squidsim.storage.models import (
    IDX_0L,
    IDX_0R,
    IDX_1L,
    IDX_1R,
    CrossingSpec,
    DecoherenceRates,
    DriveParams,
    FourLevelModel,
)


@pytest.fixture
def inversion_model():
    """0L -> 1R one-photon resonant at 15.9 GHz; 1L -> 0R detuned by 1.9 GHz."""
    return FourLevelModel(
        e0=(15.9, 16.0, 2.0, 0.0),
        k=(-1000.0, 1000.0, -1000.0, 1000.0),
        delta00=0.0,
        delta01=0.3,
        delta11=0.0,
    )


# ---------------------------------------------------------------------------
# Single crossing
# ---------------------------------------------------------------------------

def test_lz_probability_closed_form():
    c = CrossingSpec(delta=0.1 / (2 * math.pi), sweep_rate=1.0)
    assert lz_probability(c) == pytest.approx(math.exp(-2 * math.pi * 0.01))


def test_lz_probability_limits():
    assert lz_probability(CrossingSpec(delta=0.0, sweep_rate=1.0)) == 1.0
    assert lz_probability(CrossingSpec(delta=1.0, sweep_rate=1.0)) < 1e-100
    forward = lz_probability(CrossingSpec(delta=0.03, sweep_rate=2.0))
    backward = lz_probability(CrossingSpec(delta=0.03, sweep_rate=-2.0))
    assert forward == backward


def test_crossing_spec_rejects_zero_sweep():
    with pytest.raises(ValueError):
        CrossingSpec(delta=0.1, sweep_rate=0.0)


@pytest.mark.parametrize("gap,rate", [(0.1, 1.0), (0.2, 1.0), (0.3, 2.0)])
def test_numeric_sweep_matches_closed_form(gap, rate):
    c = CrossingSpec(delta=gap / (2 * math.pi), sweep_rate=rate)
    assert numeric_lz_survival(c) == pytest.approx(lz_probability(c), abs=1e-3)


# ---------------------------------------------------------------------------
# Bessel-modulated rates
# ---------------------------------------------------------------------------

def test_bessel_rate_vanishes_without_drive(inversion_model):
    off = DriveParams(f=15.9, phi_rf=0.0)
    assert bessel_rate(1, inversion_model, off, gamma2=2.0) == 0.0


def test_bessel_rate_scales_with_coupling_squared(inversion_model):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    doubled = FourLevelModel(
        inversion_model.e0, inversion_model.k, 0.0, 2 * inversion_model.delta01, 0.0
    )
    single = bessel_rate(1, inversion_model, drive, gamma2=2.0)
    assert single > 0
    assert bessel_rate(1, doubled, drive, gamma2=2.0) == pytest.approx(4 * single)


def test_bessel_rate_peaks_on_resonance(inversion_model):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    on = bessel_rate(1, inversion_model, drive, gamma2=2.0, pair=(IDX_1R, IDX_0L))
    off = bessel_rate(1, inversion_model, drive, gamma2=2.0, pair=(IDX_1L, IDX_0R))
    assert on > 100 * off


def test_bessel_rate_matches_formula(inversion_model):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    x = bessel_argument(inversion_model, drive, (IDX_1R, IDX_0L))
    assert x == pytest.approx(-2000 * 0.01 / 15.9)
    expected = (2 * math.pi * 0.3) ** 2 * jv(1, x) ** 2 * 1.0 / (1.0 + 0.0) * 0.5
    assert bessel_rate(1, inversion_model, drive, gamma2=2.0) == pytest.approx(expected)


def test_bessel_rate_rejects_bad_arguments(inversion_model):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    with pytest.raises(InvalidOrder):
        bessel_rate(0, inversion_model, drive, gamma2=2.0)
    with pytest.raises(ValueError):
        bessel_rate(1, inversion_model, drive, gamma2=0.0)


def test_modulation_maxima_scale_with_frequency():
    low = bessel_modulation_maxima(1, k=1980.0, f=15.9, phi_max=0.05)
    high = bessel_modulation_maxima(1, k=1980.0, f=31.8, phi_max=0.1)

    assert len(low) == 2
    assert low[0] == pytest.approx(1.841183781 * 15.9 / 1980, rel=1e-8)
    assert np.all(low <= 0.05)
    assert np.allclose(high, 2 * low)


def test_modulation_maxima_rejects_bad_order():
    with pytest.raises(InvalidOrder):
        bessel_modulation_maxima(0, k=1980.0, f=15.9, phi_max=0.05)


# ---------------------------------------------------------------------------
# Rate equation
# ---------------------------------------------------------------------------

def test_occupations_form_distribution(reference_model, default_rates):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    for bias in (0.48, 0.495, 0.5, 0.5071, 0.52):
        occ = rate_steady_state(reference_model.at_bias(bias), drive, default_rates)
        assert occ.sum() == pytest.approx(1.0)
        assert np.all(occ >= 0)


def test_decay_only_relaxes_to_lower_well(reference_model, default_rates):
    off = DriveParams(f=15.9, phi_rf=0.0)
    occ = rate_steady_state(reference_model.at_bias(0.49), off, default_rates)
    assert occ == pytest.approx([0.0, 0.0, 0.0, 1.0])

    occ = rate_steady_state(reference_model.at_bias(0.51), off, default_rates)
    assert occ == pytest.approx([0.0, 0.0, 1.0, 0.0])


def test_resonant_pump_inverts_population(inversion_model, default_rates):
    x_max = 1.841183781
    drive = DriveParams(f=15.9, phi_rf=x_max * 15.9 / 2000)

    result = rate_model(inversion_model, drive, default_rates)

    assert int(np.argmax(result.occupations)) == IDX_0R
    assert rate_right_well_population(result.occupations) > 0.9
    assert set(result.pump_rates) == {(IDX_1R, IDX_0L), (IDX_1L, IDX_0R)}


def test_symmetric_point_splits_evenly(reference_model, default_rates):
    drive = DriveParams(f=15.9, phi_rf=0.01)
    occ = rate_steady_state(reference_model, drive, default_rates)
    assert rate_right_well_population(occ) == pytest.approx(0.5, abs=1e-9)
    assert occ[IDX_1R] == pytest.approx(occ[IDX_1L], abs=1e-12)


def test_disconnected_wells_are_singular():
    model = FourLevelModel(
        e0=(14.0, 14.0, 0.0, 0.0),
        k=(-980.0, 980.0, -1000.0, 1000.0),
        delta00=0.0,
        delta01=0.0,
        delta11=0.0,
    )
    rates = DecoherenceRates(gamma1=1.0, gamma_inter=0.0, gamma2=2.0)
    drive = DriveParams(f=15.9, phi_rf=0.01)

    with pytest.raises(SingularRateMatrix):
        rate_model(model, drive, rates, strict=True)

    occ = rate_model(model, drive, rates).occupations
    assert occ == pytest.approx([0.0, 0.0, 0.5, 0.5])


def test_rate_model_rejects_bad_order(reference_model, default_rates):
    with pytest.raises(InvalidOrder):
        rate_model(reference_model, DriveParams(f=15.9, phi_rf=0.01), default_rates, n_max=0)
