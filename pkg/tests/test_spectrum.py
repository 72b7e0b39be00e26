"""
Unit tests for the flux eigenproblem and level-diagram reduction.

The harmonic limit checks the eigensolver against 1/(2 pi sqrt(LC));
synthetic diagrams generated from a known four-level model check branch
identification, crossing extraction and resonance prediction.
"""

import numpy as np
import pytest

from squidsim.circuit import lc_frequency
from squidsim.errors import BranchAmbiguity, GridTooCoarse, LevelSolveError, NoCrossingFound
from squidsim.spectrum import (
    default_grid,
    extract_four_level_model,
    identify_branches,
    level_diagram,
    local_models,
    predict_resonances,
    solve_eigen,
    spacing_at,
    synthetic_diagram,
)
from squidsim.storage.models import (
    IDX_0L,
    IDX_0R,
    IDX_1L,
    IDX_1R,
    CircuitParams,
    EigenGridSpec,
    EnergySpectrum,
    FourLevelModel,
    LevelDiagram,
    Resonance,
    Side,
)

from tests.conftest import C_DEVICE, L_DEVICE


def test_harmonic_limit_spacings():
    p = CircuitParams(L=L_DEVICE, C=C_DEVICE, Ic=0.0)
    spectrum = solve_eigen(p, default_grid(p, n_levels=6))
    spacings = np.diff(spectrum.energies)

    np.testing.assert_allclose(spacings, lc_frequency(p), rtol=0.01)


def test_wavefunctions_are_normalized(device_params):
    spectrum = solve_eigen(device_params.with_bias(0.49), default_grid(device_params.with_bias(0.49)))
    dphi = spectrum.grid[1] - spectrum.grid[0]
    norms = np.sum(spectrum.wavefunctions ** 2, axis=1) * dphi
    np.testing.assert_allclose(norms, 1.0, rtol=1e-10)
    assert np.all(np.diff(spectrum.energies) >= 0)


def test_coarse_grid_detected(device_params):
    coarse = EigenGridSpec(0.15, 0.85, n_points=201, n_levels=8)
    with pytest.raises(GridTooCoarse):
        solve_eigen(device_params, coarse)


def test_level_diagram_labels_ground_state_side(device_params):
    diagram = level_diagram(device_params, (0.49, 0.51), 3, default_grid(device_params))

    assert len(diagram.spectra) == 3
    assert diagram.spectra[0].labels[0].side == Side.LEFT
    assert diagram.spectra[-1].labels[0].side == Side.RIGHT
    assert diagram.spectra[0].labels[0].name == "0L"
    assert diagram.spectra[0].wavefunctions is None


def test_level_diagram_reports_progress(device_params):
    seen = []
    level_diagram(
        device_params, (0.49, 0.51), 3, default_grid(device_params),
        on_solved=lambda bias, n: seen.append((round(bias, 6), n)),
    )
    assert sorted(seen) == [(0.49, 8), (0.5, 8), (0.51, 8)]


def test_level_diagram_wraps_failures_with_bias(device_params):
    coarse = EigenGridSpec(0.15, 0.85, n_points=201, n_levels=8)
    with pytest.raises(LevelSolveError) as info:
        level_diagram(device_params, (0.49, 0.51), 3, coarse, max_workers=1)

    assert min(abs(info.value.bias - b) for b in (0.49, 0.5, 0.51)) < 1e-12
    assert isinstance(info.value.cause, GridTooCoarse)


def test_identify_branches_far_from_crossings(reference_model):
    diagram = synthetic_diagram(reference_model, [0.48])
    branches = identify_branches(diagram.spectra[0])

    m = reference_model.at_bias(0.48)
    assert branches[IDX_0L] == pytest.approx(m.e0[IDX_0L], abs=0.05)
    assert branches[IDX_0R] == pytest.approx(m.e0[IDX_0R], abs=0.05)
    assert branches[IDX_1L] == pytest.approx(m.e0[IDX_1L], abs=0.05)
    assert branches[IDX_1R] == pytest.approx(m.e0[IDX_1R], abs=0.05)


def test_identify_branches_rejects_mixed_states(reference_model):
    # 0R and 0L are fully mixed at their crossing and everything sits above them
    diagram = synthetic_diagram(reference_model, [0.5])
    assert identify_branches(diagram.spectra[0]) == {}


def test_identify_branches_keeps_states_below_a_mixed_level(reference_model):
    # 1L and 0R cross here; 0L stays clean below them
    bias = 0.5 - 14 / 1980
    branches = identify_branches(synthetic_diagram(reference_model, [bias]).spectra[0])

    assert set(branches) == {IDX_0L}
    assert branches[IDX_0L] == pytest.approx(reference_model.at_bias(bias).e0[IDX_0L], abs=0.05)


def test_identify_branches_needs_well_weights():
    assert identify_branches(EnergySpectrum(energies=np.array([0.0, 1.0, 2.0, 3.0]))) is None


def test_round_trip_extraction(reference_model, reference_biases):
    recovered = extract_four_level_model(synthetic_diagram(reference_model, reference_biases))

    assert recovered.bias_ref == 0.5
    assert recovered.delta00 == pytest.approx(reference_model.delta00, rel=0.02)
    assert recovered.delta01 == pytest.approx(reference_model.delta01, rel=0.02)
    assert recovered.delta11 == pytest.approx(reference_model.delta11, rel=0.02)
    np.testing.assert_allclose(recovered.k, reference_model.k, rtol=0.02)
    np.testing.assert_allclose(recovered.e0, reference_model.e0, atol=0.05)
    assert recovered.in_tunneling_regime


def test_extraction_needs_interior_crossing(reference_model):
    diagram = synthetic_diagram(reference_model, np.linspace(0.47, 0.5, 121))
    with pytest.raises(NoCrossingFound):
        extract_four_level_model(diagram)


def test_extraction_needs_four_levels():
    spectra = [
        EnergySpectrum(energies=np.array([0.0, 1.0, 2.0]), bias=b, left_weights=np.array([1.0, 0.0, 1.0]))
        for b in (0.49, 0.5, 0.51)
    ]
    with pytest.raises(BranchAmbiguity):
        extract_four_level_model(LevelDiagram(biases=np.array([0.49, 0.5, 0.51]), spectra=spectra))


def test_predict_resonances(reference_model, reference_biases):
    diagram = synthetic_diagram(reference_model, reference_biases)
    resonances = predict_resonances(diagram, 15.9, 3)

    assert resonances == sorted(resonances, key=lambda r: (r.bias, r.n, r.pair))
    one_photon = [r for r in resonances if r.n == 1 and r.pair == ("0L", "1R")]
    assert any(abs(r.bias - (0.5 - 1.9 / 1980)) < 3e-4 for r in one_photon)

    ground_pair = [r.bias for r in resonances if r.n == 1 and r.pair == ("0L", "0R")]
    assert any(abs(b - (0.5 - 15.9 / 2000)) < 2e-4 for b in ground_pair)
    assert any(abs(b - (0.5 + 15.9 / 2000)) < 2e-4 for b in ground_pair)


def test_predict_resonances_rejects_bad_order(reference_model, reference_biases):
    with pytest.raises(ValueError):
        predict_resonances(synthetic_diagram(reference_model, reference_biases), 15.9, 0)


def test_spacing_at(reference_model, reference_biases):
    diagram = synthetic_diagram(reference_model, reference_biases)
    assert spacing_at(diagram, 0.52, ("0L", "0R")) == pytest.approx(40.0, abs=0.05)
    assert spacing_at(diagram, 0.6, ("0L", "0R")) is None


def test_predict_resonances_counts_exact_match_on_last_bias():
    biases = [0.49, 0.495, 0.5]
    spectra = [
        EnergySpectrum(energies=np.array([0.0, s, 30.0, 40.0]), bias=b, left_weights=np.array([1.0, 0.0, 1.0, 0.0]))
        for b, s in zip(biases, (10.0, 12.0, 15.9))
    ]
    diagram = LevelDiagram(biases=np.array(biases), spectra=spectra)

    resonances = predict_resonances(diagram, 15.9, 1)

    assert resonances == [Resonance(bias=0.5, n=1, pair=("0L", "0R"))]
    assert spacing_at(diagram, 0.5, ("0L", "0R")) == pytest.approx(15.9)


def test_spacing_at_skips_biases_without_the_pair():
    biases = [0.49, 0.495, 0.5]
    weights = [np.array([1.0, 0.0, 1.0, 0.0]), np.array([1.0, 0.5, 0.5, 0.0]), np.array([1.0, 0.0, 1.0, 0.0])]
    spectra = [
        EnergySpectrum(energies=np.array([0.0, 10.0 + i, 30.0, 40.0]), bias=b, left_weights=w)
        for i, (b, w) in enumerate(zip(biases, weights))
    ]
    diagram = LevelDiagram(biases=np.array(biases), spectra=spectra)

    # Only the outer biases carry a clean 0R
    assert spacing_at(diagram, 0.495, ("0L", "0R")) == pytest.approx(11.0)


def test_local_models_follow_the_diagram(reference_model, reference_biases):
    diagram = synthetic_diagram(reference_model, reference_biases)
    base = FourLevelModel(e0=(0.0, 0.0, 0.0, 0.0), k=(0.0, 0.0, 0.0, 0.0), delta00=0.05, delta01=0.3, delta11=0.6)

    models = local_models(diagram, base, [0.48, 0.4952, 0.515])

    for model, bias in zip(models, (0.48, 0.4952, 0.515)):
        truth = reference_model.at_bias(bias)
        assert model.bias_ref == bias
        np.testing.assert_allclose(model.e0, truth.e0, atol=0.1)
        np.testing.assert_allclose(model.k, truth.k, rtol=0.05)
        assert model.delta01 == 0.3
