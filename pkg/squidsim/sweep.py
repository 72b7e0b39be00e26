"""
Sweep engine for squidsim.

Bias-only step curves, bias x power population maps, shot-noise emulation
and feature detection. Cells are evaluated in a thread pool but assembled
and reported strictly in index order, so a given spec and seed always give
the same grid.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from squidsim.dynamics import simulate_protocol
from squidsim.errors import SquidSimError
from squidsim.lz import rate_right_well_population, rate_steady_state
from squidsim.spectrum import (
    default_grid,
    extract_four_level_model,
    level_diagram,
    local_models,
    predict_resonances,
)
from squidsim.storage.models import (
    IDX_0L,
    IDX_0R,
    PROVENANCE_FAILED,
    PROVENANCE_FULL,
    PROVENANCE_RATE,
    PROVENANCE_STATIC,
    CircuitParams,
    DecoherenceRates,
    DriveParams,
    EigenGridSpec,
    Feature,
    FeatureReport,
    FourLevelModel,
    InversionEntry,
    LevelDiagram,
    PowerCalibration,
    ScanCurve,
    Side,
    Solver,
    SweepGrid,
    SweepSpec,
)

logger = logging.getLogger(__name__)

# Population change against the no-MW baseline that counts as a feature
FEATURE_THRESHOLD = 0.1
# Resonance assignment radius, in bias grid steps
RESONANCE_MATCH_STEPS = 2

THREADS_ENV = "SQUIDSIM_THREADS"


def thread_count() -> int | None:
    """Worker cap from SQUIDSIM_THREADS; None lets the pool pick its default."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        logger.warning(f"Ignoring non-integer {THREADS_ENV}={value!r}")
        return None
    return max(1, n)


def power_to_amplitude(p: float, cal: PowerCalibration) -> float:
    """Flux amplitude (Phi0) for a nominal power in dBm; -inf dBm is no drive."""
    return cal.phi_rf_ref * 10 ** ((p - cal.p_ref) / 20)


def _static_population(spectrum) -> float:
    """P(|R>) of the ground level of one solved spectrum."""
    if spectrum.labels:
        side = spectrum.labels[int(np.argmin(spectrum.energies))].side
        if side == Side.RIGHT:
            return 1.0
        if side == Side.LEFT:
            return 0.0
    if spectrum.left_weights is not None:
        return float(1.0 - spectrum.left_weights[int(np.argmin(spectrum.energies))])
    return 0.5


def bias_scan_no_mw(
    p: CircuitParams,
    spec: SweepSpec,
    diagram: LevelDiagram | None = None,
    model: FourLevelModel | None = None,
    grid: EigenGridSpec | None = None,
) -> ScanCurve:
    """
    Static right-well population of the ground state versus bias.

    The ground level decides: 1 in the right well, 0 in the left one. Biases
    closer than one grid step to 0.5 Phi0 are degenerate and get 0.5. With an
    explicit four-level model the lower of |0R>, |0L> decides instead of
    a solved spectrum.

    Args:
        p: Circuit parameters
        spec: Sweep definition; only the bias axis is used
        diagram: Precomputed level diagram on the same bias axis
        model: Four-level model to use instead of a level diagram
        grid: Eigen grid when the diagram has to be solved here

    Returns:
        ScanCurve over spec.bias_axis()
    """
    biases = spec.bias_axis()
    degenerate_width = spec.bias_step * (1 - 1e-9)
    populations = np.empty(len(biases))

    if model is None and diagram is None:
        diagram = level_diagram(
            p,
            (spec.bias_min, spec.bias_max),
            spec.n_bias,
            grid or default_grid(p),
            max_workers=thread_count(),
        )

    for i, bias in enumerate(biases):
        if bias == 0.5 or abs(bias - 0.5) < degenerate_width:
            populations[i] = 0.5
        elif model is not None:
            m = model.at_bias(float(bias))
            populations[i] = 1.0 if m.e0[IDX_0R] < m.e0[IDX_0L] else 0.0
        else:
            populations[i] = _static_population(diagram.spectra[i])

    logger.info(f"No-MW scan over {len(biases)} biases; mean P(R)={populations.mean():.3f}")
    return ScanCurve(biases=biases, populations=populations)


def cell_population(
    model: FourLevelModel, d: DriveParams, r: DecoherenceRates, solver: Solver, n_max: int = 3
) -> tuple[float, str]:
    """Right-well population of one driven cell and the provenance label."""
    if solver == Solver.FULL:
        return simulate_protocol(model, d, r), PROVENANCE_FULL
    return rate_right_well_population(rate_steady_state(model, d, r, n_max)), PROVENANCE_RATE


def run_sweep(
    p: CircuitParams,
    spec: SweepSpec,
    cal: PowerCalibration,
    r: DecoherenceRates,
    model: FourLevelModel | None = None,
    diagram: LevelDiagram | None = None,
    baseline: ScanCurve | None = None,
    on_cell=None,
) -> SweepGrid:
    """
    Right-well population over the bias x power grid.

    With a level diagram the model at each bias is re-read from the
    diabatic branches near that bias (splittings from the extracted
    model); an explicit model alone is moved along its diabatic lines.
    Undriven cells take the no-MW baseline. A cell whose model or solver
    fails is recorded as NaN with provenance 'failed' and its cause; it is
    never interpolated.

    Args:
        p: Circuit parameters
        spec: Sweep definition
        cal: Power calibration
        r: Decoherence rates
        model: Four-level model to use instead of extracting one
        diagram: Precomputed level diagram on the sweep bias axis
        baseline: Precomputed no-MW scan on the sweep bias axis
        on_cell: Optional callback(index, total, bias, power, population, provenance),
            called in cell order

    Returns:
        SweepGrid
    """
    biases = spec.bias_axis()
    powers = spec.power_axis()
    amplitudes = [power_to_amplitude(pw, cal) for pw in powers]

    model_error = None
    if model is None:
        if diagram is None:
            diagram = level_diagram(
                p, (spec.bias_min, spec.bias_max), spec.n_bias, default_grid(p), max_workers=thread_count()
            )
        try:
            model = extract_four_level_model(diagram)
        except SquidSimError as e:
            model_error = f"{e.__class__.__name__}: {e}"
            logger.warning(f"Model extraction failed; driven cells will be marked failed ({model_error})")
    if baseline is None:
        baseline = bias_scan_no_mw(p, spec, diagram=diagram, model=model if diagram is None else None)

    cell_models = None
    if model is not None:
        cell_models = [model.at_bias(float(b)) for b in biases]
        if diagram is not None:
            try:
                cell_models = local_models(diagram, model, biases)
            except SquidSimError as e:
                logger.warning(f"Per-bias fits failed, moving the model along its lines instead: {e}")

    cells = [(i, j) for i in range(len(biases)) for j in range(len(powers))]

    def evaluate(cell: tuple[int, int]) -> tuple[float, str, str | None]:
        i, j = cell
        if amplitudes[j] == 0:
            return float(baseline.populations[i]), PROVENANCE_STATIC, None
        if model_error is not None:
            return math.nan, PROVENANCE_FAILED, model_error
        d = DriveParams(f=spec.f, phi_rf=amplitudes[j], duration=spec.duration)
        try:
            value, provenance = cell_population(cell_models[i], d, r, spec.solver, spec.n_max)
        except SquidSimError as e:
            return math.nan, PROVENANCE_FAILED, f"{e.__class__.__name__}: {e}"
        return value, provenance, None

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(evaluate, cells))

    populations = np.empty((len(biases), len(powers)))
    provenance = np.empty((len(biases), len(powers)), dtype=object)
    failures = {}
    for index, ((i, j), (value, source, error)) in enumerate(zip(cells, results)):
        populations[i, j] = value
        provenance[i, j] = source
        if error is not None:
            failures[(i, j)] = error
        logger.debug(f"Cell ({i}, {j}) bias={biases[i]:.5f} P={powers[j]:.2f} dBm: {value:.4f} [{source}]")
        if on_cell is not None:
            on_cell(index, len(cells), float(biases[i]), float(powers[j]), value, source)

    if failures:
        logger.warning(f"{len(failures)} of {len(cells)} sweep cells failed")
    logger.info(f"Sweep done: {len(biases)}x{len(powers)} cells with the {spec.solver.value} solver")
    return SweepGrid(
        biases=biases,
        powers=powers,
        populations=populations,
        provenance=provenance,
        failures=failures,
        seed=spec.seed,
    )


def add_shot_noise(grid: SweepGrid, shots: int, seed: int) -> SweepGrid:
    """
    Replace each cell by a binomial estimate from a finite number of trials.

    Every cell draws from its own generator keyed by (seed, cell index), so
    the result does not depend on evaluation order. NaN cells stay NaN.
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")

    noisy = np.array(grid.populations, dtype=float, copy=True)
    n_power = noisy.shape[1]
    for (i, j), value in np.ndenumerate(grid.populations):
        if np.isnan(value):
            continue
        rng = np.random.default_rng([seed, i * n_power + j])
        noisy[i, j] = rng.binomial(shots, min(max(value, 0.0), 1.0)) / shots

    return SweepGrid(
        biases=grid.biases,
        powers=grid.powers,
        populations=noisy,
        provenance=grid.provenance,
        failures=dict(grid.failures),
        seed=seed,
        shots=shots,
    )


def _is_local_extremum(column: np.ndarray, i: int, peak: bool) -> bool:
    value = column[i]
    for k in (i - 1, i + 1):
        if 0 <= k < len(column) and not np.isnan(column[k]):
            if peak and column[k] > value:
                return False
            if not peak and column[k] < value:
                return False
    return True


def detect_features(
    grid: SweepGrid,
    curve_no_mw: ScanCurve,
    diagram: LevelDiagram,
    f: float,
    n_max: int = 3,
) -> FeatureReport:
    """
    Peaks, dips and inversion cells of a sweep relative to its no-MW baseline.

    A cell is a peak (dip) when it lies more than FEATURE_THRESHOLD above
    (below) the baseline at its bias and is a local maximum (minimum) along
    bias at fixed power. Features get the photon number of the nearest
    predicted resonance within RESONANCE_MATCH_STEPS bias steps. Inversion
    cells have more than half the population in the well opposite the
    static ground state.
    """
    if len(curve_no_mw.biases) != len(grid.biases) or not np.allclose(curve_no_mw.biases, grid.biases):
        raise ValueError("Baseline and grid must share the bias axis")

    resonances = predict_resonances(diagram, f, n_max)
    step = float(np.median(np.diff(grid.biases))) if len(grid.biases) > 1 else 0.0
    radius = RESONANCE_MATCH_STEPS * step

    def photon_number(bias: float) -> int | None:
        near = [(abs(res.bias - bias), res.n) for res in resonances if abs(res.bias - bias) <= radius]
        return min(near)[1] if near else None

    report = FeatureReport()
    for j, power in enumerate(grid.powers):
        column = grid.populations[:, j]
        for i, bias in enumerate(grid.biases):
            value = column[i]
            if np.isnan(value):
                continue
            base = curve_no_mw.populations[i]
            if value - base > FEATURE_THRESHOLD and _is_local_extremum(column, i, peak=True):
                report.peaks.append(Feature("peak", float(bias), float(power), float(value), photon_number(bias)))
            elif base - value > FEATURE_THRESHOLD and _is_local_extremum(column, i, peak=False):
                report.dips.append(Feature("dip", float(bias), float(power), float(value), photon_number(bias)))

            if base < 0.5 and value > 0.5:
                report.inversions.append(InversionEntry(float(bias), float(power), float(value), Side.LEFT))
            elif base > 0.5 and 1.0 - value > 0.5:
                report.inversions.append(InversionEntry(float(bias), float(power), float(1.0 - value), Side.RIGHT))

    logger.info(
        f"Features: {len(report.peaks)} peaks, {len(report.dips)} dips, "
        f"{len(report.inversions)} inversion cells"
    )
    return report


def resonance_power_profile(grid: SweepGrid, bias: float) -> tuple[np.ndarray, np.ndarray]:
    """Population versus power at the grid bias nearest to bias."""
    i = int(np.argmin(np.abs(grid.biases - bias)))
    return grid.powers.copy(), grid.populations[i, :].copy()


def interior_maximum(values: np.ndarray) -> int | None:
    """Index of the first interior local maximum that is followed by a decrease."""
    for i in range(1, len(values) - 1):
        if values[i] > values[i - 1] and values[i] >= values[i + 1] and np.any(values[i + 1:] < values[i]):
            return i
    return None
