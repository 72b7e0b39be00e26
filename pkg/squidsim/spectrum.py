"""
Flux eigenproblem and level diagrams for squidsim.

Solves the stationary Schroedinger problem of a particle of mass C in the
loop potential, labels eigenstates by well, builds level diagrams versus
bias and reduces them to the diabatic four-level model.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from squidsim.circuit import find_wells, potential
from squidsim.errors import (
    BranchAmbiguity,
    ConvergenceFailure,
    GridTooCoarse,
    LevelSolveError,
    NoCrossingFound,
    NoDoubleWell,
    SquidSimError,
)
from squidsim.storage.models import (
    CONSTANTS,
    IDX_0L,
    IDX_0R,
    IDX_1L,
    IDX_1R,
    STATES,
    CircuitParams,
    EigenGridSpec,
    EnergySpectrum,
    FourLevelModel,
    LevelDiagram,
    Resonance,
    Side,
    WellGeometry,
    WellLabel,
)

logger = logging.getLogger(__name__)

# Largest level shift allowed when the grid spacing is halved (GHz)
CONVERGENCE_TOL = 1e-3

# Default grid window around the bias (Phi0)
WINDOW_HALFWIDTH = 0.35

# Left-weight thresholds for well labels
LEFT_THRESHOLD = 0.75
RIGHT_THRESHOLD = 0.25

# Stricter localization used for diabatic slope fits
FIT_WEIGHT = 0.9
CROSSING_EXCLUSION_STEPS = 3
GAP_SEARCH_STEPS = 5
# Half-width, in bias steps, of the window for per-bias line fits
LOCAL_FIT_STEPS = 8

# Crossing pairs of the four-level model, by basis index
PAIR_00 = (IDX_0R, IDX_0L)
PAIRS_01 = ((IDX_1R, IDX_0L), (IDX_1L, IDX_0R))
PAIR_11 = (IDX_1R, IDX_1L)


def kinetic_coefficient(p: CircuitParams) -> float:
    """hbar^2 / (2 C Phi0^2) as E/h in GHz times Phi0^2."""
    t = CONSTANTS.hbar ** 2 / (2 * p.C * CONSTANTS.Phi0 ** 2)
    return t / CONSTANTS.h * 1e-9


def default_grid(p: CircuitParams, n_points: int = 4001, n_levels: int = 8) -> EigenGridSpec:
    """Grid window of +/- 0.35 Phi0 around the qubit bias."""
    return EigenGridSpec(p.phi_q - WINDOW_HALFWIDTH, p.phi_q + WINDOW_HALFWIDTH, n_points, n_levels)


def _solve(p: CircuitParams, g: EigenGridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest eigenpairs of the finite-difference Hamiltonian with hard walls."""
    grid = g.grid()
    dphi = grid[1] - grid[0]
    t = kinetic_coefficient(p) / dphi ** 2

    diagonal = 2 * t + potential(p, grid)
    off_diagonal = np.full(g.n_points - 1, -t)
    try:
        energies, vectors = eigh_tridiagonal(
            diagonal, off_diagonal, select="i", select_range=(0, g.n_levels - 1)
        )
    except (LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"Eigensolver failed at phi_q={p.phi_q:.6f}: {e}", phi_q=p.phi_q) from e

    vectors = vectors / np.sqrt(np.sum(vectors ** 2, axis=0) * dphi)
    # Fix the arbitrary sign: largest lobe positive
    peaks = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(vectors.shape[1])]
    vectors = vectors * np.where(peaks < 0, -1.0, 1.0)
    return grid, energies, vectors.T


def solve_eigen(p: CircuitParams, g: EigenGridSpec, check_convergence: bool = True) -> EnergySpectrum:
    """
    Lowest n_levels eigenstates of -(hbar^2/2C) d^2/dPhi^2 + U(Phi).

    Args:
        p: Circuit parameters
        g: Grid specification
        check_convergence: Re-solve on a grid with half the spacing and
            compare every requested level

    Returns:
        EnergySpectrum with energies in GHz and normalized wavefunctions

    Raises:
        GridTooCoarse: If halving the spacing moves a level by more than 1e-3 GHz
        ConvergenceFailure: If the eigensolver fails
    """
    grid, energies, wavefunctions = _solve(p, g)

    if check_convergence:
        _, fine_energies, _ = _solve(p, g.refined())
        shift = float(np.max(np.abs(fine_energies - energies)))
        if shift > CONVERGENCE_TOL:
            raise GridTooCoarse(
                f"Halving the grid spacing moved a level by {shift:.3e} GHz "
                f"(n_points={g.n_points}, phi_q={p.phi_q:.6f})",
                shift=shift,
                n_points=g.n_points,
            )

    return EnergySpectrum(energies=energies, bias=p.phi_q, grid=grid, wavefunctions=wavefunctions)


def left_weights(s: EnergySpectrum, barrier_top: float) -> np.ndarray:
    """Probability of each level left of the barrier."""
    dphi = s.grid[1] - s.grid[0]
    mask = s.grid < barrier_top
    return np.sum(s.wavefunctions[:, mask] ** 2, axis=1) * dphi


def _labels_from_weights(weights: np.ndarray) -> list[WellLabel]:
    counters = {Side.LEFT: 0, Side.RIGHT: 0, Side.DELOCALIZED: 0}
    labels = []
    for w in weights:
        if w > LEFT_THRESHOLD:
            side = Side.LEFT
        elif w < RIGHT_THRESHOLD:
            side = Side.RIGHT
        else:
            side = Side.DELOCALIZED
        labels.append(WellLabel(side, counters[side]))
        counters[side] += 1
    return labels


def classify_states(s: EnergySpectrum, w: WellGeometry | None) -> EnergySpectrum:
    """
    Label every level Left, Right or Delocalized by its weight left of the barrier.

    Spectra that already carry left_weights (synthetic ones) are labeled
    from those and need no well geometry.
    """
    if s.wavefunctions is not None and w is not None:
        weights = left_weights(s, w.barrier_top)
    elif s.left_weights is not None:
        weights = np.asarray(s.left_weights)
    else:
        raise ValueError("Spectrum has neither wavefunctions with a well geometry nor left weights")

    return EnergySpectrum(
        energies=s.energies,
        bias=s.bias,
        grid=s.grid,
        wavefunctions=s.wavefunctions,
        labels=_labels_from_weights(weights),
        left_weights=weights,
    )


def _diagram_point(
    p: CircuitParams, g: EigenGridSpec, check_convergence: bool, keep_wavefunctions: bool
) -> EnergySpectrum:
    spectrum = solve_eigen(p, g, check_convergence=check_convergence)
    try:
        spectrum = classify_states(spectrum, find_wells(p))
    except NoDoubleWell:
        logger.debug(f"No double well at phi_q={p.phi_q:.6f}; levels left unlabeled")
    if not keep_wavefunctions:
        spectrum.wavefunctions = None
        spectrum.grid = None
    logger.debug(f"Solved {spectrum.n_levels} levels at phi_q={p.phi_q:.6f}")
    return spectrum


def level_diagram(
    p: CircuitParams,
    bias_range: tuple[float, float],
    n_bias: int,
    g: EigenGridSpec,
    check_convergence: bool = True,
    keep_wavefunctions: bool = False,
    max_workers: int | None = None,
    on_solved=None,
) -> LevelDiagram:
    """
    Spectrum at each bias of an evenly spaced range.

    The grid window g is given for the circuit's own bias p.phi_q and is
    translated along with each bias.

    Args:
        p: Circuit parameters (phi_q is replaced by each bias)
        bias_range: (first, last) bias in Phi0
        n_bias: Number of biases; 1 collapses the range to its first value
        g: Grid specification at p.phi_q
        check_convergence: Forwarded to solve_eigen
        keep_wavefunctions: Keep per-level wavefunctions in the diagram
        max_workers: Thread pool size for per-bias solves
        on_solved: Optional callback(bias, n_levels) after each solve

    Returns:
        LevelDiagram in bias order

    Raises:
        LevelSolveError: Wrapping the first failing solve, with its bias
    """
    if n_bias < 1:
        raise ValueError(f"n_bias must be at least 1, got {n_bias}")
    biases = np.linspace(bias_range[0], bias_range[1], n_bias) if n_bias > 1 else np.array([bias_range[0]])

    def solve_at(bias: float) -> EnergySpectrum:
        shift = bias - p.phi_q
        grid = EigenGridSpec(g.phi_min + shift, g.phi_max + shift, g.n_points, g.n_levels)
        try:
            spectrum = _diagram_point(p.with_bias(float(bias)), grid, check_convergence, keep_wavefunctions)
        except SquidSimError as e:
            raise LevelSolveError(f"Level solve failed at bias {bias:.6f}: {e}", bias=float(bias), cause=e) from e
        if on_solved is not None:
            on_solved(float(bias), spectrum.n_levels)
        return spectrum

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        spectra = list(pool.map(solve_at, biases))

    logger.info(
        f"Level diagram: {n_bias} biases in [{biases[0]:.4f}, {biases[-1]:.4f}], "
        f"{g.n_levels} levels each"
    )
    return LevelDiagram(biases=biases, spectra=spectra)


def synthetic_diagram(model: FourLevelModel, biases) -> LevelDiagram:
    """
    Level diagram generated by diagonalizing a known four-level model.

    Left weights are the populations of |1L> and |0L> in each eigenvector.
    """
    spectra = []
    for bias in np.asarray(biases, dtype=float):
        h = model.at_bias(float(bias)).static_hamiltonian()
        energies, vectors = np.linalg.eigh(h)
        weights = vectors[IDX_1L, :] ** 2 + vectors[IDX_0L, :] ** 2
        spectrum = EnergySpectrum(energies=energies, bias=float(bias), left_weights=weights)
        spectra.append(classify_states(spectrum, None))
    return LevelDiagram(biases=np.asarray(biases, dtype=float), spectra=spectra)


def identify_branches(s: EnergySpectrum, threshold: float = FIT_WEIGHT) -> dict[int, float] | None:
    """
    Energies of the cleanly localized 1R, 1L, 0R, 0L at one bias, keyed by basis index.

    Levels are counted upward per well until the first mixed level; states
    above it are left out, so the dict may hold fewer than four entries.
    Returns None for a spectrum without well weights.
    """
    if s.left_weights is None:
        return None
    w = np.asarray(s.left_weights)
    names = {Side.LEFT: (IDX_0L, IDX_1L), Side.RIGHT: (IDX_0R, IDX_1R)}
    counts = {Side.LEFT: 0, Side.RIGHT: 0}
    found = {}
    for j in np.argsort(s.energies):
        if w[j] > threshold:
            side = Side.LEFT
        elif w[j] < 1 - threshold:
            side = Side.RIGHT
        else:
            break
        if counts[side] < 2:
            found[names[side][counts[side]]] = float(s.energies[j])
        counts[side] += 1
    return found


def _line_crossing(lines: dict[int, tuple[float, float]], a: int, b: int) -> float | None:
    """Bias where two fitted diabatic lines (slope, intercept) meet."""
    ka, ca = lines[a]
    kb, cb = lines[b]
    if abs(ka - kb) < 1e-12:
        return None
    return (cb - ca) / (ka - kb)


def _fit_lines(
    biases: np.ndarray,
    branches: list[dict[int, float] | None],
    exclude: dict[int, list[float]],
    exclusion_width: float,
) -> dict[int, tuple[float, float]]:
    lines = {}
    for x in range(4):
        pts = [
            (b, br[x]) for b, br in zip(biases, branches)
            if br is not None and x in br and all(abs(b - c) > exclusion_width for c in exclude.get(x, []))
        ]
        if len(pts) < 2:
            raise BranchAmbiguity(
                f"Only {len(pts)} well-localized points for state {STATES[x]}; cannot fit its diabatic line",
                state=STATES[x],
            )
        xs, ys = np.array(pts).T
        slope, intercept = np.polyfit(xs, ys, 1)
        lines[x] = (float(slope), float(intercept))
    return lines


@dataclass
class _DiabaticFits:
    branches: list[dict[int, float] | None]
    lines: dict[int, tuple[float, float]]
    crossings: dict[int, list[float]]
    exclusion_width: float


def _diabatic_fits(d: LevelDiagram) -> _DiabaticFits:
    """Diabatic lines fitted to clean branch points away from crossings."""
    biases = d.biases
    step = float(np.median(np.diff(biases)))
    branches = [identify_branches(s) for s in d.spectra]

    # First pass over every clean point, second pass away from crossings
    lines = _fit_lines(biases, branches, {}, 0.0)
    crossings: dict[int, list[float]] = {x: [] for x in range(4)}
    for a, b in (PAIR_00, PAIR_11) + PAIRS_01:
        b_star = _line_crossing(lines, a, b)
        if b_star is not None:
            crossings[a].append(b_star)
            crossings[b].append(b_star)
    width = CROSSING_EXCLUSION_STEPS * step
    return _DiabaticFits(branches, _fit_lines(biases, branches, crossings, width), crossings, width)


def _crossing_half_gap(
    d: LevelDiagram, energies: np.ndarray, lines: dict[int, tuple[float, float]], a: int, b: int
) -> float:
    """Half the minimal adiabatic gap at the avoided crossing of states a and b."""
    name = f"{STATES[a]}/{STATES[b]}"
    b_star = _line_crossing(lines, a, b)
    if b_star is None or not d.biases[0] <= b_star <= d.biases[-1]:
        raise NoCrossingFound(f"Diabatic lines {name} do not cross inside the diagram", pair=name)

    n = len(d.biases)
    i_star = int(np.argmin(np.abs(d.biases - b_star)))
    e_star = lines[a][0] * b_star + lines[a][1]

    # The two adiabatic levels nearest the crossing energy
    row = energies[i_star]
    nearest = int(np.argmin(np.abs(row - e_star)))
    if nearest == 0:
        lower = 0
    elif nearest == len(row) - 1:
        lower = nearest - 1
    else:
        lower = nearest if abs(row[nearest + 1] - e_star) < abs(row[nearest - 1] - e_star) else nearest - 1

    lo, hi = max(0, i_star - GAP_SEARCH_STEPS), min(n, i_star + GAP_SEARCH_STEPS + 1)
    gaps = energies[lo:hi, lower + 1] - energies[lo:hi, lower]
    m = int(np.argmin(gaps)) + lo
    if m in (lo, hi - 1) or m in (0, n - 1):
        raise NoCrossingFound(f"Gap minimum of {name} lies on the edge of the searched range", pair=name)

    # The squared gap of an isolated crossing is exactly quadratic in bias
    xs = d.biases[m - 1:m + 2]
    g2 = (energies[m - 1:m + 2, lower + 1] - energies[m - 1:m + 2, lower]) ** 2
    qa, qb, qc = np.polyfit(xs - xs[1], g2, 2)
    g2_min = qc - qb ** 2 / (4 * qa) if qa > 0 else g2[1]
    g2_min = min(max(g2_min, 0.0), g2[1])
    delta = 0.5 * math.sqrt(g2_min)
    logger.debug(f"Crossing {name} at bias {b_star:.6f}: half gap {delta:.6e} GHz")
    return delta


def extract_four_level_model(d: LevelDiagram, bias_ref: float | None = None) -> FourLevelModel:
    """
    Reduce a level diagram to the diabatic four-level model.

    Slopes come from linear fits to well-localized branch segments away
    from crossings; each splitting is half the minimal adiabatic gap at
    its avoided crossing; diabatic energies are read off the fitted lines
    at bias_ref.

    Args:
        d: Level diagram with labeled spectra and at least four levels
        bias_ref: Reference bias; defaults to 0.5 when inside the diagram,
            else its midpoint

    Returns:
        FourLevelModel

    Raises:
        NoCrossingFound: If a splitting has no interior gap minimum
        BranchAmbiguity: If a diabatic branch cannot be fitted
    """
    if d.spectra[0].n_levels < 4:
        raise BranchAmbiguity(f"Need at least 4 levels, diagram has {d.spectra[0].n_levels}")
    if len(d.biases) < 3:
        raise BranchAmbiguity("Need at least 3 biases to locate crossings")

    biases = d.biases
    energies = d.energy_matrix()
    lines = _diabatic_fits(d).lines

    delta00 = _crossing_half_gap(d, energies, lines, *PAIR_00)
    delta11 = _crossing_half_gap(d, energies, lines, *PAIR_11)
    found_01 = []
    last_error: NoCrossingFound | None = None
    for a, b in PAIRS_01:
        try:
            found_01.append(_crossing_half_gap(d, energies, lines, a, b))
        except NoCrossingFound as e:
            last_error = e
    if not found_01:
        raise last_error
    delta01 = float(np.mean(found_01))

    if bias_ref is None:
        bias_ref = 0.5 if biases[0] <= 0.5 <= biases[-1] else float(0.5 * (biases[0] + biases[-1]))
    e0 = tuple(lines[x][0] * bias_ref + lines[x][1] for x in range(4))
    k = tuple(lines[x][0] for x in range(4))
    model = FourLevelModel(e0=e0, k=k, delta00=delta00, delta01=delta01, delta11=delta11, bias_ref=bias_ref)

    logger.info(
        f"Four-level model: delta00={delta00:.4e}, delta01={delta01:.4e}, "
        f"delta11={delta11:.4e} GHz; slopes={[round(v, 2) for v in k]} GHz/Phi0"
    )
    if not model.in_tunneling_regime:
        logger.warning(
            f"delta00={delta00:.3e} GHz is not below delta01={delta01:.3e} GHz; "
            f"the splittings may be below numerical resolution"
        )
    return model


def local_models(d: LevelDiagram, base: FourLevelModel, biases) -> list[FourLevelModel]:
    """
    Four-level model at each bias from the diabatic branches near it.

    Each branch is fitted with a line over the clean points within
    LOCAL_FIT_STEPS grid steps, away from crossings, and read off at the
    bias; a branch with fewer than three such points keeps its line from
    the whole diagram. Splittings come from base.

    Raises:
        BranchAmbiguity: If the diagram is too short or a branch cannot be fitted
    """
    if len(d.biases) < 3:
        raise BranchAmbiguity("Need at least 3 biases for per-bias fits")
    fits = _diabatic_fits(d)
    step = float(np.median(np.diff(d.biases)))
    window = LOCAL_FIT_STEPS * step

    models = []
    for bias in np.asarray(biases, dtype=float):
        e0, k = [], []
        for x in range(4):
            pts = [
                (b, br[x]) for b, br in zip(d.biases, fits.branches)
                if br is not None and x in br and abs(b - bias) <= window
                and all(abs(b - c) > fits.exclusion_width for c in fits.crossings[x])
            ]
            if len(pts) >= 3:
                xs, ys = np.array(pts).T
                slope, intercept = np.polyfit(xs, ys, 1)
            else:
                slope, intercept = fits.lines[x]
            e0.append(float(slope * bias + intercept))
            k.append(float(slope))
        models.append(FourLevelModel(
            e0=tuple(e0), k=tuple(k), delta00=base.delta00, delta01=base.delta01,
            delta11=base.delta11, bias_ref=float(bias),
        ))
    return models


def _pair_spacings(d: LevelDiagram, a: int, b: int) -> list[float | None]:
    """|E_a - E_b| at each bias; None where either state is not cleanly localized."""
    spacings = []
    for s in d.spectra:
        br = identify_branches(s, threshold=LEFT_THRESHOLD)
        if br is None or a not in br or b not in br:
            spacings.append(None)
        else:
            spacings.append(abs(br[a] - br[b]))
    return spacings


def predict_resonances(d: LevelDiagram, f_drive: float, n_max: int) -> list[Resonance]:
    """
    Biases where an interwell level spacing equals n * f_drive, n = 1..n_max.

    Found by a sign-change scan of (spacing - n f) between neighbouring
    biases and linear interpolation; a bias where the mismatch is exactly
    zero counts as a hit itself.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}")

    interwell = [(l, r) for l in (IDX_0L, IDX_1L) for r in (IDX_0R, IDX_1R)]
    hits = []
    for a, b in interwell:
        spacings = _pair_spacings(d, a, b)
        for n in range(1, n_max + 1):
            ys = [None if s is None else s - n * f_drive for s in spacings]
            for i, y0 in enumerate(ys):
                if y0 is None:
                    continue
                y1 = ys[i + 1] if i + 1 < len(ys) else None
                if y0 == 0:
                    bias = float(d.biases[i])
                elif y1 is not None and y0 * y1 < 0:
                    frac = y0 / (y0 - y1)
                    bias = float(d.biases[i] + frac * (d.biases[i + 1] - d.biases[i]))
                else:
                    continue
                hits.append(Resonance(bias=bias, n=n, pair=(STATES[a], STATES[b])))

    hits.sort(key=lambda r: (r.bias, r.n, r.pair))
    logger.debug(f"Found {len(hits)} resonances up to n={n_max} at f={f_drive} GHz")
    return hits


def spacing_at(d: LevelDiagram, bias: float, pair: tuple[str, str]) -> float | None:
    """Interwell spacing of a named pair at a bias, linearly interpolated."""
    a, b = STATES.index(pair[0]), STATES.index(pair[1])
    points = [(x, s) for x, s in zip(d.biases, _pair_spacings(d, a, b)) if s is not None]
    if len(points) < 2 or not points[0][0] <= bias <= points[-1][0]:
        return None
    xs, values = zip(*points)
    return float(np.interp(bias, xs, values))
