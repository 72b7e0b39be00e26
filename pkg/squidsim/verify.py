"""
Property suites run by the verify command.

Each suite compares a module against an independent oracle: closed forms
(Landau-Zener, harmonic spacing, Rabi oscillation), independent
integrators, conservation and convergence laws of the master equation,
recovery of a known four-level model from its own level diagram, and the
sweep-level properties of the reference model (resonance placement,
inversion, non-monotonic power dependence, rate versus full dynamics).
"""

import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from squidsim.circuit import lc_frequency
from squidsim.dynamics import (
    evolve,
    ground_state,
    hamiltonian_at,
    hamiltonian_scale,
    linear_sweep_survival,
    simulate_protocol,
    steps_per_period,
)
from squidsim.lz import (
    bessel_argument,
    bessel_modulation_maxima,
    lz_probability,
    numeric_lz_survival,
    rate_right_well_population,
    rate_steady_state,
)
from squidsim.spectrum import (
    default_grid,
    extract_four_level_model,
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
    CheckResult,
    CircuitParams,
    CrossingSpec,
    DecoherenceRates,
    DriveParams,
    FourLevelModel,
    PowerCalibration,
    Solver,
    SweepSpec,
)
from squidsim.sweep import (
    bias_scan_no_mw,
    detect_features,
    interior_maximum,
    power_to_amplitude,
    resonance_power_profile,
    run_sweep,
)

logger = logging.getLogger(__name__)

LZ_GAPS = (0.01, 0.05, 0.1, 0.3)  # angular half-gaps (rad/ns)
LZ_RATES = (0.5, 1.0, 2.0, 5.0)  # rad/ns^2
LZ_TOL = 1e-3

HARMONIC_LEVELS = 5
HARMONIC_TOL = 0.01

TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-7

ROUND_TRIP_TOL = 0.02

# Known model with crossings at 0.5 (00, 11), 0.50707 (1R/0L) and 0.49293 (1L/0R)
REFERENCE_MODEL = FourLevelModel(
    e0=(14.0, 14.0, 0.0, 0.0),
    k=(-980.0, 980.0, -1000.0, 1000.0),
    delta00=0.05,
    delta01=0.3,
    delta11=0.6,
    bias_ref=0.5,
)
REFERENCE_BIASES = np.linspace(0.47, 0.53, 241)

REFERENCE_RATES = DecoherenceRates()
REFERENCE_DRIVE_F = 15.9
REFERENCE_CALIBRATION = PowerCalibration()
DEVICE = CircuitParams.from_beta_l(1.39, L=1080e-12, C=80e-12)

BRUTE_FORCE_TOL = 1e-5
BRUTE_FORCE_PERIODS = 10
STEP_HALVING_TOL = 1e-4
FIXED_POINT_GAMMA_INTER = 0.5

AGREEMENT_TOL = 0.15
AGREEMENT_POINTS = 20
AGREEMENT_SEED = 2024

PROTOCOL_DURATION = 200.0

INVERSION_MIN = 0.6
PROFILE_POWERS = (-20.0, 15.0, 18)


def check_lz_oracle() -> list[CheckResult]:
    results = []
    for gap in LZ_GAPS:
        for rate in LZ_RATES:
            c = CrossingSpec(delta=gap / (2 * math.pi), sweep_rate=rate)
            analytic = lz_probability(c)
            numeric = numeric_lz_survival(c)
            err = abs(analytic - numeric)
            results.append(CheckResult(
                suite="lz_oracle",
                name=f"gap={gap}, v={rate}",
                passed=err < LZ_TOL,
                detail=f"formula={analytic:.6f} numeric={numeric:.6f} |diff|={err:.2e}",
            ))
    return results


def check_harmonic_limit(L: float = 1080e-12, C: float = 80e-12) -> list[CheckResult]:
    p = CircuitParams(L=L, C=C, Ic=0.0)
    expected = lc_frequency(p)
    spectrum = solve_eigen(p, default_grid(p, n_levels=HARMONIC_LEVELS + 1))
    spacings = np.diff(spectrum.energies)[:HARMONIC_LEVELS]
    results = []
    for i, s in enumerate(spacings):
        rel = abs(s - expected) / expected
        results.append(CheckResult(
            suite="harmonic_limit",
            name=f"E{i + 1}-E{i}",
            passed=rel < HARMONIC_TOL,
            detail=f"{s:.6f} GHz vs {expected:.6f} GHz ({rel:.2e} rel)",
        ))
    return results


def check_trace_preservation(
    model: FourLevelModel = REFERENCE_MODEL,
    rates: DecoherenceRates | None = None,
    f: float = 15.9,
    phi_rf: float = 1e-3,
    duration: float = 200.0,
    on_trajectory=None,
) -> list[CheckResult]:
    """Conservation laws over one long driven trajectory; on_trajectory receives it."""
    rates = rates or DecoherenceRates()
    d = DriveParams(f=f, phi_rf=phi_rf, duration=duration)
    trajectory = evolve(model, d, rates, ground_state(model), sample_every=0.5)
    if on_trajectory is not None:
        on_trajectory(trajectory)

    trace_err = float(np.max(np.abs(trajectory.populations.sum(axis=1) - 1.0)))
    herm_err = float(np.max(trajectory.asymmetry))
    min_eig = float(np.min(trajectory.min_eigenvalues))
    return [
        CheckResult("trace_preservation", "trace", trace_err < TRACE_TOL, f"max |tr rho - 1| = {trace_err:.2e}"),
        CheckResult("trace_preservation", "hermiticity", herm_err < HERMITICITY_TOL, f"max |rho - rho^dag| = {herm_err:.2e}"),
        CheckResult("trace_preservation", "positivity", min_eig > EIGENVALUE_FLOOR, f"min eigenvalue = {min_eig:.2e}"),
    ]


def check_round_trip(model: FourLevelModel = REFERENCE_MODEL, biases=REFERENCE_BIASES) -> list[CheckResult]:
    recovered = extract_four_level_model(synthetic_diagram(model, biases), bias_ref=model.bias_ref)
    pairs = [
        ("delta00", model.delta00, recovered.delta00),
        ("delta01", model.delta01, recovered.delta01),
        ("delta11", model.delta11, recovered.delta11),
    ]
    pairs += [(f"k[{i}]", model.k[i], recovered.k[i]) for i in range(4)]
    results = []
    for name, want, got in pairs:
        rel = abs(got - want) / abs(want)
        results.append(CheckResult("round_trip", name, rel < ROUND_TRIP_TOL, f"{got:.6g} vs {want:.6g} ({rel:.2e} rel)"))
    return results


def check_lz_master_equation() -> list[CheckResult]:
    """The same Landau-Zener grid, swept through the master-equation integrator."""
    results = []
    for gap in LZ_GAPS:
        for rate in LZ_RATES:
            c = CrossingSpec(delta=gap / (2 * math.pi), sweep_rate=rate)
            analytic = lz_probability(c)
            integrated = linear_sweep_survival(c)
            err = abs(analytic - integrated)
            results.append(CheckResult(
                "lz_master_equation",
                f"gap={gap}, v={rate}",
                err < LZ_TOL,
                f"formula={analytic:.6f} integrator={integrated:.6f} |diff|={err:.2e}",
            ))
    return results


def check_rabi(delta00: float = 0.05, duration: float = 10.0) -> list[CheckResult]:
    model = FourLevelModel(
        e0=(20.0, 20.0, 0.0, 0.0), k=REFERENCE_MODEL.k, delta00=delta00, delta01=0.0, delta11=0.0
    )
    rates = DecoherenceRates(gamma1=0.0, gamma_inter=0.0, gamma2=0.0)
    d = DriveParams(f=REFERENCE_DRIVE_F, phi_rf=0.0, duration=duration)
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[IDX_0R, IDX_0R] = 1.0
    trajectory = evolve(model, d, rates, rho0, sample_every=0.25)
    expected = np.sin(2 * math.pi * delta00 * trajectory.times) ** 2
    err = float(np.max(np.abs(trajectory.populations[:, IDX_0L] - expected)))
    return [CheckResult("rabi", "P_0L(t)", err < 1e-6, f"max |P - sin^2(2 pi delta t)| = {err:.2e}")]


def check_brute_force(
    model: FourLevelModel = REFERENCE_MODEL,
    points=((0.4985, 0.01), (0.49, 0.0)),
) -> list[CheckResult]:
    """Zero-rate evolution against an adaptive state-vector Schroedinger integration."""
    rates = DecoherenceRates(gamma1=0.0, gamma_inter=0.0, gamma2=0.0)
    psi0 = np.array([0.5, 0.5j, 0.5, -0.5], dtype=complex)
    results = []
    for bias, phi_rf in points:
        m = model.at_bias(bias)
        d = DriveParams(f=REFERENCE_DRIVE_F, phi_rf=phi_rf, duration=BRUTE_FORCE_PERIODS / REFERENCE_DRIVE_F)
        sol = solve_ivp(
            lambda t, psi: -1j * (hamiltonian_at(m, d, t) @ psi),
            (0.0, d.duration),
            psi0,
            method="DOP853",
            rtol=1e-12,
            atol=1e-12,
        )
        psi = sol.y[:, -1]
        trajectory = evolve(m, d, rates, np.outer(psi0, psi0.conj()), sample_every=d.period)
        err = float(np.max(np.abs(trajectory.final_rho - np.outer(psi, psi.conj()))))
        results.append(CheckResult(
            "brute_force", f"bias={bias}, phi_rf={phi_rf}", err < BRUTE_FORCE_TOL, f"max element error {err:.2e}"
        ))
    return results


def check_step_halving(model: FourLevelModel = REFERENCE_MODEL, biases=(0.499, 0.501)) -> list[CheckResult]:
    results = []
    d = DriveParams(f=REFERENCE_DRIVE_F, phi_rf=REFERENCE_CALIBRATION.phi_rf_ref, duration=PROTOCOL_DURATION)
    for bias in biases:
        m = model.at_bias(bias)
        n = steps_per_period(d, REFERENCE_RATES, omega_max=hamiltonian_scale(m, d))
        coarse = simulate_protocol(m, d, REFERENCE_RATES)
        fine = simulate_protocol(m, d, REFERENCE_RATES, max_step=d.period / (2 * n))
        err = abs(coarse - fine)
        results.append(CheckResult(
            "step_halving", f"bias={bias}", err < STEP_HALVING_TOL,
            f"P={coarse:.6f} at {n} steps/period, {fine:.6f} at {2 * n} (|diff|={err:.2e})",
        ))
    return results


def check_fixed_point(model: FourLevelModel = REFERENCE_MODEL, bias: float = 0.49) -> list[CheckResult]:
    """Undriven relaxation from the fully mixed state over 3/gamma_inter."""
    rates = DecoherenceRates(gamma1=1.0, gamma_inter=FIXED_POINT_GAMMA_INTER, gamma2=2.0)
    m = model.at_bias(bias)
    d = DriveParams(f=REFERENCE_DRIVE_F, phi_rf=0.0, duration=3.0 / rates.gamma_inter)
    trajectory = evolve(m, d, rates, np.eye(4, dtype=complex) / 4, sample_every=d.duration)
    ground = IDX_0L if m.e0[IDX_0L] < m.e0[IDX_0R] else IDX_0R
    excited = 1.0 - float(np.real(trajectory.final_rho[ground, ground]))
    limit = math.exp(-3.0)
    return [CheckResult("fixed_point", f"bias={bias}", excited < limit, f"excited population {excited:.4f} (< {limit:.4f})")]


def check_solver_agreement(
    model: FourLevelModel = REFERENCE_MODEL, n_points: int = AGREEMENT_POINTS, seed: int = AGREEMENT_SEED
) -> list[CheckResult]:
    """Rate-equation steady state against the full protocol at random (bias, power) draws."""
    rng = np.random.default_rng(seed)
    biases = rng.uniform(0.48, 0.52, n_points)
    powers = rng.uniform(-40.0, -10.0, n_points)
    results = []
    for bias, power in zip(biases, powers):
        m = model.at_bias(float(bias))
        d = DriveParams(
            f=REFERENCE_DRIVE_F,
            phi_rf=power_to_amplitude(float(power), REFERENCE_CALIBRATION),
            duration=PROTOCOL_DURATION,
        )
        rate = rate_right_well_population(rate_steady_state(m, d, REFERENCE_RATES))
        full = simulate_protocol(m, d, REFERENCE_RATES)
        err = abs(rate - full)
        results.append(CheckResult(
            "solver_agreement", f"bias={bias:.5f}, P={power:.1f} dBm", err < AGREEMENT_TOL,
            f"rate={rate:.4f} full={full:.4f} |diff|={err:.3f}",
        ))
    return results


def one_photon_bias(model: FourLevelModel = REFERENCE_MODEL, f: float = REFERENCE_DRIVE_F) -> float:
    """Bias of the n = 1 0L -> 1R resonance nearest below the symmetry point."""
    hits = [
        r.bias for r in predict_resonances(synthetic_diagram(model, REFERENCE_BIASES), f, 1)
        if r.pair == ("0L", "1R") and r.bias < model.bias_ref
    ]
    return max(hits)


def check_resonance_placement(model: FourLevelModel = REFERENCE_MODEL) -> list[CheckResult]:
    """Every feature of a desk-scale rate sweep sits on a predicted resonance."""
    spec = SweepSpec(f=REFERENCE_DRIVE_F, solver=Solver.RATE)
    baseline = bias_scan_no_mw(DEVICE, spec, model=model)
    grid = run_sweep(DEVICE, spec, REFERENCE_CALIBRATION, REFERENCE_RATES, model=model, baseline=baseline)
    report = detect_features(grid, baseline, synthetic_diagram(model, spec.bias_axis()), spec.f, spec.n_max)

    features = report.peaks + report.dips
    stray = [f for f in features if f.n is None]
    orders = sorted({f.n for f in features if f.n is not None})
    return [
        CheckResult("resonance_placement", "features found", bool(features), f"{len(report.peaks)} peaks, {len(report.dips)} dips"),
        CheckResult(
            "resonance_placement", "assigned", not stray,
            f"{len(stray)} of {len(features)} features off every resonance; orders {orders}",
        ),
    ]


def check_inversion(model: FourLevelModel = REFERENCE_MODEL) -> list[CheckResult]:
    """Full dynamics at the rate solver's best cell around the n = 1 resonance."""
    center = one_photon_bias(model)
    spec = SweepSpec(
        bias_min=center - 1e-3, bias_max=center + 1e-3, n_bias=11,
        p_min=-30.0, p_max=-10.0, n_power=5, f=REFERENCE_DRIVE_F, solver=Solver.RATE,
    )
    baseline = bias_scan_no_mw(DEVICE, spec, model=model)
    grid = run_sweep(DEVICE, spec, REFERENCE_CALIBRATION, REFERENCE_RATES, model=model, baseline=baseline)

    # Static ground state is the left well here, so inversion means a high P(R)
    masked = np.where(baseline.populations[:, None] < 0.5, grid.populations, -np.inf)
    i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
    bias, power = float(grid.biases[i]), float(grid.powers[j])
    d = DriveParams(f=spec.f, phi_rf=power_to_amplitude(power, REFERENCE_CALIBRATION), duration=spec.duration)
    full = simulate_protocol(model.at_bias(bias), d, REFERENCE_RATES)
    return [CheckResult(
        "inversion", f"bias={bias:.5f}, P={power:.1f} dBm", full > INVERSION_MIN,
        f"rate={grid.populations[i, j]:.4f} full={full:.4f} (> {INVERSION_MIN})",
    )]


def check_power_dependence(model: FourLevelModel = REFERENCE_MODEL) -> list[CheckResult]:
    """Population versus power at the n = 1 resonance rises and falls again."""
    bias = one_photon_bias(model)
    p_min, p_max, n_power = PROFILE_POWERS
    spec = SweepSpec(
        bias_min=bias, bias_max=bias, n_bias=1,
        p_min=p_min, p_max=p_max, n_power=n_power, f=REFERENCE_DRIVE_F, solver=Solver.RATE,
    )
    grid = run_sweep(DEVICE, spec, REFERENCE_CALIBRATION, REFERENCE_RATES, model=model)
    powers, profile = resonance_power_profile(grid, bias)
    i = interior_maximum(profile)
    detail = "monotonic" if i is None else f"maximum {profile[i]:.4f} at {powers[i]:.1f} dBm, last {profile[-1]:.4f}"
    return [CheckResult("power_dependence", f"bias={bias:.5f}", i is not None, detail)]


def check_bessel_scaling(model: FourLevelModel = REFERENCE_MODEL, scale: float = 2.0) -> list[CheckResult]:
    """J_n maxima move with f/k; the Bessel argument is invariant under phi_rf, f -> c phi_rf, c f."""
    k = model.k[IDX_1R] - model.k[IDX_0L]
    f = REFERENCE_DRIVE_F
    base = bessel_modulation_maxima(1, k, f, 0.05)
    scaled = bessel_modulation_maxima(1, k, scale * f, scale * 0.05)
    spacing_ok = len(base) > 1 and len(base) == len(scaled) and bool(np.allclose(scaled, scale * base, rtol=1e-12))

    d = DriveParams(f=f, phi_rf=2e-3)
    d_scaled = DriveParams(f=scale * f, phi_rf=scale * 2e-3)
    pair = (IDX_1L, IDX_0R)
    x, x_scaled = bessel_argument(model, d, pair), bessel_argument(model, d_scaled, pair)
    return [
        CheckResult("bessel_scaling", "maxima", spacing_ok, f"{len(base)} maxima, first at {base[0]:.5f} Phi0"),
        CheckResult("bessel_scaling", "argument", math.isclose(x, x_scaled, rel_tol=1e-12), f"x={x:.6f} vs {x_scaled:.6f}"),
    ]


def check_resonance_consistency(model: FourLevelModel = REFERENCE_MODEL, n_max: int = 3) -> list[CheckResult]:
    """Interpolated spacing at every predicted resonance equals n f."""
    diagram = synthetic_diagram(model, REFERENCE_BIASES)
    resonances = predict_resonances(diagram, REFERENCE_DRIVE_F, n_max)
    errors = [abs(spacing_at(diagram, r.bias, r.pair) - r.n * REFERENCE_DRIVE_F) for r in resonances]
    worst = max(errors, default=0.0)
    return [CheckResult(
        "resonance_consistency", f"{len(resonances)} resonances", bool(resonances) and worst < 1e-6,
        f"max |spacing - n f| = {worst:.2e} GHz",
    )]


SUITES = {
    "lz_oracle": check_lz_oracle,
    "lz_master_equation": check_lz_master_equation,
    "harmonic_limit": check_harmonic_limit,
    "rabi": check_rabi,
    "brute_force": check_brute_force,
    "trace_preservation": check_trace_preservation,
    "step_halving": check_step_halving,
    "fixed_point": check_fixed_point,
    "round_trip": check_round_trip,
    "resonance_consistency": check_resonance_consistency,
    "bessel_scaling": check_bessel_scaling,
    "solver_agreement": check_solver_agreement,
    "resonance_placement": check_resonance_placement,
    "inversion": check_inversion,
    "power_dependence": check_power_dependence,
}


def run_all(suites: dict | None = None) -> list[CheckResult]:
    """Run every suite; a suite that raises counts as one failed check."""
    results = []
    for name, suite in (suites or SUITES).items():
        logger.info(f"Verifying {name}")
        try:
            results.extend(suite())
        except Exception as e:
            logger.error(f"Suite {name} raised: {e}")
            results.append(CheckResult(name, "suite", False, f"{e.__class__.__name__}: {e}"))
    return results


def format_table(results: list[CheckResult]) -> str:
    """Plain-text pass/fail table."""
    width_suite = max([len("suite")] + [len(r.suite) for r in results])
    width_name = max([len("check")] + [len(r.name) for r in results])
    lines = [f"{'suite':<{width_suite}}  {'check':<{width_name}}  result  detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.suite:<{width_suite}}  {r.name:<{width_name}}  {status:<6}  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} checks passed")
    return "\n".join(lines)
