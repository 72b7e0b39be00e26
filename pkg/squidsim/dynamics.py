"""
Driven four-level master-equation dynamics for squidsim.

Integrates rho' = -i[H(t), rho] + Gamma[rho] in the lab frame with a
fixed-step classical Runge-Kutta scheme. Density matrices are vectorized
row-major, so vec(A rho B) = kron(A, B.T) vec(rho).

Stored energies and rates are linear frequencies (GHz, 1/ns); the 2*pi
factor is applied only when Hamiltonians are built.
"""

import logging
import math
from typing import Callable

import numpy as np

from squidsim.errors import InvalidInitialState, StepUnstable
from squidsim.lz import SWEEP_DETUNING_SPAN
from squidsim.storage.models import (
    IDX_0L,
    IDX_0R,
    IDX_1L,
    IDX_1R,
    CrossingSpec,
    DecoherenceRates,
    DriveParams,
    FourLevelModel,
    Trajectory,
)

logger = logging.getLogger(__name__)

DIM = 4
IDENTITY = np.eye(DIM)
IDENTITY_VEC = np.eye(DIM * DIM)

MIN_STEPS_PER_PERIOD = 64
STEPS_PER_DECAY_TIME = 32
TRACE_TOL = 1e-6
PROTOCOL_AVERAGE_PERIODS = 5
# Largest phase (rad) any eigenvalue of H may advance in one step
STEP_PHASE = 0.04


def _projector(i: int, j: int | None = None) -> np.ndarray:
    """|i><j| in the (1R, 1L, 0R, 0L) basis."""
    op = np.zeros((DIM, DIM), dtype=complex)
    op[i, i if j is None else j] = 1.0
    return op


def ground_state(m: FourLevelModel) -> np.ndarray:
    """Relaxed state: the lower of |0R>, |0L>; an even mixture at degeneracy."""
    e_0r, e_0l = m.e0[IDX_0R], m.e0[IDX_0L]
    if e_0r < e_0l:
        return _projector(IDX_0R)
    if e_0l < e_0r:
        return _projector(IDX_0L)
    return 0.5 * (_projector(IDX_0R) + _projector(IDX_0L))


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise InvalidInitialState unless rho is a valid 4x4 density matrix."""
    rho = np.asarray(rho)
    if rho.shape != (DIM, DIM):
        raise InvalidInitialState(f"Density matrix must be 4x4, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise InvalidInitialState("Density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise InvalidInitialState(f"Density matrix trace is {np.trace(rho).real:.12f}, not 1")
    diag = np.real(np.diag(rho))
    if np.any(diag < -1e-8) or np.any(diag > 1 + 1e-8):
        raise InvalidInitialState("Density matrix populations are outside [0, 1]")


def hamiltonian_at(m: FourLevelModel, d: DriveParams, t: float) -> np.ndarray:
    """
    Four-level Hamiltonian at time t (ns) in angular GHz.

    Diagonal E_x0 + k_x phi_rf sin(2 pi f t); off-diagonals delta11
    (1R-1L), delta00 (0R-0L) and delta01 (1R-0L, 1L-0R).
    """
    drive = math.sin(2 * math.pi * d.f * t) * d.phi_rf
    h = m.static_hamiltonian()
    h[np.diag_indices(DIM)] += np.array(m.k) * drive
    return 2 * math.pi * h


def jump_operators(r: DecoherenceRates, m: FourLevelModel) -> list[tuple[float, np.ndarray]]:
    """
    (rate, operator) pairs of the Lindblad dissipator.

    Intrawell decay 1X -> 0X at gamma1; interwell decay toward the lower
    static |0> state at gamma_inter (split evenly in both directions at
    degeneracy); pure dephasing through the four projectors at gamma2.
    """
    jumps = []
    if r.gamma1 > 0:
        jumps.append((r.gamma1, _projector(IDX_0R, IDX_1R)))
        jumps.append((r.gamma1, _projector(IDX_0L, IDX_1L)))
    if r.gamma_inter > 0:
        e_0r, e_0l = m.e0[IDX_0R], m.e0[IDX_0L]
        if e_0r > e_0l:
            jumps.append((r.gamma_inter, _projector(IDX_0L, IDX_0R)))
        elif e_0l > e_0r:
            jumps.append((r.gamma_inter, _projector(IDX_0R, IDX_0L)))
        else:
            jumps.append((0.5 * r.gamma_inter, _projector(IDX_0L, IDX_0R)))
            jumps.append((0.5 * r.gamma_inter, _projector(IDX_0R, IDX_0L)))
    if r.gamma2 > 0:
        for i in range(DIM):
            jumps.append((r.gamma2, _projector(i)))
    return jumps


def dissipator(r: DecoherenceRates, m: FourLevelModel, rho: np.ndarray) -> np.ndarray:
    """Gamma[rho] = sum_k gamma_k (L rho L^dag - {L^dag L, rho}/2)."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros((DIM, DIM), dtype=complex)
    for rate, op in jump_operators(r, m):
        op_dag = op.conj().T
        ldl = op_dag @ op
        out += rate * (op @ rho @ op_dag - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[h, rho]."""
    return -1j * (np.kron(h, IDENTITY) - np.kron(IDENTITY, h.T))


def dissipator_superoperator(r: DecoherenceRates, m: FourLevelModel) -> np.ndarray:
    """dissipator() as a 16x16 matrix, one column per matrix unit |i><j|."""
    out = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for i in range(DIM):
        for j in range(DIM):
            out[:, i * DIM + j] = dissipator(r, m, _projector(i, j)).reshape(-1)
    return out


def _traceless(h: np.ndarray) -> np.ndarray:
    return h - (np.trace(h) / DIM) * IDENTITY


def drive_components(m: FourLevelModel, d: DriveParams) -> tuple[np.ndarray, np.ndarray]:
    """
    (H0, H1) with hamiltonian_at(m, d, t) = H0 + sin(2 pi f t) H1.

    Both are taken from hamiltonian_at at a node and a crest of the drive
    and made traceless; the identity part drops out of the commutator.
    """
    h0 = hamiltonian_at(m, d, 0.0)
    h1 = hamiltonian_at(m, d, 0.25 * d.period) - h0
    return _traceless(h0), _traceless(h1)


def hamiltonian_scale(m: FourLevelModel, d: DriveParams) -> float:
    """Upper bound on max |eig H(t)| over a drive period, in rad/ns."""
    h0, h1 = drive_components(m, d)
    return float(np.linalg.norm(h0, 2) + np.linalg.norm(h1, 2))


def liouvillian(
    m: FourLevelModel, d: DriveParams, r: DecoherenceRates
) -> tuple[np.ndarray, np.ndarray]:
    """Static and drive parts (L0, L1) with L(t) = L0 + sin(2 pi f t) L1."""
    h0, h1 = drive_components(m, d)
    l0 = commutator_superoperator(h0) + dissipator_superoperator(r, m)
    l1 = commutator_superoperator(h1)
    return l0, l1


def steps_per_period(
    d: DriveParams, r: DecoherenceRates, max_step: float | None = None, omega_max: float = 0.0
) -> int:
    """
    Steps per drive period.

    Honors dt <= T/64, dt <= 1/(32 max rate) and, for a Hamiltonian whose
    eigenvalues stay within omega_max (rad/ns), a phase advance of at most
    STEP_PHASE per step.
    """
    n = MIN_STEPS_PER_PERIOD
    if r.max_rate > 0:
        n = max(n, math.ceil(STEPS_PER_DECAY_TIME * r.max_rate * d.period))
    if omega_max > 0:
        n = max(n, math.ceil(omega_max * d.period / STEP_PHASE))
    if max_step is not None:
        n = max(n, math.ceil(d.period / max_step))
    return n


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def right_well_population(rho: np.ndarray) -> float:
    """rho_{0R,0R} + rho_{1R,1R}, clamped to [0, 1]."""
    p = float(np.real(rho[IDX_0R, IDX_0R] + rho[IDX_1R, IDX_1R]))
    return min(max(p, 0.0), 1.0)


def _hermitize(vec: np.ndarray) -> np.ndarray:
    rho = vec.reshape(DIM, DIM)
    return (0.5 * (rho + rho.conj().T)).reshape(-1)


def _trace(vec: np.ndarray) -> float:
    return float(np.real(vec[:: DIM + 1].sum()))


def integrate_master_equation(
    generator: Callable[[float], np.ndarray],
    rho0: np.ndarray,
    t_end: float,
    dt: float,
    sample_stride: int = 1,
    t0: float = 0.0,
) -> Trajectory:
    """
    Classical RK4 integration of vec(rho)' = generator(t) vec(rho).

    Re-Hermitizes after every step and samples every sample_stride steps
    plus the final state.

    Raises:
        StepUnstable: If the trace drifts from 1 by more than 1e-6
    """
    n_steps = max(1, math.ceil((t_end - t0) / dt - 1e-9))
    dt = (t_end - t0) / n_steps
    vec = np.asarray(rho0, dtype=complex).reshape(-1).copy()

    samples_t = [t0]
    samples_rho = [vec.reshape(DIM, DIM).copy()]
    for i in range(n_steps):
        t = t0 + i * dt
        a_start = generator(t)
        a_mid = generator(t + 0.5 * dt)
        a_end = generator(t + dt)
        k1 = a_start @ vec
        k2 = a_mid @ (vec + 0.5 * dt * k1)
        k3 = a_mid @ (vec + 0.5 * dt * k2)
        k4 = a_end @ (vec + dt * k3)
        vec = _hermitize(vec + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))

        trace = _trace(vec)
        if abs(trace - 1.0) > TRACE_TOL:
            raise StepUnstable(
                f"Trace drifted to {trace:.9f} at t={t + dt:.4f} ns (dt={dt:.3e} ns)",
                t=t + dt,
                dt=dt,
            )
        if (i + 1) % sample_stride == 0 or i == n_steps - 1:
            samples_t.append(t + dt)
            samples_rho.append(vec.reshape(DIM, DIM).copy())

    return _trajectory(np.array(samples_t), samples_rho)


def _trajectory(times: np.ndarray, states: list[np.ndarray]) -> Trajectory:
    populations = np.array([np.real(np.diag(rho)) for rho in states])
    return Trajectory(
        times=times,
        p_right=np.array([right_well_population(rho) for rho in states]),
        populations=populations,
        purity=np.array([purity(rho) for rho in states]),
        final_rho=states[-1],
        min_eigenvalues=np.array([np.linalg.eigvalsh(rho)[0] for rho in states]),
        asymmetry=np.array([np.max(np.abs(rho - rho.conj().T)) for rho in states]),
    )


def evolve(
    m: FourLevelModel,
    d: DriveParams,
    r: DecoherenceRates,
    rho0: np.ndarray,
    sample_every: float,
    max_step: float | None = None,
) -> Trajectory:
    """
    Integrate the driven master equation from t = 0 to d.duration.

    Args:
        m: Four-level model at the working bias
        d: Drive parameters
        r: Decoherence rates
        rho0: Initial 4x4 density matrix
        sample_every: Sampling interval in ns
        max_step: Optional cap on the step below the automatic bounds

    Returns:
        Trajectory sampled every sample_every ns (to the nearest step)

    Raises:
        InvalidInitialState: If rho0 is not a density matrix
        StepUnstable: If trace preservation fails
    """
    check_density_matrix(rho0)
    l0, l1 = liouvillian(m, d, r)
    omega = 2 * math.pi * d.f
    dt = d.period / steps_per_period(d, r, max_step, hamiltonian_scale(m, d))
    stride = max(1, int(round(sample_every / dt)))
    logger.debug(f"evolve: dt={dt:.3e} ns, {d.duration / dt:.0f} steps, stride={stride}")

    def generator(t: float) -> np.ndarray:
        return l0 + math.sin(omega * t) * l1

    return integrate_master_equation(generator, rho0, d.duration, dt, stride)


def _step_maps(l0: np.ndarray, l1: np.ndarray, omega: float, dt: float, n: int) -> list[np.ndarray]:
    """RK4 propagator of each step of one drive period, as 16x16 matrices."""
    maps = []
    for i in range(n):
        t = i * dt
        a1 = l0 + math.sin(omega * t) * l1
        a2 = l0 + math.sin(omega * (t + 0.5 * dt)) * l1
        a4 = l0 + math.sin(omega * (t + dt)) * l1
        k1 = a1
        k2 = a2 @ (IDENTITY_VEC + 0.5 * dt * k1)
        k3 = a2 @ (IDENTITY_VEC + 0.5 * dt * k2)
        k4 = a4 @ (IDENTITY_VEC + dt * k3)
        maps.append(IDENTITY_VEC + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    return maps


def period_propagator(
    m: FourLevelModel, d: DriveParams, r: DecoherenceRates, max_step: float | None = None
) -> tuple[np.ndarray, list[np.ndarray]]:
    """
    RK4 map over one full drive period and its individual step maps.

    Applying the period map equals stepping the same scheme through the
    period, since the drive repeats exactly.
    """
    l0, l1 = liouvillian(m, d, r)
    n = steps_per_period(d, r, max_step, hamiltonian_scale(m, d))
    maps = _step_maps(l0, l1, 2 * math.pi * d.f, d.period / n, n)
    total = IDENTITY_VEC.astype(complex)
    for step in maps:
        total = step @ total
    return total, maps


def simulate_protocol(
    m: FourLevelModel,
    d: DriveParams,
    r: DecoherenceRates,
    n_average: int = PROTOCOL_AVERAGE_PERIODS,
    max_step: float | None = None,
) -> float:
    """
    Right-well population after continuous driving from the relaxed ground state.

    The state starts in the lower of |0R>, |0L>, is driven for the whole
    drive periods that fit in d.duration, and the right-well population is
    averaged over the final n_average periods. Without drive the relaxed
    state is returned unchanged.

    Raises:
        StepUnstable: If the propagated trace drifts from 1
    """
    rho0 = ground_state(m)
    if d.phi_rf == 0:
        return right_well_population(rho0)

    period_map, step_maps = period_propagator(m, d, r, max_step)
    n_periods = max(int(math.floor(d.duration * d.f + 1e-9)), n_average)
    vec = rho0.reshape(-1).astype(complex)
    vec = _hermitize(np.linalg.matrix_power(period_map, n_periods - n_average) @ vec)

    samples = []
    for _ in range(n_average):
        for step in step_maps:
            vec = _hermitize(step @ vec)
            samples.append(right_well_population(vec.reshape(DIM, DIM)))

    trace = _trace(vec)
    if abs(trace - 1.0) > TRACE_TOL:
        raise StepUnstable(f"Trace drifted to {trace:.9f} over {n_periods} periods", periods=n_periods)
    return min(max(float(np.mean(samples)), 0.0), 1.0)


def linear_sweep_survival(c: CrossingSpec, detuning_span: float = SWEEP_DETUNING_SPAN) -> float:
    """
    Landau-Zener survival through integrate_master_equation.

    The |0R>, |0L> pair is swept through its crossing at c.sweep_rate
    with coupling 2 pi c.delta and no dissipation. Start and end states are
    the adiabatic eigenstates connected to |0R>.
    """
    v = c.sweep_rate
    g = 2 * math.pi * c.delta
    t_half = detuning_span / abs(v)

    coupling = g * (_projector(IDX_0R, IDX_0L) + _projector(IDX_0L, IDX_0R))
    bias = 0.5 * v * (_projector(IDX_0R) - _projector(IDX_0L))
    l_coupling = commutator_superoperator(coupling)
    l_bias = commutator_superoperator(bias)

    def adiabatic(t: float) -> np.ndarray:
        h = (coupling + t * bias)[np.ix_([IDX_0R, IDX_0L], [IDX_0R, IDX_0L])]
        _, vectors = np.linalg.eigh(h)
        pair = vectors[:, int(np.argmax(np.abs(vectors[0, :])))]
        psi = np.zeros(DIM, dtype=complex)
        psi[[IDX_0R, IDX_0L]] = pair
        return np.outer(psi, psi.conj())

    def generator(t: float) -> np.ndarray:
        return l_coupling + t * l_bias

    dt = STEP_PHASE / math.hypot(0.5 * detuning_span, g)
    trajectory = integrate_master_equation(
        generator, adiabatic(-t_half), t_half, dt, sample_stride=10**9, t0=-t_half
    )
    return float(np.real(np.trace(adiabatic(t_half) @ trajectory.final_rho)))
