"""
Landau-Zener analytics for squidsim.

Closed-form single-crossing probabilities, Bessel-modulated multiphoton
rates and a rate-equation steady state that serves as the fast sweep
solver and as a cross-check for the master equation.
"""

import logging
import math

import networkx as nx
import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import jnp_zeros, jv

from squidsim.errors import InvalidOrder, SingularRateMatrix
from squidsim.storage.models import (
    IDX_0L,
    IDX_0R,
    IDX_1L,
    IDX_1R,
    STATES,
    CrossingSpec,
    DecoherenceRates,
    DriveParams,
    FourLevelModel,
    RateModel,
)

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 3

# Half-window of the numeric sweep, as detuning reached at either end (rad/ns)
SWEEP_DETUNING_SPAN = 30.0


def lz_probability(c: CrossingSpec) -> float:
    """Diabatic survival exp(-2 pi (2 pi delta)^2 / |sweep_rate|)."""
    gap = 2 * math.pi * c.delta
    return math.exp(-2 * math.pi * gap ** 2 / abs(c.sweep_rate))


def numeric_lz_survival(c: CrossingSpec, detuning_span: float = SWEEP_DETUNING_SPAN) -> float:
    """
    Survival probability from direct integration of the two-level sweep.

    H(t) = [[v t / 2, g], [g, -v t / 2]] with g = 2 pi delta is integrated
    from -T to T, starting and ending in the adiabatic eigenstate that
    connects to diabatic state 1, so finite-window corrections stay far
    below the closed-form accuracy.
    """
    v = c.sweep_rate
    g = 2 * math.pi * c.delta
    t_half = detuning_span / abs(v)

    def hamiltonian(t: float) -> np.ndarray:
        return np.array([[0.5 * v * t, g], [g, -0.5 * v * t]])

    def diabatic_like(t: float) -> np.ndarray:
        _, vectors = np.linalg.eigh(hamiltonian(t))
        return vectors[:, int(np.argmax(np.abs(vectors[0, :])))].astype(complex)

    def rhs(t, psi):
        return -1j * (hamiltonian(t) @ psi)

    psi0 = diabatic_like(-t_half)
    sol = solve_ivp(rhs, (-t_half, t_half), psi0, method="DOP853", rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise RuntimeError(f"Two-level sweep integration failed: {sol.message}")
    overlap = np.vdot(diabatic_like(t_half), sol.y[:, -1])
    return float(abs(overlap) ** 2)


def _coupling(model: FourLevelModel, pair: tuple[int, int]) -> float:
    for a, b, delta in model.couplings():
        if {a, b} == set(pair):
            return delta
    return 0.0


def bessel_argument(model: FourLevelModel, d: DriveParams, pair: tuple[int, int]) -> float:
    """x = k phi_rf / f with k the differential slope of the pair."""
    a, b = pair
    return (model.k[a] - model.k[b]) * d.phi_rf / d.f


def bessel_rate(
    n: int,
    model: FourLevelModel,
    d: DriveParams,
    gamma2: float,
    pair: tuple[int, int] = (IDX_1R, IDX_0L),
) -> float:
    """
    Strong-driving n-photon transition rate (1/ns) for one coupled pair.

    (2 pi Delta)^2 J_n(x)^2 (gamma2/2) / ((gamma2/2)^2 + detuning^2) / 2
    with detuning = 2 pi (spacing - n f).

    Raises:
        InvalidOrder: If n < 1
    """
    if n < 1:
        raise InvalidOrder(f"Photon order must be at least 1, got {n}", n=n)
    if not gamma2 > 0:
        raise ValueError(f"gamma2 must be positive for the Lorentzian linewidth, got {gamma2}")
    a, b = pair
    delta = _coupling(model, pair)
    spacing = abs(model.e0[a] - model.e0[b])
    detuning = 2 * math.pi * (spacing - n * d.f)
    half_width = 0.5 * gamma2
    j = jv(n, bessel_argument(model, d, pair))
    return (2 * math.pi * delta) ** 2 * j ** 2 * half_width / (half_width ** 2 + detuning ** 2) * 0.5


def bessel_modulation_maxima(n: int, k: float, f: float, phi_max: float) -> np.ndarray:
    """Drive amplitudes (Phi0) of the J_n^2 maxima up to phi_max; spacing scales with f/k."""
    if n < 1:
        raise InvalidOrder(f"Photon order must be at least 1, got {n}", n=n)
    scale = f / abs(k)
    count = max(1, int(phi_max / scale / math.pi) + 2)
    phis = jnp_zeros(n, count) * scale
    return phis[phis <= phi_max]


def _decay_rates(model: FourLevelModel, r: DecoherenceRates) -> dict[tuple[int, int], float]:
    """(from, to) -> rate for intrawell and interwell relaxation."""
    rates = {}
    if r.gamma1 > 0:
        rates[(IDX_1R, IDX_0R)] = r.gamma1
        rates[(IDX_1L, IDX_0L)] = r.gamma1
    if r.gamma_inter > 0:
        e_0r, e_0l = model.e0[IDX_0R], model.e0[IDX_0L]
        if e_0r > e_0l:
            rates[(IDX_0R, IDX_0L)] = r.gamma_inter
        elif e_0l > e_0r:
            rates[(IDX_0L, IDX_0R)] = r.gamma_inter
        else:
            rates[(IDX_0R, IDX_0L)] = 0.5 * r.gamma_inter
            rates[(IDX_0L, IDX_0R)] = 0.5 * r.gamma_inter
    return rates


def _ground_nodes(model: FourLevelModel) -> list[int]:
    e_0r, e_0l = model.e0[IDX_0R], model.e0[IDX_0L]
    if e_0r < e_0l:
        return [IDX_0R]
    if e_0l < e_0r:
        return [IDX_0L]
    return [IDX_0R, IDX_0L]


def _ground_distribution(model: FourLevelModel) -> np.ndarray:
    p = np.zeros(4)
    nodes = _ground_nodes(model)
    p[nodes] = 1.0 / len(nodes)
    return p


def _stationary(transitions: dict[tuple[int, int], float], start: list[int]) -> np.ndarray:
    """
    Stationary distribution of the chain restricted to what start can reach.

    Raises:
        SingularRateMatrix: If that part of the rate graph has more than one
            closed class
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(4))
    graph.add_edges_from(edge for edge, rate in transitions.items() if rate > 0)
    reachable = set(start)
    for node in start:
        reachable |= nx.descendants(graph, node)
    closed = list(nx.attracting_components(graph.subgraph(reachable)))
    if len(closed) != 1:
        raise SingularRateMatrix(
            f"Rate graph reachable from {[STATES[s] for s in start]} has {len(closed)} closed classes",
            closed=[sorted(STATES[i] for i in c) for c in closed],
        )

    nodes = sorted(reachable)
    index = {node: i for i, node in enumerate(nodes)}
    m = np.zeros((len(nodes), len(nodes)))
    for (a, b), rate in transitions.items():
        if a in index and b in index:
            m[index[b], index[a]] += rate
            m[index[a], index[a]] -= rate
    m[-1, :] = 1.0
    rhs = np.zeros(len(nodes))
    rhs[-1] = 1.0
    solution = np.clip(np.linalg.solve(m, rhs), 0.0, None)

    p = np.zeros(4)
    p[nodes] = solution / solution.sum()
    return p


def rate_model(
    model: FourLevelModel,
    d: DriveParams,
    r: DecoherenceRates,
    n_max: int = DEFAULT_N_MAX,
    strict: bool = False,
) -> RateModel:
    """
    Build and solve the four-state rate equation.

    Every pair coupled in the four-level Hamiltonian is pumped in both
    directions by the summed n = 1..n_max Bessel rates; relaxation follows
    the dissipator's intrawell and interwell channels.

    Args:
        model: Four-level model at the working bias
        d: Drive parameters
        r: Decoherence rates; gamma2 sets the resonance linewidth
        n_max: Highest photon order
        strict: Raise SingularRateMatrix instead of falling back to the
            decay-only solution

    Returns:
        RateModel with stationary occupations
    """
    if n_max < 1:
        raise InvalidOrder(f"n_max must be at least 1, got {n_max}", n=n_max)

    pumps: dict[tuple[int, int], float] = {}
    for a, b, delta in model.couplings():
        if delta <= 0 or d.phi_rf == 0:
            continue
        pumps[(a, b)] = sum(bessel_rate(n, model, d, r.gamma2, (a, b)) for n in range(1, n_max + 1))

    transitions = dict(_decay_rates(model, r))
    for (a, b), w in pumps.items():
        transitions[(a, b)] = transitions.get((a, b), 0.0) + w
        transitions[(b, a)] = transitions.get((b, a), 0.0) + w

    start = _ground_nodes(model)
    try:
        occupations = _stationary(transitions, start)
    except SingularRateMatrix as e:
        if strict:
            raise
        logger.warning(f"{e.message}; using the decay-only solution")
        try:
            occupations = _stationary(_decay_rates(model, r), start)
        except SingularRateMatrix:
            occupations = _ground_distribution(model)

    return RateModel(occupations=occupations, pump_rates=pumps, rates=r)


def rate_steady_state(
    model: FourLevelModel,
    d: DriveParams,
    r: DecoherenceRates,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """Stationary occupations of (1R, 1L, 0R, 0L) under the rate equation."""
    return rate_model(model, d, r, n_max).occupations


def rate_right_well_population(occupations: np.ndarray) -> float:
    return float(min(max(occupations[IDX_1R] + occupations[IDX_0R], 0.0), 1.0))
