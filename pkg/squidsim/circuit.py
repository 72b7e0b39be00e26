"""
rf-SQUID circuit model for squidsim.

Holds the classical potential landscape of the flux qubit loop and the
double-well geometry derived from it. Energies are E/h in GHz and flux is
in units of Phi0 throughout.
"""

import logging
import math

import numpy as np
from scipy.optimize import brentq

from squidsim.errors import NoDoubleWell
from squidsim.storage.models import CONSTANTS, CircuitParams, WellGeometry

logger = logging.getLogger(__name__)

# Double-well operation requires beta_L inside this window
BETA_L_MIN = 1.0
BETA_L_MAX = 4.6

# Stationary-point search: coarse sign scan, then refinement
SCAN_STEP = 1e-3
ROOT_XTOL = 1e-9


def effective_critical_current(p: CircuitParams) -> float:
    """Critical current of the compound junction, Ic * |cos(pi * phi_cjj)| (A)."""
    return p.Ic * abs(math.cos(math.pi * p.phi_cjj))


def beta_l(p: CircuitParams) -> float:
    """Screening parameter 2*pi*L*Ic_eff/Phi0."""
    return 2 * math.pi * p.L * effective_critical_current(p) / CONSTANTS.Phi0


def u0_ghz(p: CircuitParams) -> float:
    """Energy scale U0 = Phi0^2 / (4 pi^2 L), as E/h in GHz."""
    u0 = CONSTANTS.Phi0 ** 2 / (4 * math.pi ** 2 * p.L)
    return u0 / CONSTANTS.h * 1e-9


def lc_frequency(p: CircuitParams) -> float:
    """Small-oscillation frequency 1/(2 pi sqrt(LC)) in GHz."""
    return 1.0 / (2 * math.pi * math.sqrt(p.L * p.C)) * 1e-9


def potential(p: CircuitParams, phi):
    """
    Loop potential U(phi)/h in GHz.

    Args:
        p: Circuit parameters
        phi: Flux in units of Phi0 (scalar or array)

    Returns:
        U0 * (0.5 * (2 pi (phi - phi_q))^2 - beta_L cos(2 pi phi)) in GHz
    """
    phi = np.asarray(phi, dtype=float)
    x = 2 * math.pi * (phi - p.phi_q)
    u = u0_ghz(p) * (0.5 * x ** 2 - beta_l(p) * np.cos(2 * math.pi * phi))
    return float(u) if u.ndim == 0 else u


def potential_derivative(p: CircuitParams, phi):
    """dU/dphi in GHz per Phi0."""
    phi = np.asarray(phi, dtype=float)
    two_pi = 2 * math.pi
    du = u0_ghz(p) * (two_pi ** 2 * (phi - p.phi_q) + two_pi * beta_l(p) * np.sin(two_pi * phi))
    return float(du) if du.ndim == 0 else du


def _potential_curvature(p: CircuitParams, phi: float) -> float:
    two_pi = 2 * math.pi
    return u0_ghz(p) * (two_pi ** 2 + two_pi ** 2 * beta_l(p) * math.cos(two_pi * phi))


def stationary_points(p: CircuitParams) -> list[float]:
    """All roots of dU/dphi on [phi_q - 0.5, phi_q + 0.5], ascending."""
    n = int(round(1.0 / SCAN_STEP)) + 1
    xs = np.linspace(p.phi_q - 0.5, p.phi_q + 0.5, n)
    du = potential_derivative(p, xs)
    signs = np.sign(du)

    roots: list[float] = []
    for i in range(n - 1):
        if signs[i] == 0:
            roots.append(float(xs[i]))
        elif signs[i] * signs[i + 1] < 0:
            roots.append(brentq(lambda x: potential_derivative(p, x), xs[i], xs[i + 1], xtol=ROOT_XTOL))
    if signs[-1] == 0:
        roots.append(float(xs[-1]))

    deduped: list[float] = []
    for r in sorted(roots):
        if not deduped or r - deduped[-1] > 10 * ROOT_XTOL:
            deduped.append(r)
    return deduped


def find_wells(p: CircuitParams) -> WellGeometry:
    """
    Locate both well minima and the barrier between them.

    Args:
        p: Circuit parameters; beta_L must be in the double-well regime

    Returns:
        WellGeometry with flux positions and energies of the three points

    Raises:
        NoDoubleWell: If fewer than two minima exist at this bias
    """
    points = stationary_points(p)
    minima = [x for x in points if _potential_curvature(p, x) > 0]
    maxima = [x for x in points if _potential_curvature(p, x) < 0]

    # Adjacent minima with a maximum between them; prefer the pair straddling phi_q
    candidates = []
    for left, right in zip(minima, minima[1:]):
        between = [m for m in maxima if left < m < right]
        if between:
            top = max(between, key=lambda m: potential(p, m))
            candidates.append((abs(top - p.phi_q), left, top, right))

    if not candidates:
        raise NoDoubleWell(
            f"No double well at phi_q={p.phi_q:.6f} (beta_L={beta_l(p):.4f}, "
            f"{len(minima)} minima found)",
            phi_q=p.phi_q,
            beta_L=beta_l(p),
        )

    _, left, top, right = min(candidates)
    geometry = WellGeometry(
        left_min=left,
        right_min=right,
        barrier_top=top,
        U_left=potential(p, left),
        U_right=potential(p, right),
        U_barrier=potential(p, top),
    )
    logger.debug(
        f"Wells at phi_q={p.phi_q:.6f}: left={left:.6f}, right={right:.6f}, "
        f"barrier={top:.6f}, height={geometry.barrier_height:.3f} GHz"
    )
    return geometry


def validate_params(p: CircuitParams, f_drive: float | None = None) -> list[str]:
    """
    Regime checks that do not invalidate the parameters but deserve a warning.

    Args:
        p: Circuit parameters
        f_drive: Drive frequency in GHz, if known

    Returns:
        List of human-readable warnings (empty when everything is in range)
    """
    warnings = []
    b = beta_l(p)
    if not BETA_L_MIN < b < BETA_L_MAX:
        warnings.append(
            f"beta_L={b:.4f} is outside the double-well window ({BETA_L_MIN}, {BETA_L_MAX})"
        )
    f_lc = lc_frequency(p)
    if f_drive is not None and f_lc < 0.1 * f_drive:
        warnings.append(
            f"LC frequency {f_lc:.4f} GHz is far below the {f_drive} GHz drive "
            f"(C={p.C:.3e} F); interwell splittings will be numerically zero"
        )
    for w in warnings:
        logger.warning(w)
    return warnings
