"""
Storage models for squidsim.

All dataclasses used across the project: circuit parameters, spectra,
the four-level model, drive and decoherence settings, sweep results and
run-ledger records.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.constants


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed CODATA values; Phi0 = h/2e."""
    Phi0: float = scipy.constants.h / (2 * scipy.constants.e)
    h: float = scipy.constants.h
    hbar: float = scipy.constants.hbar


CONSTANTS = PhysicalConstants()

# Basis order of the four-level model and of every 4x4 density matrix.
STATES: tuple[str, str, str, str] = ("1R", "1L", "0R", "0L")
IDX_1R, IDX_1L, IDX_0R, IDX_0L = range(4)


class Side(str, Enum):
    """Which well an eigenstate lives in."""
    LEFT = "Left"
    RIGHT = "Right"
    DELOCALIZED = "Delocalized"


class Solver(str, Enum):
    """Per-cell population solver used by the sweep engine."""
    FULL = "full"
    RATE = "rate"


# Per-cell provenance labels recorded in a SweepGrid.
PROVENANCE_FULL = "full"
PROVENANCE_RATE = "rate"
PROVENANCE_STATIC = "static"
PROVENANCE_FAILED = "failed"


@dataclass(frozen=True)
class CircuitParams:
    """rf-SQUID parameters. L in H, C in F, Ic in A, fluxes in units of Phi0."""
    L: float
    C: float
    Ic: float
    phi_q: float = 0.5
    phi_cjj: float = 0.0

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.Ic >= 0:
            raise ValueError(f"Ic must be nonnegative, got {self.Ic}")

    @classmethod
    def from_beta_l(
        cls,
        beta_l: float,
        L: float,
        C: float,
        phi_q: float = 0.5,
        phi_cjj: float = 0.0,
    ) -> "CircuitParams":
        """Build parameters from the screening parameter instead of Ic."""
        if beta_l < 0:
            raise ValueError(f"beta_L must be nonnegative, got {beta_l}")
        ic = beta_l * CONSTANTS.Phi0 / (2 * math.pi * L)
        return cls(L=L, C=C, Ic=ic, phi_q=phi_q, phi_cjj=phi_cjj)

    def with_bias(self, phi_q: float) -> "CircuitParams":
        """Same circuit at another qubit flux bias."""
        return CircuitParams(L=self.L, C=self.C, Ic=self.Ic, phi_q=phi_q, phi_cjj=self.phi_cjj)


@dataclass(frozen=True)
class WellGeometry:
    """Stationary points of the double-well potential (flux in Phi0, energy in GHz)."""
    left_min: float
    right_min: float
    barrier_top: float
    U_left: float
    U_right: float
    U_barrier: float

    def __post_init__(self) -> None:
        if not self.left_min < self.barrier_top < self.right_min:
            raise ValueError(
                f"Expected left_min < barrier_top < right_min, got "
                f"{self.left_min}, {self.barrier_top}, {self.right_min}"
            )
        if not self.U_barrier > max(self.U_left, self.U_right):
            raise ValueError("Barrier energy must exceed both well minima")

    @property
    def barrier_height(self) -> float:
        """Barrier above the higher of the two minima (GHz)."""
        return self.U_barrier - max(self.U_left, self.U_right)


@dataclass(frozen=True)
class EigenGridSpec:
    """Finite-difference grid for the flux eigenproblem."""
    phi_min: float
    phi_max: float
    n_points: int = 4001
    n_levels: int = 8

    def __post_init__(self) -> None:
        if not self.phi_min < self.phi_max:
            raise ValueError(f"phi_min must be below phi_max, got {self.phi_min}, {self.phi_max}")
        if self.n_points < 201:
            raise ValueError(f"n_points must be at least 201, got {self.n_points}")
        if self.n_levels < 1 or self.n_levels > self.n_points / 10:
            raise ValueError(
                f"n_levels must be in [1, n_points/10], got {self.n_levels} for {self.n_points} points"
            )

    def refined(self) -> "EigenGridSpec":
        """Same window with the grid spacing halved."""
        return EigenGridSpec(self.phi_min, self.phi_max, 2 * self.n_points - 1, self.n_levels)

    def grid(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.n_points)


@dataclass(frozen=True)
class WellLabel:
    """Well assignment of one eigenstate; intrawell_index counts within its side."""
    side: Side
    intrawell_index: int

    @property
    def name(self) -> str:
        """Short notation such as '0L' or '1R'; delocalized states get 'D<i>'."""
        if self.side == Side.DELOCALIZED:
            return f"D{self.intrawell_index}"
        return f"{self.intrawell_index}{self.side.value[0]}"


@dataclass(eq=False)
class EnergySpectrum:
    """
    Lowest eigenpairs at one bias.

    energies are in GHz, sorted ascending. wavefunctions has shape
    (n_levels, n_points) on `grid`; synthetic spectra built from a
    four-level model carry no wavefunctions, only left_weights.
    """
    energies: np.ndarray
    bias: float = 0.5
    grid: np.ndarray | None = None
    wavefunctions: np.ndarray | None = None
    labels: list[WellLabel] | None = None
    left_weights: np.ndarray | None = None

    @property
    def n_levels(self) -> int:
        return len(self.energies)


@dataclass(eq=False)
class LevelDiagram:
    """Spectra versus qubit flux bias."""
    biases: np.ndarray
    spectra: list[EnergySpectrum]

    def __post_init__(self) -> None:
        self.biases = np.asarray(self.biases, dtype=float)
        if len(self.biases) != len(self.spectra):
            raise ValueError("One spectrum per bias is required")
        if len(self.biases) > 1 and not np.all(np.diff(self.biases) > 0):
            raise ValueError("Biases must be strictly increasing")
        if len({s.n_levels for s in self.spectra}) > 1:
            raise ValueError("All spectra must carry the same number of levels")

    def energy_matrix(self) -> np.ndarray:
        """Energies as an (n_bias, n_levels) array."""
        return np.array([s.energies for s in self.spectra])


@dataclass(frozen=True)
class FourLevelModel:
    """
    Diabatic four-level model in the basis (1R, 1L, 0R, 0L).

    e0 are the diabatic energies at bias_ref (GHz), k the diabatic slopes
    (GHz per Phi0), deltas the interwell tunneling splittings (GHz).
    """
    e0: tuple[float, float, float, float]
    k: tuple[float, float, float, float]
    delta00: float
    delta01: float
    delta11: float
    bias_ref: float = 0.5

    def __post_init__(self) -> None:
        if len(self.e0) != 4 or len(self.k) != 4:
            raise ValueError("e0 and k need one entry per state (1R, 1L, 0R, 0L)")
        object.__setattr__(self, "e0", tuple(float(v) for v in self.e0))
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        for name in ("delta00", "delta01", "delta11"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def in_tunneling_regime(self) -> bool:
        """True when delta00 < delta01, the ordering the driven physics relies on."""
        return self.delta00 < self.delta01

    def at_bias(self, bias: float) -> "FourLevelModel":
        """Move the reference bias along the diabatic lines."""
        shift = bias - self.bias_ref
        e0 = tuple(e + k * shift for e, k in zip(self.e0, self.k))
        return FourLevelModel(e0, self.k, self.delta00, self.delta01, self.delta11, bias)

    def static_hamiltonian(self) -> np.ndarray:
        """Undriven Hamiltonian in GHz (linear frequency, no 2*pi)."""
        h = np.diag(np.array(self.e0, dtype=float))
        for a, b, d in self.couplings():
            h[a, b] = h[b, a] = d
        return h

    def couplings(self) -> list[tuple[int, int, float]]:
        """Nonzero off-diagonal pairs of the four-level Hamiltonian."""
        return [
            (IDX_1R, IDX_1L, self.delta11),
            (IDX_1R, IDX_0L, self.delta01),
            (IDX_1L, IDX_0R, self.delta01),
            (IDX_0R, IDX_0L, self.delta00),
        ]

    def to_dict(self) -> dict:
        return {
            "states": list(STATES),
            "e0_GHz": list(self.e0),
            "k_GHz_per_Phi0": list(self.k),
            "delta00_GHz": self.delta00,
            "delta01_GHz": self.delta01,
            "delta11_GHz": self.delta11,
            "bias_ref_Phi0": self.bias_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FourLevelModel":
        return cls(
            e0=tuple(data["e0_GHz"]),
            k=tuple(data["k_GHz_per_Phi0"]),
            delta00=data["delta00_GHz"],
            delta01=data["delta01_GHz"],
            delta11=data["delta11_GHz"],
            bias_ref=data.get("bias_ref_Phi0", 0.5),
        )


@dataclass(frozen=True)
class Resonance:
    """A bias where an interwell spacing equals n photons of the drive."""
    bias: float
    n: int
    pair: tuple[str, str]


@dataclass(frozen=True)
class DriveParams:
    """Microwave drive: f in GHz, phi_rf in Phi0, duration in ns."""
    f: float
    phi_rf: float = 0.0
    duration: float = 1000.0

    def __post_init__(self) -> None:
        if not self.f > 0:
            raise ValueError(f"Drive frequency must be positive, got {self.f}")
        if self.phi_rf < 0:
            raise ValueError(f"phi_rf must be nonnegative, got {self.phi_rf}")
        if not self.duration > 0:
            raise ValueError(f"Duration must be positive, got {self.duration}")

    @property
    def period(self) -> float:
        return 1.0 / self.f


@dataclass(frozen=True)
class DecoherenceRates:
    """Rates in 1/ns: intrawell relaxation, interwell relaxation, pure dephasing."""
    gamma1: float = 1.0
    gamma_inter: float = 1.0e-3
    gamma2: float = 2.0

    def __post_init__(self) -> None:
        for name in ("gamma1", "gamma_inter", "gamma2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def max_rate(self) -> float:
        return max(self.gamma1, self.gamma_inter, self.gamma2)


@dataclass(eq=False)
class Trajectory:
    """Sampled master-equation solution."""
    times: np.ndarray
    p_right: np.ndarray
    populations: np.ndarray
    purity: np.ndarray
    final_rho: np.ndarray
    min_eigenvalues: np.ndarray | None = None
    asymmetry: np.ndarray | None = None


@dataclass(frozen=True)
class CrossingSpec:
    """Single avoided crossing: delta in GHz (linear), sweep_rate in rad/ns^2."""
    delta: float
    sweep_rate: float

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.sweep_rate == 0:
            raise ValueError("sweep_rate must be nonzero")


@dataclass(eq=False)
class RateModel:
    """Classical rate equation over the four diabatic states."""
    occupations: np.ndarray
    pump_rates: dict[tuple[int, int], float]
    rates: DecoherenceRates


@dataclass(frozen=True)
class PowerCalibration:
    """Nominal power p_ref (dBm) maps to flux amplitude phi_rf_ref (Phi0)."""
    p_ref: float = -20.0
    phi_rf_ref: float = 1.0e-3

    def __post_init__(self) -> None:
        if not self.phi_rf_ref > 0:
            raise ValueError(f"phi_rf_ref must be positive, got {self.phi_rf_ref}")


@dataclass(frozen=True)
class SweepSpec:
    """Bias x power sweep definition."""
    bias_min: float = 0.48
    bias_max: float = 0.52
    n_bias: int = 61
    p_min: float = -40.0
    p_max: float = -10.0
    n_power: int = 21
    f: float = 15.9
    solver: Solver = Solver.RATE
    duration: float = 200.0
    shots: int | None = None
    seed: int = 0
    n_max: int = 3

    def __post_init__(self) -> None:
        if self.n_bias < 1 or self.n_power < 1:
            raise ValueError("n_bias and n_power must be at least 1")
        if self.n_bias > 1 and not self.bias_min < self.bias_max:
            raise ValueError("bias_min must be below bias_max when n_bias > 1")
        if self.n_power > 1 and not self.p_min < self.p_max:
            raise ValueError("p_min must be below p_max when n_power > 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be at least 1, got {self.shots}")
        if not self.f > 0:
            raise ValueError(f"Drive frequency must be positive, got {self.f}")
        if not self.duration > 0:
            raise ValueError(f"Duration must be positive, got {self.duration}")
        object.__setattr__(self, "solver", Solver(self.solver))

    def bias_axis(self) -> np.ndarray:
        if self.n_bias == 1:
            return np.array([self.bias_min])
        return np.linspace(self.bias_min, self.bias_max, self.n_bias)

    def power_axis(self) -> np.ndarray:
        if self.n_power == 1:
            return np.array([self.p_min])
        return np.linspace(self.p_min, self.p_max, self.n_power)

    @property
    def bias_step(self) -> float:
        if self.n_bias == 1:
            return 0.0
        return (self.bias_max - self.bias_min) / (self.n_bias - 1)


@dataclass(eq=False)
class ScanCurve:
    """P(|R>) versus bias."""
    biases: np.ndarray
    populations: np.ndarray


@dataclass(eq=False)
class SweepGrid:
    """
    Right-well populations over (bias, power).

    populations has shape (n_bias, n_power); failed cells hold NaN and
    provenance 'failed' with the cause in failures.
    """
    biases: np.ndarray
    powers: np.ndarray
    populations: np.ndarray
    provenance: np.ndarray
    failures: dict[tuple[int, int], str] = field(default_factory=dict)
    seed: int | None = None
    shots: int | None = None

    def __post_init__(self) -> None:
        shape = (len(self.biases), len(self.powers))
        if self.populations.shape != shape or self.provenance.shape != shape:
            raise ValueError(f"Grid matrices must have shape {shape}")


@dataclass(frozen=True)
class Feature:
    """A peak or dip of the driven population relative to the no-MW baseline."""
    kind: str  # "peak" or "dip"
    bias: float
    power: float
    population: float
    n: int | None = None


@dataclass(frozen=True)
class InversionEntry:
    """Cell whose excited-well population exceeds one half."""
    bias: float
    power: float
    population: float
    ground_side: Side

    def __post_init__(self) -> None:
        if not self.population > 0.5:
            raise ValueError("Inversion entries need excited-well population above 0.5")
        if self.ground_side == Side.DELOCALIZED:
            raise ValueError("Inversion needs a localized static ground state")


@dataclass
class FeatureReport:
    """Peaks, dips and population-inversion cells of a sweep."""
    peaks: list[Feature] = field(default_factory=list)
    dips: list[Feature] = field(default_factory=list)
    inversions: list[InversionEntry] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not (self.peaks or self.dips or self.inversions)


@dataclass(frozen=True)
class PlotSpec:
    """What an SVG figure shows."""
    kind: str  # "heatmap" or "lines"
    xlabel: str
    ylabel: str
    title: str = ""
    vmin: float = 0.0
    vmax: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("heatmap", "lines"):
            raise ValueError(f"Unknown plot kind: {self.kind}")
        if not self.vmin < self.vmax:
            raise ValueError("Color bounds must be ordered")


@dataclass
class RunConfig:
    """Fully validated run configuration with defaults filled."""
    circuit: CircuitParams
    drive: DriveParams
    rates: DecoherenceRates
    calibration: PowerCalibration
    sweep: SweepSpec
    levels_bias: tuple[float, float, int] = (0.48, 0.52, 81)
    grid_points: int = 4001
    n_levels: int = 8
    model: FourLevelModel | None = None
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json", "svg")
    database_path: str = "squidsim.db"
    hooks: list[str] = field(default_factory=list)
    raw: dict = field(default_factory=dict)


@dataclass
class RunRecord:
    """One command invocation in the run ledger."""
    run_id: int | None = None
    command: str = ""
    config_hash: str = ""
    start_time: str = ""
    end_time: str | None = None
    status: str = "running"
    message: str = ""


@dataclass
class CellRecord:
    """One sweep cell in the run ledger."""
    run_id: int
    bias_index: int
    power_index: int
    bias: float
    power_dbm: float
    population: float | None
    provenance: str
    error: str | None = None


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one verification check."""
    suite: str
    name: str
    passed: bool
    detail: str = ""
