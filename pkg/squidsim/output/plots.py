"""
SVG figures for squidsim: energy-level diagrams, step curves and
bias x power heatmaps.

Rendering goes through matplotlib's object API and SVG backend, never
pyplot, so figures can be produced from worker threads. The SVG date is
omitted and the id salt fixed, which keeps reruns byte-identical.
"""

import logging
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from squidsim.storage.models import LevelDiagram, PlotSpec, Resonance, ScanCurve, SweepGrid

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "squidsim"

RESONANCE_COLORS = {1: "tab:red", 2: "tab:orange", 3: "tab:green"}


def _save(fig: Figure, path: Path, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    FigureCanvasSVG(fig)
    fig.savefig(
        path,
        format="svg",
        metadata={"Date": None, "Creator": "squidsim", "Identifier": f"config_hash={config_hash}"},
    )
    logger.debug(f"Wrote SVG {path}")
    return path


def plot_level_diagram(
    path: Path,
    diagram: LevelDiagram,
    resonances: list[Resonance],
    config_hash: str,
    n_show: int = 6,
) -> Path:
    """Energies versus bias with vertical markers at the n-photon resonances."""
    spec = PlotSpec(kind="lines", xlabel="flux bias (Phi0)", ylabel="E/h (GHz)", title="Energy levels")
    energies = diagram.energy_matrix()
    energies = energies - energies.min()

    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    for level in range(min(n_show, energies.shape[1])):
        ax.plot(diagram.biases, energies[:, level], color="black", linewidth=1)
    for res in resonances:
        ax.axvline(res.bias, color=RESONANCE_COLORS.get(res.n, "tab:gray"), linestyle="--", linewidth=0.8)
    for n, color in sorted(RESONANCE_COLORS.items()):
        if any(r.n == n for r in resonances):
            ax.plot([], [], color=color, linestyle="--", label=f"n = {n}")
    if resonances:
        ax.legend(loc="upper center")
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    fig.tight_layout()
    return _save(fig, path, config_hash)


def plot_scan(path: Path, baseline: ScanCurve, driven: ScanCurve | None, config_hash: str) -> Path:
    """Step curve without microwaves, overlaid with the driven curve when given."""
    spec = PlotSpec(kind="lines", xlabel="flux bias (Phi0)", ylabel="P(R)", title="Right-well population")
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(baseline.biases, baseline.populations, color="black", label="no MW")
    if driven is not None:
        ax.plot(driven.biases, driven.populations, "s-", color="tab:red", markersize=3, label="with MW")
    ax.set_ylim(spec.vmin - 0.05, spec.vmax + 0.05)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, path, config_hash)


def plot_heatmap(path: Path, grid: SweepGrid, config_hash: str, spec: PlotSpec | None = None) -> Path:
    """Population map with power on x and bias on y; failed cells are left blank."""
    spec = spec or PlotSpec(kind="heatmap", xlabel="MW power (dBm)", ylabel="flux bias (Phi0)", title="P(R)")
    powers, biases = grid.powers, grid.biases
    if not np.all(np.isfinite(powers)):
        powers = np.arange(len(powers), dtype=float)
    dp = (powers[-1] - powers[0]) / (len(powers) - 1) if len(powers) > 1 else 1.0
    db = (biases[-1] - biases[0]) / (len(biases) - 1) if len(biases) > 1 else 1e-3
    extent = [powers[0] - dp / 2, powers[-1] + dp / 2, biases[0] - db / 2, biases[-1] + db / 2]

    fig = Figure(figsize=(6, 5))
    ax = fig.add_subplot()
    image = ax.imshow(
        np.ma.masked_invalid(grid.populations),
        origin="lower",
        aspect="auto",
        extent=extent,
        vmin=spec.vmin,
        vmax=spec.vmax,
        cmap="viridis",
        interpolation="nearest",
    )
    fig.colorbar(image, ax=ax, label="P(R)")
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    fig.tight_layout()
    return _save(fig, path, config_hash)
