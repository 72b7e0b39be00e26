"""
CSV and JSON writers for squidsim results.

Every file carries the effective configuration hash. Numbers are written
with 9 significant digits and '\n' line endings; no timestamps are
written, so identical runs give byte-identical files.
"""

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from squidsim.storage.models import STATES, FeatureReport, FourLevelModel, LevelDiagram, ScanCurve, SweepGrid, Trajectory

logger = logging.getLogger(__name__)


def fmt(value) -> str:
    """Decimal with 9 significant digits; NaN and infinities spelled out."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def _jsonable(obj):
    """Convert numpy types and non-finite floats (to null) recursively."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(path: Path, payload: dict, config_hash: str) -> Path:
    """Write payload with the config hash as sorted-key JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = dict(payload)
    document["config_hash"] = config_hash
    with open(path, "w", newline="\n") as f:
        json.dump(_jsonable(document), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    logger.debug(f"Wrote JSON {path}")
    return path


def write_csv(path: Path, header: list[str], rows: list[list], config_hash: str) -> Path:
    """Write a CSV whose first line is '# config_hash=<hash>'."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    logger.debug(f"Wrote CSV {path} ({len(rows)} rows)")
    return path


def write_diagram_csv(path: Path, diagram: LevelDiagram, config_hash: str) -> Path:
    """
    Long format, one row per (bias, level): bias, level_index, energy_GHz,
    side, intrawell_index. side and intrawell_index are blank for
    spectra without well labels.
    """
    header = ["bias", "level_index", "energy_GHz", "side", "intrawell_index"]
    rows = []
    for b, s in zip(diagram.biases, diagram.spectra):
        for i, energy in enumerate(s.energies):
            label = s.labels[i] if s.labels else None
            side = label.side.value if label else ""
            intrawell = str(label.intrawell_index) if label else ""
            rows.append([b, str(i), energy, side, intrawell])
    return write_csv(path, header, rows, config_hash)


def write_model_json(path: Path, model: FourLevelModel, config_hash: str, extra: dict | None = None) -> Path:
    payload = {"model": model.to_dict(), "in_tunneling_regime": model.in_tunneling_regime}
    payload.update(extra or {})
    return write_json(path, payload, config_hash)


def write_scan_csv(path: Path, baseline: ScanCurve, driven: ScanCurve | None, config_hash: str) -> Path:
    header = ["bias_Phi0", "P_R_no_mw"]
    rows = [[b, p] for b, p in zip(baseline.biases, baseline.populations)]
    if driven is not None:
        header.append("P_R_driven")
        for row, p in zip(rows, driven.populations):
            row.append(p)
    return write_csv(path, header, rows, config_hash)


def write_grid_csv(path: Path, grid: SweepGrid, config_hash: str) -> Path:
    """Header row of powers (dBm), first column biases (Phi0)."""
    header = ["bias_Phi0\\power_dBm"] + [fmt(p) for p in grid.powers]
    rows = [[b] + list(grid.populations[i]) for i, b in enumerate(grid.biases)]
    return write_csv(path, header, rows, config_hash)


def write_grid_json(path: Path, grid: SweepGrid, solver: str, config: dict, config_hash: str) -> Path:
    failures = [
        {"bias_index": i, "power_index": j, "bias": grid.biases[i], "power_dBm": grid.powers[j], "cause": cause}
        for (i, j), cause in sorted(grid.failures.items())
    ]
    payload = {
        "biases_Phi0": grid.biases,
        "powers_dBm": grid.powers,
        "populations": grid.populations,
        "provenance": [[str(v) for v in row] for row in grid.provenance],
        "failures": failures,
        "solver": solver,
        "seed": grid.seed,
        "shots": grid.shots,
        "config": config,
    }
    return write_json(path, payload, config_hash)


def write_features_json(path: Path, report: FeatureReport, config_hash: str) -> Path:
    def feature(f):
        return {"kind": f.kind, "bias": f.bias, "power_dBm": f.power, "population": f.population, "n": f.n}

    payload = {
        "peaks": [feature(f) for f in report.peaks],
        "dips": [feature(f) for f in report.dips],
        "inversions": [
            {"bias": e.bias, "power_dBm": e.power, "excited_population": e.population, "ground_side": e.ground_side.value}
            for e in report.inversions
        ],
    }
    return write_json(path, payload, config_hash)


def write_trajectory_csv(path: Path, trajectory: Trajectory, config_hash: str) -> Path:
    header = ["t_ns", "P_R", "purity"] + [f"p_{s}" for s in STATES]
    rows = [
        [t, pr, pu] + list(pops)
        for t, pr, pu, pops in zip(trajectory.times, trajectory.p_right, trajectory.purity, trajectory.populations)
    ]
    return write_csv(path, header, rows, config_hash)
