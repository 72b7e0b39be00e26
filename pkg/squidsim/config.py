"""
Run configuration for squidsim.

Loads a JSON configuration file, fills defaults, checks every physical
invariant and produces a RunConfig. The effective configuration (defaults
included) is what gets hashed and echoed next to every output.
"""

import copy
import hashlib
import json
import logging
import math
from pathlib import Path

from squidsim.errors import ParseError, ValidationError
from squidsim.storage.models import (
    CircuitParams,
    DecoherenceRates,
    DriveParams,
    EigenGridSpec,
    FourLevelModel,
    PowerCalibration,
    RunConfig,
    Solver,
    SweepSpec,
)

logger = logging.getLogger(__name__)

DEFAULTS = {
    "circuit": {"L": 1080e-12, "C": 80e-12, "phi_q": 0.5, "phi_cjj": 0.0},
    "drive": {"f": 15.9, "duration": 200.0, "power": -20.0},
    "rates": {"gamma1": 1.0, "gamma_inter": 1.0e-3, "gamma2": 2.0},
    "calibration": {"p_ref": -20.0, "phi_rf_ref": 1.0e-3},
    "sweep": {
        "bias_min": 0.48,
        "bias_max": 0.52,
        "n_bias": 61,
        "p_min": -40.0,
        "p_max": -10.0,
        "n_power": 21,
        "solver": "rate",
        "shots": None,
        "seed": 0,
        "n_max": 3,
    },
    "levels": {"bias_min": 0.48, "bias_max": 0.52, "n_bias": 81, "n_points": 4001, "n_levels": 8},
    "output": {"dir": "out", "formats": ["csv", "json", "svg"], "database": "squidsim.db"},
}
DEFAULT_BETA_L = 1.39

CIRCUIT_KEYS = {"L", "C", "Ic", "beta_L", "phi_q", "phi_cjj"}
MODEL_KEYS = {"states", "e0_GHz", "k_GHz_per_Phi0", "delta00_GHz", "delta01_GHz", "delta11_GHz", "bias_ref_Phi0"}
OUTPUT_FORMATS = {"csv", "json", "svg"}
INTEGER_KEYS = {"n_bias", "n_power", "seed", "n_max", "n_points", "n_levels", "shots"}


def _check_keys(section: str, given: dict, allowed: set) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ValidationError(f"Unknown key(s) in [{section}]: {', '.join(unknown)}", field=section)


def _check_types(section: str, values: dict) -> None:
    for key, value in values.items():
        name = f"{section}.{key}"
        if key in ("solver", "dir", "database", "formats", "states"):
            continue
        if key in INTEGER_KEYS:
            if value is None and key == "shots":
                continue
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{name} must be an integer, got {value!r}", field=name)
        elif isinstance(value, list):
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ValidationError(f"{name} must be a list of numbers", field=name)
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{name} must be a number, got {value!r}", field=name)


def _merge(raw: dict) -> dict:
    """Defaults overlaid with the file's sections; checks section and key names."""
    allowed_sections = set(DEFAULTS) | {"model", "hooks"}
    unknown = sorted(set(raw) - allowed_sections)
    if unknown:
        raise ValidationError(f"Unknown section(s): {', '.join(unknown)}", field=unknown[0])

    effective = copy.deepcopy(DEFAULTS)
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ValidationError(f"Section [{section}] must be an object", field=section)
        _check_keys(section, given, CIRCUIT_KEYS if section == "circuit" else set(defaults))
        effective[section].update(given)

    circuit = effective["circuit"]
    if "Ic" in circuit and "beta_L" in circuit:
        raise ValidationError("Give exactly one of circuit.Ic and circuit.beta_L, not both", field="circuit.Ic")
    if "Ic" not in circuit and "beta_L" not in circuit:
        circuit["beta_L"] = DEFAULT_BETA_L

    if "model" in raw:
        if not isinstance(raw["model"], dict):
            raise ValidationError("Section [model] must be an object", field="model")
        _check_keys("model", raw["model"], MODEL_KEYS)
        effective["model"] = copy.deepcopy(raw["model"])

    hooks = raw.get("hooks", [])
    if not isinstance(hooks, list) or not all(isinstance(h, str) for h in hooks):
        raise ValidationError("hooks must be a list of hook names", field="hooks")
    effective["hooks"] = list(hooks)

    for section in DEFAULTS:
        _check_types(section, effective[section])
    return effective


def _build(section: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except (ValueError, TypeError) as e:
        raise ValidationError(f"[{section}] {e}", field=section) from e


def build_config(raw: dict) -> RunConfig:
    """
    Validate a configuration dictionary and fill defaults.

    Args:
        raw: Parsed configuration, as read from JSON

    Returns:
        RunConfig whose raw field is the effective configuration

    Raises:
        ValidationError: Naming the offending field or invariant
    """
    if not isinstance(raw, dict):
        raise ValidationError("Configuration must be a JSON object", field="<root>")
    eff = _merge(raw)

    c = eff["circuit"]
    if "beta_L" in c:
        if not c["beta_L"] >= 0:
            raise ValidationError(f"circuit.beta_L must be nonnegative, got {c['beta_L']}", field="circuit.beta_L")
        circuit = _build(
            "circuit", CircuitParams.from_beta_l,
            beta_l=c["beta_L"], L=c["L"], C=c["C"], phi_q=c["phi_q"], phi_cjj=c["phi_cjj"],
        )
    else:
        circuit = _build(
            "circuit", CircuitParams, L=c["L"], C=c["C"], Ic=c["Ic"], phi_q=c["phi_q"], phi_cjj=c["phi_cjj"]
        )

    calibration = _build("calibration", PowerCalibration, **eff["calibration"])
    d = eff["drive"]
    phi_rf = calibration.phi_rf_ref * 10 ** ((d["power"] - calibration.p_ref) / 20)
    drive = _build("drive", DriveParams, f=d["f"], phi_rf=phi_rf, duration=d["duration"])
    rates = _build("rates", DecoherenceRates, **eff["rates"])

    s = eff["sweep"]
    try:
        solver = Solver(s["solver"])
    except ValueError as e:
        raise ValidationError(
            f"sweep.solver must be one of {[m.value for m in Solver]}, got {s['solver']!r}", field="sweep.solver"
        ) from e
    if s["n_power"] > 1 and not (math.isfinite(s["p_min"]) and math.isfinite(s["p_max"])):
        raise ValidationError("A power range needs finite p_min and p_max", field="sweep.p_min")
    if s["seed"] < 0:
        raise ValidationError(f"sweep.seed must be nonnegative, got {s['seed']}", field="sweep.seed")
    if s["n_max"] < 1:
        raise ValidationError(f"sweep.n_max must be at least 1, got {s['n_max']}", field="sweep.n_max")
    sweep = _build(
        "sweep", SweepSpec,
        bias_min=s["bias_min"], bias_max=s["bias_max"], n_bias=s["n_bias"],
        p_min=s["p_min"], p_max=s["p_max"], n_power=s["n_power"],
        f=drive.f, solver=solver, duration=drive.duration,
        shots=s["shots"], seed=s["seed"], n_max=s["n_max"],
    )

    lv = eff["levels"]
    if lv["n_bias"] < 1 or (lv["n_bias"] > 1 and not lv["bias_min"] < lv["bias_max"]):
        raise ValidationError("levels needs n_bias >= 1 and bias_min < bias_max", field="levels.n_bias")
    _build("levels", EigenGridSpec, phi_min=0.0, phi_max=1.0, n_points=lv["n_points"], n_levels=lv["n_levels"])

    model = None
    if "model" in eff:
        try:
            model = FourLevelModel.from_dict(eff["model"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"[model] invalid four-level model: {e}", field="model") from e

    out = eff["output"]
    formats = out["formats"]
    if not isinstance(formats, list) or not set(formats) <= OUTPUT_FORMATS:
        raise ValidationError(f"output.formats must be a subset of {sorted(OUTPUT_FORMATS)}", field="output.formats")
    if not isinstance(out["dir"], str) or not out["dir"]:
        raise ValidationError("output.dir must be a nonempty path", field="output.dir")
    if not isinstance(out["database"], str):
        raise ValidationError("output.database must be a path or empty string", field="output.database")

    return RunConfig(
        circuit=circuit,
        drive=drive,
        rates=rates,
        calibration=calibration,
        sweep=sweep,
        levels_bias=(float(lv["bias_min"]), float(lv["bias_max"]), int(lv["n_bias"])),
        grid_points=lv["n_points"],
        n_levels=lv["n_levels"],
        model=model,
        output_dir=out["dir"],
        formats=tuple(formats),
        database_path=out["database"],
        hooks=eff["hooks"],
        raw=eff,
    )


def load_config(config_path: str = "config.json") -> RunConfig:
    """
    Load configuration from a JSON file.

    Args:
        config_path: Path to the configuration file

    Returns:
        Validated RunConfig

    Raises:
        ParseError: If the file is missing or is not valid JSON (with line number)
        ValidationError: If a value violates an invariant
    """
    try:
        text = Path(config_path).read_text()
    except FileNotFoundError as e:
        logger.error(f"Configuration file not found: {config_path}")
        raise ParseError(f"Configuration file not found: {config_path}", path=str(config_path)) from e
    except OSError as e:
        logger.error(f"Cannot read configuration file {config_path}: {e}")
        raise ParseError(f"Cannot read {config_path}: {e}", path=str(config_path)) from e

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in configuration file: {e}")
        raise ParseError(f"Invalid JSON in {config_path}: {e.msg}", path=str(config_path), line=e.lineno) from e

    config = build_config(raw)
    logger.info(f"Loaded configuration from {config_path} (hash {config_hash(config)[:12]})")
    return config


def with_overrides(
    config: RunConfig,
    out: str | None = None,
    seed: int | None = None,
    solver: str | None = None,
) -> RunConfig:
    """Apply command-line overrides and re-validate."""
    raw = copy.deepcopy(config.raw)
    if out is not None:
        raw["output"]["dir"] = out
    if seed is not None:
        raw["sweep"]["seed"] = seed
    if solver is not None:
        raw["sweep"]["solver"] = solver
    return build_config(raw)


def canonical_json(config: RunConfig) -> str:
    """Effective configuration as sorted-key JSON."""
    return json.dumps(config.raw, sort_keys=True, indent=2)


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical effective configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()