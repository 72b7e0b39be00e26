"""
Orchestrator for squidsim.

Runs one command (levels, scan, sweep or verify) against a validated
RunConfig: computes the physics, writes the outputs, records the run in
the ledger and notifies hooks along the way.
"""

import dataclasses
import functools
import logging
from pathlib import Path

from squidsim.circuit import validate_params
from squidsim.config import canonical_json, config_hash
from squidsim.errors import SquidSimError
from squidsim.hooks.base import BaseHook
from squidsim.output import plots, writers
from squidsim.spectrum import (
    default_grid,
    extract_four_level_model,
    level_diagram,
    predict_resonances,
    synthetic_diagram,
)
from squidsim.storage.database import Database
from squidsim.storage.models import FourLevelModel, LevelDiagram, RunConfig, ScanCurve, SweepSpec
from squidsim.sweep import add_shot_noise, bias_scan_no_mw, detect_features, run_sweep, thread_count
from squidsim.verify import SUITES, check_trace_preservation, format_table, run_all

logger = logging.getLogger(__name__)

COMMANDS = ("levels", "scan", "sweep", "verify")


class Orchestrator:
    """
    Command runner.

    Owns the output directory, the run ledger and the registered hooks
    for the duration of one or more commands.
    """

    def __init__(self, config: RunConfig, database: Database | None = None) -> None:
        """
        Args:
            config: Validated run configuration
            database: Ledger to record into; by default opened from
                config.database_path (empty path disables the ledger)
        """
        self.config = config
        self.config_hash = config_hash(config)
        self.out_dir = Path(config.output_dir)

        if database is not None:
            self.database = database
        elif config.database_path:
            self.database = Database(config.database_path)
        else:
            self.database = None

        self._hooks: list[BaseHook] = []
        self._run_id: int | None = None

    def register_hook(self, hook: BaseHook) -> None:
        """Register a hook to receive run events."""
        self._hooks.append(hook)
        logger.info(f"Registered hook: {hook.__class__.__name__}")

    def run(self, command: str) -> bool:
        """
        Run one command and record it.

        Returns:
            True on success; False when verification checks failed

        Raises:
            ValueError: For an unknown command
            SquidSimError: Whatever the command raised, after the run is
                marked failed
        """
        if command not in COMMANDS:
            raise ValueError(f"Unknown command '{command}', expected one of {COMMANDS}")

        self._run_id = self.database.create_run(command, self.config_hash) if self.database else None
        self._fire_hooks("on_run_start", run_id=self._run_id, command=command, config_hash=self.config_hash)
        logger.info(f"Running '{command}' with config {self.config_hash[:12]}, output to {self.out_dir}")

        try:
            self._write_effective_config()
            if command == "verify":
                ok = self.cmd_verify()
            else:
                getattr(self, f"cmd_{command}")()
                ok = True
        except (SquidSimError, OSError) as e:
            logger.error(f"Command '{command}' failed: {e}")
            self._end_run("failed", str(e))
            raise

        self._end_run("completed" if ok else "verify_failed")
        return ok

    def _end_run(self, status: str, message: str = "") -> None:
        if self.database and self._run_id is not None:
            self.database.end_run(self._run_id, status, message)
        self._fire_hooks("on_run_end", run_id=self._run_id, status=status)

    def close(self) -> None:
        if self.database:
            self.database.close()

    # -- commands ---------------------------------------------------------

    def cmd_levels(self) -> list[Path]:
        """Level diagram, four-level model and resonance markers."""
        cfg = self.config
        validate_params(cfg.circuit, cfg.drive.f)
        bias_min, bias_max, n_bias = cfg.levels_bias
        diagram = self._solve_diagram(bias_min, bias_max, n_bias)

        written = []
        if "csv" in cfg.formats:
            written.append(self._written("levels_csv", writers.write_diagram_csv(
                self.out_dir / "levels.csv", diagram, self.config_hash)))

        model = cfg.model or extract_four_level_model(diagram)
        self._fire_hooks("on_model_extracted", model=model)
        resonances = predict_resonances(diagram, cfg.drive.f, cfg.sweep.n_max)
        logger.info(f"{len(resonances)} multiphoton resonances predicted at f={cfg.drive.f} GHz")

        if "json" in cfg.formats:
            extra = {
                "source": "config" if cfg.model else "extracted",
                "resonances": [{"bias": r.bias, "n": r.n, "pair": list(r.pair)} for r in resonances],
            }
            written.append(self._written("model_json", writers.write_model_json(
                self.out_dir / "model.json", model, self.config_hash, extra)))
        if "svg" in cfg.formats:
            written.append(self._written("levels_svg", plots.plot_level_diagram(
                self.out_dir / "levels.svg", diagram, resonances, self.config_hash)))
        return written

    def cmd_scan(self) -> list[Path]:
        """No-MW step curve and the same scan at the configured drive power."""
        cfg = self.config
        diagram, model = self._sweep_inputs()
        baseline = bias_scan_no_mw(cfg.circuit, cfg.sweep, diagram=diagram, model=model if diagram is None else None)

        power = cfg.raw["drive"]["power"]
        single = dataclasses.replace(cfg.sweep, p_min=power, p_max=power, n_power=1)
        grid = run_sweep(
            cfg.circuit, single, cfg.calibration, cfg.rates,
            model=model, diagram=diagram, baseline=baseline,
        )
        driven = ScanCurve(biases=grid.biases, populations=grid.populations[:, 0])

        written = []
        if "csv" in cfg.formats:
            written.append(self._written("scan_csv", writers.write_scan_csv(
                self.out_dir / "scan.csv", baseline, driven, self.config_hash)))
        if "svg" in cfg.formats:
            written.append(self._written("scan_svg", plots.plot_scan(
                self.out_dir / "scan.svg", baseline, driven, self.config_hash)))
        return written

    def cmd_sweep(self) -> list[Path]:
        """Bias x power population map with optional shot noise and feature report."""
        cfg = self.config
        spec = cfg.sweep
        diagram, model = self._sweep_inputs()
        baseline = bias_scan_no_mw(cfg.circuit, spec, diagram=diagram, model=model if diagram is None else None)

        grid = run_sweep(
            cfg.circuit, spec, cfg.calibration, cfg.rates,
            model=model, diagram=diagram, baseline=baseline,
            on_cell=lambda *args: self._fire_hooks(
                "on_cell_done", **dict(zip(("index", "total", "bias", "power_dbm", "population", "provenance"), args))
            ),
        )
        if spec.shots:
            grid = add_shot_noise(grid, spec.shots, spec.seed)

        feature_diagram = diagram if diagram is not None else synthetic_diagram(model, spec.bias_axis())
        report = detect_features(grid, baseline, feature_diagram, spec.f, spec.n_max)

        if self.database and self._run_id is not None:
            self.database.save_sweep_cells(self._run_id, grid)

        written = []
        if "csv" in cfg.formats:
            written.append(self._written("grid_csv", writers.write_grid_csv(
                self.out_dir / "sweep_grid.csv", grid, self.config_hash)))
        if "json" in cfg.formats:
            written.append(self._written("grid_json", writers.write_grid_json(
                self.out_dir / "sweep_grid.json", grid, spec.solver.value, cfg.raw, self.config_hash)))
            written.append(self._written("features_json", writers.write_features_json(
                self.out_dir / "features.json", report, self.config_hash)))
        if "svg" in cfg.formats:
            written.append(self._written("heatmap_svg", plots.plot_heatmap(
                self.out_dir / "sweep_heatmap.svg", grid, self.config_hash)))
        return written

    def cmd_verify(self) -> bool:
        """Run every property suite and print the pass/fail table."""
        suites = dict(SUITES)
        if "csv" in self.config.formats:
            suites["trace_preservation"] = functools.partial(
                check_trace_preservation,
                on_trajectory=lambda t: self._written("trajectory_csv", writers.write_trajectory_csv(
                    self.out_dir / "verify_trajectory.csv", t, self.config_hash)),
            )
        results = run_all(suites)
        print(format_table(results))
        if "json" in self.config.formats:
            payload = {"checks": [dataclasses.asdict(r) for r in results], "passed": all(r.passed for r in results)}
            self._written("verify_json", writers.write_json(self.out_dir / "verify.json", payload, self.config_hash))
        failed = [r for r in results if not r.passed]
        if failed:
            logger.warning(f"{len(failed)} of {len(results)} verification checks failed")
        return not failed

    # -- helpers ----------------------------------------------------------

    def _solve_diagram(self, bias_min: float, bias_max: float, n_bias: int) -> LevelDiagram:
        cfg = self.config
        grid = default_grid(cfg.circuit, cfg.grid_points, cfg.n_levels)
        return level_diagram(
            cfg.circuit,
            (bias_min, bias_max),
            n_bias,
            grid,
            max_workers=thread_count(),
            on_solved=lambda bias, n: self._fire_hooks("on_level_solved", bias=bias, n_levels=n),
        )

    def _sweep_inputs(self) -> tuple[LevelDiagram | None, FourLevelModel | None]:
        """Level diagram on the sweep axis and the model, unless the config supplies a model."""
        cfg = self.config
        validate_params(cfg.circuit, cfg.drive.f)
        if cfg.model is not None:
            self._fire_hooks("on_model_extracted", model=cfg.model)
            return None, cfg.model

        spec: SweepSpec = cfg.sweep
        diagram = self._solve_diagram(spec.bias_min, spec.bias_max, spec.n_bias)
        try:
            model = extract_four_level_model(diagram)
        except SquidSimError as e:
            logger.warning(f"No four-level model on the sweep axis: {e}")
            return diagram, None
        self._fire_hooks("on_model_extracted", model=model)
        return diagram, model

    def _write_effective_config(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "config_effective.json"
        path.write_text(canonical_json(self.config) + "\n")
        logger.info(f"Effective configuration written to {path}")
        self._written("config_json", path)

    def _written(self, kind: str, path: Path) -> Path:
        if self.database and self._run_id is not None:
            self.database.save_output(self._run_id, kind, str(path))
        self._fire_hooks("on_output_written", kind=kind, path=str(path))
        return path

    def _fire_hooks(self, method_name: str, **kwargs) -> None:
        """
        Call a hook method on all registered hooks.

        Each call is wrapped in try/except so a broken hook never
        aborts a run.

        Args:
            method_name: Name of the hook method to call.
            **kwargs: Arguments to pass to the hook method.
        """
        for hook in self._hooks:
            try:
                method = getattr(hook, method_name, None)
                if method:
                    method(**kwargs)
            except Exception as e:
                logger.error(
                    f"Hook {hook.__class__.__name__}.{method_name} failed: {e}",
                    exc_info=True,
                )
