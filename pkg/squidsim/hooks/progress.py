"""
Progress logging hook.

Logs sweep progress every tenth of the grid and each written output,
so long FullDynamics sweeps show signs of life at INFO level.
"""

import logging
import time

from squidsim.hooks.base import BaseHook

logger = logging.getLogger(__name__)


class ProgressLogHook(BaseHook):
    """Reports sweep completion in steps of `every` (a fraction of all cells)."""

    def __init__(self, every: float = 0.1) -> None:
        if not 0 < every <= 1:
            raise ValueError(f"every must be in (0, 1], got {every}")
        self.every = every
        self._next_mark = every
        self._started: float | None = None
        self._failed = 0

    def on_run_start(self, run_id: int | None, command: str, config_hash: str) -> None:
        self._next_mark = self.every
        self._started = time.monotonic()
        self._failed = 0
        logger.info(f"Run {run_id} started: {command} (config {config_hash[:12]})")

    def on_model_extracted(self, model) -> None:
        regime = "tunneling" if model.in_tunneling_regime else "unresolved splittings"
        logger.info(
            f"Model at bias {model.bias_ref:.4f}: delta00={model.delta00:.3e}, "
            f"delta01={model.delta01:.3e}, delta11={model.delta11:.3e} GHz ({regime})"
        )

    def on_cell_done(
        self, index: int, total: int, bias: float, power_dbm: float, population: float, provenance: str
    ) -> None:
        if provenance == "failed":
            self._failed += 1
        done = (index + 1) / total
        if done + 1e-12 >= self._next_mark or index + 1 == total:
            elapsed = time.monotonic() - self._started if self._started is not None else 0.0
            logger.info(f"Sweep {done:6.1%} ({index + 1}/{total} cells, {self._failed} failed, {elapsed:.1f}s)")
            while self._next_mark <= done + 1e-12:
                self._next_mark += self.every

    def on_output_written(self, kind: str, path: str) -> None:
        logger.info(f"Wrote {kind}: {path}")

    def on_run_end(self, run_id: int | None, status: str) -> None:
        logger.info(f"Run {run_id} finished: {status}")
