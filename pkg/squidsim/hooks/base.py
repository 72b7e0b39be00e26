"""
Hook base class for squidsim.

Provides an observer pattern interface with no-op default implementations.
Subclasses override only the methods they need. The orchestrator wraps
every hook call in try/except so a broken hook never aborts a run.
"""

import logging

logger = logging.getLogger(__name__)


class BaseHook:
    """
    Base class for all hooks in the squidsim event system.

    All methods are no-ops by default. Subclasses override selectively
    to handle specific events.
    """

    def on_run_start(self, run_id: int | None, command: str, config_hash: str) -> None:
        """Called when a command begins, after the configuration is loaded."""
        pass

    def on_level_solved(self, bias: float, n_levels: int) -> None:
        """Called after each per-bias eigensolve of a level diagram."""
        pass

    def on_model_extracted(self, model) -> None:
        """Called with the FourLevelModel a command will use."""
        pass

    def on_cell_done(
        self, index: int, total: int, bias: float, power_dbm: float, population: float, provenance: str
    ) -> None:
        """Called once per sweep cell, in cell order."""
        pass

    def on_output_written(self, kind: str, path: str) -> None:
        """Called after an output file is written."""
        pass

    def on_run_end(self, run_id: int | None, status: str) -> None:
        """Called when the command finishes ('completed', 'failed' or 'verify_failed')."""
        pass
