"""
Storage layer for squidsim.

Provides the dataclasses shared across the project and the SQLite run ledger.
"""

from squidsim.storage.database import Database
from squidsim.storage.models import (
    CellRecord,
    CircuitParams,
    DecoherenceRates,
    DriveParams,
    FourLevelModel,
    LevelDiagram,
    PowerCalibration,
    RunConfig,
    RunRecord,
    SweepGrid,
    SweepSpec,
)

__all__ = [
    "Database",
    "CellRecord",
    "CircuitParams",
    "DecoherenceRates",
    "DriveParams",
    "FourLevelModel",
    "LevelDiagram",
    "PowerCalibration",
    "RunConfig",
    "RunRecord",
    "SweepGrid",
    "SweepSpec",
]
