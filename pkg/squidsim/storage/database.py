"""
SQLite run ledger for squidsim.

Records each command invocation, the per-cell outcome of sweeps and the
files every run wrote, using stdlib sqlite3. The ledger is bookkeeping
only; nothing in it feeds back into computed results.
"""

import logging
import math
import sqlite3
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from squidsim.storage.models import CellRecord, RunRecord, SweepGrid

logger = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Database:
    """SQLite database manager for the run ledger."""

    def __init__(self, db_path: str) -> None:
        """
        Initialize database connection and create schema if needed.

        Args:
            db_path: Path to SQLite database file (or ':memory:' for in-memory)
        """
        self.db_path = db_path

        if db_path != ':memory:':
            Path(db_path).parent.mkdir(parents=True, exist_ok=True)

        self.conn = sqlite3.connect(db_path, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row
        self.conn.execute("PRAGMA journal_mode=WAL")

        self._create_schema()
        logger.info(f"Database initialized at {db_path}")

    def _create_schema(self) -> None:
        """Create all tables and indexes if they don't exist."""
        cursor = self.conn.cursor()

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS runs (
                run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                command TEXT NOT NULL,
                config_hash TEXT NOT NULL,
                start_time TEXT NOT NULL,
                end_time TEXT,
                status TEXT NOT NULL DEFAULT 'running',
                message TEXT NOT NULL DEFAULT ''
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS sweep_cells (
                run_id INTEGER NOT NULL,
                bias_index INTEGER NOT NULL,
                power_index INTEGER NOT NULL,
                bias REAL NOT NULL,
                power_dbm REAL NOT NULL,
                population REAL,
                provenance TEXT NOT NULL,
                error TEXT,
                PRIMARY KEY (run_id, bias_index, power_index),
                FOREIGN KEY (run_id) REFERENCES runs(run_id)
            )
        """)

        cursor.execute("""
            CREATE TABLE IF NOT EXISTS outputs (
                output_id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL,
                kind TEXT NOT NULL,
                path TEXT NOT NULL,
                FOREIGN KEY (run_id) REFERENCES runs(run_id)
            )
        """)

        cursor.execute("CREATE INDEX IF NOT EXISTS idx_outputs_run ON outputs(run_id)")
        self.conn.commit()

    def create_run(self, command: str, config_hash: str) -> int:
        """
        Start a new run record.

        Args:
            command: Command name ('levels', 'scan', 'sweep', 'verify')
            config_hash: SHA-256 of the effective configuration

        Returns:
            The new run_id
        """
        cursor = self.conn.execute(
            "INSERT INTO runs (command, config_hash, start_time) VALUES (?, ?, ?)",
            (command, config_hash, _now())
        )
        self.conn.commit()
        run_id = cursor.lastrowid
        logger.info(f"Created run {run_id} for '{command}'")
        return run_id

    def end_run(self, run_id: int, status: str, message: str = "") -> None:
        """Mark a run as finished with its final status."""
        self.conn.execute(
            "UPDATE runs SET end_time = ?, status = ?, message = ? WHERE run_id = ?",
            (_now(), status, message, run_id)
        )
        self.conn.commit()
        logger.info(f"Run {run_id} ended with status '{status}'")

    def _row_to_run(self, row) -> RunRecord:
        return RunRecord(
            run_id=row['run_id'],
            command=row['command'],
            config_hash=row['config_hash'],
            start_time=row['start_time'],
            end_time=row['end_time'],
            status=row['status'],
            message=row['message'],
        )

    def get_run(self, run_id: int) -> RunRecord | None:
        row = self.conn.execute("SELECT * FROM runs WHERE run_id = ?", (run_id,)).fetchone()
        return self._row_to_run(row) if row else None

    def get_runs(self, command: str | None = None) -> list[RunRecord]:
        """All runs in creation order, optionally filtered by command."""
        if command is None:
            cursor = self.conn.execute("SELECT * FROM runs ORDER BY run_id")
        else:
            cursor = self.conn.execute("SELECT * FROM runs WHERE command = ? ORDER BY run_id", (command,))
        return [self._row_to_run(row) for row in cursor.fetchall()]

    def save_sweep_cells(self, run_id: int, grid: SweepGrid) -> None:
        """
        Store every cell of a sweep grid; NaN populations are stored as NULL.

        Args:
            run_id: Run the grid belongs to
            grid: Completed sweep grid
        """
        rows = []
        for (i, j), value in np.ndenumerate(grid.populations):
            rows.append((
                run_id,
                i,
                j,
                float(grid.biases[i]),
                float(grid.powers[j]),
                None if math.isnan(value) else float(value),
                str(grid.provenance[i, j]),
                grid.failures.get((i, j)),
            ))
        self.conn.executemany("""
            INSERT OR REPLACE INTO sweep_cells (
                run_id, bias_index, power_index, bias, power_dbm, population, provenance, error
            ) VALUES (?, ?, ?, ?, ?, ?, ?, ?)
        """, rows)
        self.conn.commit()
        logger.debug(f"Saved {len(rows)} sweep cells for run {run_id}")

    def get_sweep_cells(self, run_id: int) -> list[CellRecord]:
        """Cells of a run in (bias_index, power_index) order."""
        cursor = self.conn.execute(
            "SELECT * FROM sweep_cells WHERE run_id = ? ORDER BY bias_index, power_index",
            (run_id,)
        )
        return [
            CellRecord(
                run_id=row['run_id'],
                bias_index=row['bias_index'],
                power_index=row['power_index'],
                bias=row['bias'],
                power_dbm=row['power_dbm'],
                population=row['population'],
                provenance=row['provenance'],
                error=row['error'],
            )
            for row in cursor.fetchall()
        ]

    def save_output(self, run_id: int, kind: str, path: str) -> None:
        self.conn.execute("INSERT INTO outputs (run_id, kind, path) VALUES (?, ?, ?)", (run_id, kind, path))
        self.conn.commit()

    def get_outputs(self, run_id: int) -> list[tuple[str, str]]:
        """(kind, path) pairs in the order they were written."""
        cursor = self.conn.execute(
            "SELECT kind, path FROM outputs WHERE run_id = ? ORDER BY output_id", (run_id,)
        )
        return [(row['kind'], row['path']) for row in cursor.fetchall()]

    def close(self) -> None:
        """Close the database connection."""
        self.conn.close()
        logger.info("Database connection closed")

    def __enter__(self):
        """Context manager entry."""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit."""
        self.close()
