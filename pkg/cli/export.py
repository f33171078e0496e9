"""
Export Module

Writes histograms, trajectory records and reports as plot-ready files,
each carrying the run configuration and seed as provenance.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

import config
from fock.histogram import CountHistogram

logger = logging.getLogger(__name__)


def _to_builtin(value):
    """json default hook for numpy scalars and arrays."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def dumps(payload, indent: Optional[int] = None) -> str:
    return json.dumps(payload, sort_keys=True, indent=indent, default=_to_builtin)


class OutputWriter:
    """Writes the files of one run into a single directory.

    Output is deterministic: no timestamps, sorted JSON keys, and floats
    written with round-trip precision.
    """

    def __init__(self, output_dir: str, provenance: Dict[str, object], output_format: str = config.OUTPUT_FORMAT) -> None:
        """Initialize the writer.

        Args:
            output_dir: Directory for every file of the run (created if missing).
            provenance: Full run configuration; must contain "seed".
            output_format: "csv" or "json" for histogram and table files.

        Raises:
            OSError: If the directory cannot be created.
        """
        if output_format not in ("csv", "json"):
            raise ValueError(f"output_format must be 'csv' or 'json', got {output_format!r}")
        self.output_dir = Path(output_dir)
        self.provenance = dict(provenance)
        self.output_format = output_format
        self.written: List[Path] = []
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Cannot create output directory {self.output_dir}: {e}", exc_info=True)
            raise
        logger.debug(f"OutputWriter initialized: dir={self.output_dir}, format={output_format}")

    def _path(self, name: str) -> Path:
        path = self.output_dir / name
        if self.output_format == "json" and path.suffix == ".csv":
            path = path.with_suffix(".json")
        return path

    def _header(self, columns: Sequence[str]) -> str:
        return "\n".join([f"config: {dumps(self.provenance)}",
                          f"seed: {self.provenance.get('seed')}",
                          ",".join(columns)])

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name: str, columns: Sequence[str], rows: np.ndarray,
                    formats: Optional[Sequence[str]] = None) -> Path:
        """Write a numeric table as CSV (or as a JSON object of columns)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size and rows.shape[1] != len(columns):
            raise ValueError(f"{len(columns)} columns but rows have width {rows.shape[1]}")
        path = self._path(name)
        if self.output_format == "json":
            payload = {"config": self.provenance, "seed": self.provenance.get("seed"),
                       "columns": {c: rows[:, i].tolist() for i, c in enumerate(columns)}}
            path.write_text(dumps(payload, indent=2) + "\n", encoding="utf-8")
        else:
            fmt = list(formats) if formats is not None else [config.FLOAT_FORMAT] * len(columns)
            np.savetxt(path, rows, fmt=fmt, delimiter=",", header=self._header(columns), comments="# ")
        return self._record(path)

    def write_histogram(self, name: str, histogram: CountHistogram) -> Path:
        """Write value,probability rows of a histogram."""
        return self.write_table(name, [histogram.label, "probability"], histogram.rows(),
                                formats=["%d", config.FLOAT_FORMAT])

    def write_json(self, name: str, payload: Dict[str, object]) -> Path:
        path = self.output_dir / name
        body = dict(payload)
        body["config"] = self.provenance
        path.write_text(dumps(body, indent=2) + "\n", encoding="utf-8")
        return self._record(path)

    def write_jsonl(self, name: str, records: Iterable[Dict[str, object]]) -> Path:
        """One JSON object per line; the first line is the provenance record."""
        path = self.output_dir / name
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(dumps({"config": self.provenance, "seed": self.provenance.get("seed")}) + "\n")
            for record in records:
                handle.write(dumps(record) + "\n")
        return self._record(path)
