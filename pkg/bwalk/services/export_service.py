"""
Export Service for the bwalk sampler

This module writes run reports to disk:
- JSON report with configuration echo, diagnostics and checks
- CSV sample matrix (one row per sample, one column per coordinate) for
  external plotting, one file per chain of a scenario report

Design Principles:
- Floats are written with 17 significant digits so samples survive a
  text round trip
- Filesystem errors surface as ReportWriteError
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from bwalk.core.exceptions import ReportWriteError
from bwalk.schemas.sampling import RunReport

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
INDEX_LABEL = "sample"


class ReportFormat(str, Enum):
    """Export format types"""
    JSON = "json"
    CSV = "csv"


class ExportService:
    """
    Report export service

    Features:
    - JSON reports (full model dump)
    - CSV sample matrices via pandas
    - CSV re-ingest for round-trip checks
    """

    def to_json(self, report: RunReport) -> str:
        """Full report as indented JSON"""
        return json.dumps(report.model_dump(mode="json"), indent=2)

    def samples_frame(self, samples: Optional[Sequence[Sequence[float]]]) -> pd.DataFrame:
        """Sample matrix with columns x1..xn and a 'sample' index"""
        points = np.asarray(samples if samples else [], dtype=float)
        if points.size == 0:
            frame = pd.DataFrame()
        else:
            points = points.reshape(points.shape[0], -1)
            columns = [f"x{i + 1}" for i in range(points.shape[1])]
            frame = pd.DataFrame(points, columns=columns)
        frame.index.name = INDEX_LABEL
        return frame

    def emit_report(
        self,
        report: RunReport,
        format: Union[ReportFormat, str],
        path: Union[str, Path],
    ) -> List[Path]:
        """
        Write the report and return the files created.

        JSON writes one file at `path`. CSV writes the report's own samples
        to `path`, or, for scenario reports, one `<stem>_<run>.csv` per
        nested run that kept its samples; a report without samples still
        gets an empty CSV at `path`.
        """
        format = ReportFormat(format)
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if format == ReportFormat.JSON:
                path.write_text(self.to_json(report), encoding="utf-8")
                written = [path]
            else:
                written = self._write_csv(report, path)
        except OSError as e:
            logger.error(f"Error writing report to {path}: {e}")
            raise ReportWriteError(f"cannot write report to {path}: {e}") from e

        logger.info(f"Wrote {format.value} report: {', '.join(str(p) for p in written)}")
        return written

    def _write_csv(self, report: RunReport, path: Path) -> List[Path]:
        targets = []
        if report.samples is not None or not report.runs:
            targets.append((path, report.samples))
        for name, run in report.runs.items():
            if run.samples is not None:
                targets.append((path.with_name(f"{path.stem}_{name}{path.suffix or '.csv'}"),
                                run.samples))
        if not targets:
            targets.append((path, None))

        for target, samples in targets:
            self.samples_frame(samples).to_csv(target, float_format=CSV_FLOAT_FORMAT)
        return [target for target, _ in targets]

    def read_samples_csv(self, path: Union[str, Path]) -> np.ndarray:
        """Sample matrix back from a CSV written by emit_report"""
        try:
            frame = pd.read_csv(path, index_col=INDEX_LABEL, float_precision="round_trip")
        except (OSError, ValueError) as e:
            raise ReportWriteError(f"cannot read samples from {path}: {e}") from e
        return frame.to_numpy(dtype=float)


# Global export service instance
_export_service: Optional[ExportService] = None


def get_export_service() -> ExportService:
    """Get or create global export service instance"""
    global _export_service

    if _export_service is None:
        _export_service = ExportService()

    return _export_service
