"""
Report repositories: PR curves and evaluation summaries.
"""
import logging
from pathlib import Path
from typing import Optional

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.evaluation import PRPoint
from backend.causalqa.repositories.base import BaseRepository
from backend.causalqa.repositories.file_store import file_store, format_float

logger = logging.getLogger(__name__)

SummaryRow = tuple[str, float, Optional[float]]


class PRCurveRepository(BaseRepository[list[PRPoint]]):
    """PR curves: cutoff, precision, recall."""

    def load(self, path: Path) -> list[PRPoint]:
        points = []
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=3):
            try:
                points.append(
                    PRPoint(rank_cutoff=int(fields[0]), precision=float(fields[1]), recall=float(fields[2]))
                )
            except ValueError as e:
                raise DataFormatError(f"invalid PR point: {e}", path=str(path), line_number=line_number) from e
        return points

    def save(self, item: list[PRPoint], path: Path) -> Path:
        rows = [[str(p.rank_cutoff), format_float(p.precision), format_float(p.recall)] for p in item]
        return file_store.write_rows(path, rows)


class SummaryRepository(BaseRepository[list[SummaryRow]]):
    """
    Evaluation summaries: system, P@1, p-value against the baseline ('-' if none).

    Saving merges with an existing summary, replacing rows of the same system.
    """

    def load(self, path: Path) -> list[SummaryRow]:
        rows: list[SummaryRow] = []
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=3):
            try:
                p_value = None if fields[2] == "-" else float(fields[2])
                rows.append((fields[0], float(fields[1]), p_value))
            except ValueError as e:
                raise DataFormatError("invalid summary row", path=str(path), line_number=line_number) from e
        return rows

    def save(self, item: list[SummaryRow], path: Path) -> Path:
        merged = {}
        if Path(path).is_file():
            merged = {row[0]: row for row in self.load(path)}
        for row in item:
            merged[row[0]] = row
        lines = [
            [system, format_float(precision), "-" if p_value is None else format_float(p_value)]
            for system, precision, p_value in merged.values()
        ]
        return file_store.write_rows(path, lines)
