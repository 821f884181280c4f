"""
QA repositories: question datasets, feature dumps, reranked lists and
per-question correctness vectors.
"""
import logging
from pathlib import Path
from typing import Optional

from backend.causalqa.exceptions import DataFormatError
from backend.causalqa.models.qa import MIN_CANDIDATES, QACandidate, QAQuestion
from backend.causalqa.repositories.base import BaseRepository
from backend.causalqa.repositories.file_store import file_store, format_float

logger = logging.getLogger(__name__)

FIXED_DUMP_COLUMNS = ("qid", "candidate_index", "gold")


class QADatasetRepository(BaseRepository[list[QAQuestion]]):
    """
    Question datasets.

    Records are separated by blank lines. A record opens with
    `Q<TAB>question` and lists one `A<TAB>gold<TAB>cr_score<TAB>answer` line per
    candidate, with `-` for a missing CR score. Questions are numbered q1, q2, ...
    in file order; questions with fewer than four candidates are skipped.
    """

    def _candidate(self, fields: list[str], path: Path, line_number: int) -> QACandidate:
        if len(fields) != 4 or fields[0] != "A":
            raise DataFormatError("expected 'A<TAB>gold<TAB>cr_score<TAB>text'", path=str(path), line_number=line_number)
        if fields[1] not in ("0", "1"):
            raise DataFormatError("gold flag must be 0 or 1", path=str(path), line_number=line_number)
        cr_score: Optional[float] = None
        if fields[2] != "-":
            try:
                cr_score = float(fields[2])
            except ValueError as e:
                raise DataFormatError("cr_score must be a number or '-'", path=str(path), line_number=line_number) from e
        return QACandidate(text=fields[3], gold=fields[1] == "1", cr_score=cr_score)

    def load(self, path: Path) -> list[QAQuestion]:
        path = file_store.require(path)
        questions: list[QAQuestion] = []
        current: Optional[QAQuestion] = None
        ordinal = 0
        skipped = 0

        def close() -> None:
            nonlocal current, skipped
            if current is None:
                return
            if len(current.candidates) < MIN_CANDIDATES:
                skipped += 1
                logger.warning(
                    f"Skipping question {current.qid}: {len(current.candidates)} candidates, "
                    f"need {MIN_CANDIDATES}"
                )
            else:
                questions.append(current)
            current = None

        for line_number, line in enumerate(file_store.read_text(path).splitlines(), start=1):
            if not line.strip():
                close()
                continue
            fields = line.split("\t")
            if fields[0] == "Q":
                close()
                if len(fields) != 2:
                    raise DataFormatError("expected 'Q<TAB>question'", path=str(path), line_number=line_number)
                ordinal += 1
                current = QAQuestion(qid=f"q{ordinal}", text=fields[1])
            elif current is None:
                raise DataFormatError("answer line outside a question record", path=str(path), line_number=line_number)
            else:
                current.candidates.append(self._candidate(fields, path, line_number))
        close()

        logger.info(f"Loaded {len(questions)} questions from {path} ({skipped} skipped)")
        return questions

    def save(self, item: list[QAQuestion], path: Path) -> Path:
        lines = []
        for question in item:
            lines.append(f"Q\t{question.text}")
            for candidate in question.candidates:
                score = "-" if candidate.cr_score is None else format_float(candidate.cr_score)
                lines.append(f"A\t{int(candidate.gold)}\t{score}\t{candidate.text}")
            lines.append("")
        return file_store.write_text(path, "\n".join(lines) + ("\n" if lines else ""))


class FeatureDumpRepository(BaseRepository[list[QAQuestion]]):
    """
    Normalized feature tables: qid, candidate index, gold, then one column per
    feature as named in the header line.
    """

    def load(self, path: Path) -> list[QAQuestion]:
        path = file_store.require(path)
        lines = file_store.read_text(path).splitlines()
        if not lines:
            raise DataFormatError("empty feature file", path=str(path))
        header = lines[0].split("\t")
        if tuple(header[:3]) != FIXED_DUMP_COLUMNS:
            raise DataFormatError("header must start with qid, candidate_index, gold", path=str(path), line_number=1)
        names = header[3:]

        questions: dict[str, QAQuestion] = {}
        for line_number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} columns, found {len(fields)}", path=str(path), line_number=line_number
                )
            try:
                index = int(fields[1])
                values = [float(value) for value in fields[3:]]
            except ValueError as e:
                raise DataFormatError("non-numeric feature row", path=str(path), line_number=line_number) from e
            question = questions.setdefault(fields[0], QAQuestion(qid=fields[0], text=""))
            if index != len(question.candidates):
                raise DataFormatError("candidate indices must run from 0 in order", path=str(path), line_number=line_number)
            question.candidates.append(
                QACandidate(text="", gold=fields[2] == "1", features=dict(zip(names, values)))
            )
        return list(questions.values())

    def feature_names(self, path: Path) -> list[str]:
        """The feature columns named in a dump's header."""
        header = file_store.read_text(file_store.require(path)).split("\n", 1)[0]
        return header.split("\t")[3:]

    def save(self, item: list[QAQuestion], path: Path) -> Path:
        names: list[str] = []
        for question in item:
            for candidate in question.candidates:
                for name in candidate.features:
                    if name not in names:
                        names.append(name)
        rows = [[*FIXED_DUMP_COLUMNS, *names]]
        for question in item:
            for index, candidate in enumerate(question.candidates):
                values = [candidate.features.get(name) for name in names]
                rows.append(
                    [
                        question.qid,
                        str(index),
                        str(int(candidate.gold)),
                        *[format_float(0.5 if value is None else value) for value in values],
                    ]
                )
        return file_store.write_rows(path, rows)


class RerankedRepository(BaseRepository[list[tuple[str, list[QACandidate]]]]):
    """Reranked candidate lists: qid, rank, gold, candidate text."""

    def load(self, path: Path) -> list[tuple[str, list[QACandidate]]]:
        ranked: dict[str, list[QACandidate]] = {}
        for _, fields in file_store.read_rows(file_store.require(path), columns=4):
            ranked.setdefault(fields[0], []).append(QACandidate(text=fields[3], gold=fields[2] == "1"))
        return list(ranked.items())

    def save(self, item: list[tuple[str, list[QACandidate]]], path: Path) -> Path:
        rows = [
            [qid, str(rank), str(int(candidate.gold)), candidate.text]
            for qid, candidates in item
            for rank, candidate in enumerate(candidates, start=1)
        ]
        return file_store.write_rows(path, rows)


class CorrectnessRepository(BaseRepository[dict[str, int]]):
    """Per-question correctness: qid, 0 or 1."""

    def load(self, path: Path) -> dict[str, int]:
        correct = {}
        for line_number, fields in file_store.read_rows(file_store.require(path), columns=2):
            if fields[1] not in ("0", "1"):
                raise DataFormatError("correctness must be 0 or 1", path=str(path), line_number=line_number)
            correct[fields[0]] = int(fields[1])
        return correct

    def save(self, item: dict[str, int], path: Path) -> Path:
        return file_store.write_rows(path, [[qid, str(value)] for qid, value in item.items()])
