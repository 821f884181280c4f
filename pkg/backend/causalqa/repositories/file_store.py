"""
File access manager shared by every repository.
"""
import logging
from pathlib import Path
from typing import NoReturn

from backend.causalqa.exceptions import DataFormatError

logger = logging.getLogger(__name__)


class FileStoreManager:
    """
    Reads and writes UTF-8 text artifacts and maps I/O failures onto pipeline errors.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def read_text(self, path: Path) -> str:
        """
        Read a whole UTF-8 file.

        Args:
            path: The file to read

        Returns:
            The file contents
        """
        try:
            return Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            self.handle_error("read", path, e)

    def write_text(self, path: Path, text: str) -> Path:
        """
        Write a UTF-8 file with Unix newlines, creating parent directories.

        Args:
            path: The destination file
            text: The contents

        Returns:
            The path written
        """
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as e:
            self.handle_error("write", path, e)
        logger.debug(f"Wrote {len(text)} characters to {path}")
        return path

    def read_rows(self, path: Path, columns: int) -> list[tuple[int, list[str]]]:
        """
        Read a tab-separated file, skipping blank and '#' lines.

        Args:
            path: The file to read
            columns: The exact number of columns expected per row

        Returns:
            A list of (line number, fields) tuples
        """
        rows = []
        for line_number, line in enumerate(self.read_text(path).splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != columns:
                raise DataFormatError(
                    f"expected {columns} tab-separated columns, found {len(fields)}",
                    path=str(path),
                    line_number=line_number,
                )
            rows.append((line_number, fields))
        return rows

    def write_rows(self, path: Path, rows: list[list[str]]) -> Path:
        """Write rows as tab-separated lines."""
        text = "".join("\t".join(row) + "\n" for row in rows)
        return self.write_text(path, text)

    def require(self, path: Path) -> Path:
        """
        Check that an input file exists.

        Raises:
            DataFormatError: If the file is missing
        """
        path = Path(path)
        if not path.is_file():
            logger.error(f"Missing input file: {path}")
            raise DataFormatError("file not found", path=str(path))
        return path

    def handle_error(self, operation: str, path: Path, error: Exception) -> NoReturn:
        """
        Handle file access errors.

        Args:
            operation: The operation being performed
            path: The file involved
            error: The error that occurred

        Raises:
            DataFormatError: Always, naming the file
        """
        if isinstance(error, FileNotFoundError):
            logger.error(f"File {operation} error: {path} not found")
            raise DataFormatError("file not found", path=str(path)) from error
        if isinstance(error, UnicodeDecodeError):
            logger.error(f"File {operation} error: {path} is not valid UTF-8")
            raise DataFormatError("not valid UTF-8", path=str(path)) from error
        logger.error(f"File {operation} error on {path}: {error!s}")
        raise DataFormatError(f"cannot {operation}: {error!s}", path=str(path)) from error


# Singleton instance
file_store = FileStoreManager()


def format_float(value: float) -> str:
    """Fixed-precision rendering used by every numeric TSV column."""
    return f"{value:.6f}"


def format_prob(value: float) -> str:
    """Significant-digit rendering for probabilities that may be tiny."""
    return f"{value:.10g}"
