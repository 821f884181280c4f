"""
Exception hierarchy for the causal QA pipeline.
"""
from typing import Optional


class PipelineError(Exception):
    """Root of every error raised deliberately by the pipeline."""


class DataFormatError(PipelineError, ValueError):
    """An input file or record could not be understood."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line_number: Optional[int] = None,
    ):
        self.detail = message
        self.path = path
        self.line_number = line_number
        location = ""
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        elif line_number is not None:
            location = f"line {line_number}: "
        super().__init__(f"{location}{message}")


class CorpusStructureError(DataFormatError):
    """A parsed sentence violates the dependency-tree invariants."""


class ConfigError(PipelineError, ValueError):
    """The pipeline configuration is invalid or incomplete."""

    def __init__(self, problems: list[str], path: Optional[str] = None):
        self.problems = problems
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + "; ".join(problems))


class TrainingError(PipelineError, RuntimeError):
    """A model could not be trained from the data it was given."""


class UsageError(PipelineError):
    """The command line could not be understood."""


def with_path(error: DataFormatError, path: str) -> DataFormatError:
    """A copy of a format error that also names the file it came from."""
    return type(error)(error.detail, path=path, line_number=error.line_number)
