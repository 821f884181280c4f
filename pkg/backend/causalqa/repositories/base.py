"""
Base repository interface for file-backed artifacts.
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Generic, TypeVar

T = TypeVar("T")


class BaseRepository(Generic[T], ABC):
    """
    Base repository interface for reading and writing one artifact format.
    """

    @abstractmethod
    def load(self, path: Path) -> T:
        """
        Load an artifact.

        Args:
            path: The file to read

        Returns:
            The loaded artifact
        """

    @abstractmethod
    def save(self, item: T, path: Path) -> Path:
        """
        Write an artifact.

        Args:
            item: The artifact to write
            path: The destination file

        Returns:
            The path written
        """
