"""
Configuration service: loading the flat `key = value` pipeline configuration.
"""
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from backend.causalqa.exceptions import ConfigError
from backend.causalqa.models.config import PipelineConfig
from backend.causalqa.repositories.file_store import file_store

logger = logging.getLogger(__name__)

SEEDED_COMMANDS = frozenset(
    {"train-embed", "train-align", "train-rank", "eval-qa", "score-pairs", "significance"}
)
# Keys each command cannot run without, beyond the seed.
REQUIRED_KEYS: dict[str, tuple[str, ...]] = {
    "extract": ("corpus",),
    "weight": ("corpus",),
    "score-pairs": ("labeled_pairs",),
    "qa-features": ("qa_dataset",),
}
PATH_KEYS = ("corpus", "grammar", "lemma_table", "labeled_pairs", "qa_dataset", "qa_parallel")


class ConfigService:
    """
    Configuration service for the pipeline stages.
    """

    def parse(self, text: str, source: str = "<config>") -> dict[str, str]:
        """
        Parse `key = value` lines.

        Args:
            text: The configuration text
            source: Name used in messages

        Returns:
            The raw values; for a repeated key the last value wins

        Raises:
            ConfigError: On a line without '='
        """
        values: dict[str, str] = {}
        problems = []
        for line_number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, separator, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not separator or not key:
                problems.append(f"line {line_number}: expected 'key = value'")
                continue
            if key in values:
                logger.warning(f"{source}:{line_number}: duplicate key {key!r}, last value wins")
            values[key] = value
        if problems:
            raise ConfigError(problems, path=source)
        return values

    def build(
        self,
        values: dict[str, str],
        command: Optional[str] = None,
        seed: Optional[int] = None,
        source: str = "<config>",
        base_dir: Optional[Path] = None,
    ) -> PipelineConfig:
        """
        Validate raw values into a PipelineConfig.

        Relative paths resolve against base_dir. Unknown keys are logged and
        ignored; every missing or invalid key is reported in one error.

        Args:
            values: Raw key/value pairs
            command: Subcommand whose required keys are checked
            seed: Seed overriding the configured one
            source: Name used in messages
            base_dir: Directory relative paths are resolved against

        Returns:
            The configuration

        Raises:
            ConfigError: Listing every problem found
        """
        known = set(PipelineConfig.__fields__)
        for key in values:
            if key not in known:
                logger.warning(f"{source}: unknown key {key!r} ignored")
        fields: dict[str, object] = {key: value for key, value in values.items() if key in known}
        if seed is not None:
            fields["seed"] = seed
        if base_dir is not None:
            for key in (*PATH_KEYS, "output_dir", "model_dir"):
                if key in fields:
                    fields[key] = str(base_dir / Path(str(fields[key])))

        problems = []
        if command is not None:
            required = list(REQUIRED_KEYS.get(command, ()))
            if command in SEEDED_COMMANDS:
                required.append("seed")
            for key in required:
                if fields.get(key) in (None, ""):
                    problems.append(f"missing required key {key!r} for {command}")

        config = None
        try:
            config = PipelineConfig(**fields)
        except ValidationError as e:
            for error in e.errors():
                location = ".".join(str(part) for part in error["loc"])
                problems.append(f"invalid value for {location!r}: {error['msg']}")

        if problems or config is None:
            logger.error(f"{source}: {len(problems)} configuration problem(s)")
            raise ConfigError(problems, path=source)
        return config

    def load_config(
        self,
        path: Path,
        command: Optional[str] = None,
        seed: Optional[int] = None,
    ) -> PipelineConfig:
        """
        Load and validate a configuration file.

        Args:
            path: The configuration file
            command: Subcommand whose required keys are checked
            seed: Seed overriding the configured one

        Returns:
            The configuration
        """
        path = Path(path)
        values = self.parse(file_store.read_text(path), source=str(path))
        config = self.build(values, command, seed, source=str(path), base_dir=path.parent)
        logger.info(f"Loaded configuration from {path}")
        return config
