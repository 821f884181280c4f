"""
Command-line entry point for the causal QA pipeline.

Usage:
    python -m backend.causalqa.pipeline <subcommand> --config pipeline.cfg [--seed N]

Exit status is 0 on success, 1 on a usage error and 2 on a data or
configuration error.
"""
import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn, Optional

from backend.causalqa.exceptions import PipelineError, UsageError
from backend.causalqa.models.embedding import TrainMode
from backend.causalqa.pipeline.stages import STAGES
from backend.causalqa.services.alignment_service import ALIGN_MODES
from backend.causalqa.services.config_service import ConfigService
from backend.causalqa.services.evaluation_service import SCORING_MODELS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# Subcommands that take --mode: (choices, default)
MODES = {
    "train-embed": (tuple(mode.value for mode in TrainMode), TrainMode.CAUSAL.value),
    "train-align": (ALIGN_MODES, "causal"),
}


class PipelineArgumentParser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(message)


def build_parser() -> PipelineArgumentParser:
    """The subcommand parser."""
    parser = PipelineArgumentParser(
        prog="causal-qa",
        description="Causal tuple extraction, causal embeddings and answer reranking",
    )
    subparsers = parser.add_subparsers(dest="command", parser_class=PipelineArgumentParser)
    for name, stage in STAGES.items():
        subparser = subparsers.add_parser(name, help=(stage.__doc__ or "").strip().splitlines()[0])
        subparser.add_argument("--config", required=True, type=Path, help="Pipeline configuration file")
        subparser.add_argument("--seed", type=int, default=None, help="Override the configured seed")
        subparser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
        if name in MODES:
            choices, default = MODES[name]
            subparser.add_argument("--mode", choices=choices, default=default)
        if name == "score-pairs":
            subparser.add_argument("--model", choices=SCORING_MODELS, required=True)
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run exactly one pipeline stage.

    Args:
        argv: Command-line arguments without the program name

    Returns:
        The exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
    except UsageError as e:
        parser.print_usage(sys.stderr)
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = ConfigService().load_config(args.config, args.command, args.seed)
        option = getattr(args, "mode", None) or getattr(args, "model", None)
        logger.info(f"Running {args.command}" + (f" ({option})" if option else ""))
        written = STAGES[args.command](config, option)
        logger.info(f"{args.command} finished, wrote {written}")
        return EXIT_OK
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except (PipelineError, ValueError, RuntimeError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_DATA
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        return EXIT_DATA


def main() -> int:
    """Configure logging and run the command line."""
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
