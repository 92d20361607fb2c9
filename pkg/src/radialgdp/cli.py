"""
Command line interface: `radialgdp <stage> [--config FILE] [--<field> VALUE ...]`.

Every `PipelineConfig` field is also a flag (`phi_z` becomes `--phi-z`); a flag wins over
the value in the config file. Exit codes: 0 on success, 2 for configuration errors,
3 for data errors, 4 for numerical failures.
"""

import argparse
import logging
import sys
import typing
from typing import Any, Callable, Optional, Sequence

from pydantic import BaseModel

from . import pipeline
from .config import PipelineConfig, load_config
from .errors import RadialGdpError
from .reports import EvaluationReport, ReleaseReport, VerificationSuite

try:
    from rich.console import Console
    from rich.logging import RichHandler
    from rich.table import Table
except ImportError:
    Console, RichHandler, Table = None, None, None

logger = logging.getLogger("radialgdp")

EXIT_OK = 0
EXIT_DATA = 3


def _stage_commands() -> dict[str, tuple[str, Callable[[PipelineConfig], Any]]]:
    return {
        "generate": ("Write a synthetic face dataset.", pipeline.run_generate),
        "preprocess": (
            "Normalize and align the input surfaces.",
            pipeline.run_preprocess,
        ),
        "extract": ("Extract radial curves from the aligned surfaces.", pipeline.run_extract),
        "sanitize": (
            "Release the private functional mean.",
            pipeline.run_sanitize_pipeline,
        ),
        "baseline": ("Release the point-wise baseline.", pipeline.run_baseline),
        "evaluate": ("Score the private estimates.", pipeline.run_evaluate),
        "verify": ("Check the privacy loss by simulation.", pipeline.run_verify),
        "demo": ("Run every stage on a synthetic dataset.", pipeline.run_demo),
        "config": ("Print the effective configuration as JSON.", lambda config: config),
    }


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="Flat JSON config file.")
    for name, field in PipelineConfig.model_fields.items():
        flag = "--" + name.replace("_", "-")
        kwargs: dict[str, Any] = {"dest": name, "default": argparse.SUPPRESS}
        if field.annotation is bool:
            kwargs["action"] = argparse.BooleanOptionalAction
        elif typing.get_origin(field.annotation) is tuple:
            kwargs["nargs"] = "+"
        # Values stay strings here; the pydantic model converts and validates them.
        parser.add_argument(flag, help=field.description, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialgdp",
        description="Gaussian differentially private means of face radial curves.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings only.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, _) in _stage_commands().items():
        _add_config_flags(subparsers.add_parser(name, help=help_text))
    return parser


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    if RichHandler is not None:
        handler: logging.Handler = RichHandler(
            console=Console(stderr=True), show_path=verbose
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
    else:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def _print_summary(result: Any) -> None:
    match result:
        case PipelineConfig():
            print(result.model_dump_json(indent=2))
        case pipeline.DemoResult():
            _print_summary(result.release)
            _print_summary(result.evaluation)
            _print_summary(result.verification)
        case EvaluationReport() if Table is not None:
            table = Table(title=f"MSE (values at E{result.scale_exponent:03d})")
            table.add_column("Comparison")
            table.add_column("MSE", justify="right")
            for label, value in result.render_table():
                table.add_row(label, value)
            Console().print(table)
        case EvaluationReport():
            for label, value in result.render_table():
                print(f"{label}\t{value}")
        case ReleaseReport():
            print(f"mu_total = {result.mu_total:.4f} over {len(result.releases)} releases")
        case VerificationSuite():
            violations = sum(report.has_violation for report in result.pairs)
            print(f"{len(result.pairs)} adjacent pairs verified, {violations} violations")
        case list() if all(isinstance(item, BaseModel) for item in result):
            for item in result:
                print(item.model_dump_json())
        case list():
            print(f"{len(result)} files written")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    setup_logging(args.pop("verbose"), args.pop("quiet"))
    command = args.pop("command")
    config_path = args.pop("config")
    _, run = _stage_commands()[command]
    try:
        config = load_config(config_path, **args)
        result = run(config)
    except RadialGdpError as e:
        logger.error(str(e))
        logger.debug("Traceback:", exc_info=True)
        return e.exit_code
    except OSError as e:
        logger.error(f"Filesystem error: {e}")
        return EXIT_DATA
    _print_summary(result)
    return EXIT_OK


def run() -> None:
    sys.exit(main())
