import sys

from loguru import logger
from pydantic import ValidationError
from pydantic_settings import CliApp, SettingsError

from app.controller.cli.commands import Ge2eCli, command_flags
from app.controller.cli.config_file import expand_config
from app.core.logger import configure_logging
from app.db.exceptions import ElementNotFoundError, FormatError, ManifestError
from app.services.exceptions import InvalidInputError, NumericalError

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# First matching class wins.
EXIT_CODES: tuple[tuple[type[BaseException], int], ...] = (
    (NumericalError, EXIT_NUMERICAL),
    (InvalidInputError, EXIT_VALIDATION),
    (ManifestError, EXIT_VALIDATION),
    (FormatError, EXIT_VALIDATION),
    (ElementNotFoundError, EXIT_VALIDATION),
    (ValidationError, EXIT_VALIDATION),
    (SettingsError, EXIT_VALIDATION),
    (FileNotFoundError, EXIT_VALIDATION),
)


def exit_code(error: BaseException) -> int:
    """Exit code of an error raised by a command."""
    for error_type, code in EXIT_CODES:
        if isinstance(error, error_type):
            return code
    return EXIT_UNEXPECTED


def run_cli(argv: list[str] | None = None) -> int:
    """Run one `ge2e` command and return its exit code.

    Args:
        argv: Arguments without the program name; defaults to `sys.argv[1:]`.
    """
    configure_logging()
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        CliApp.run(Ge2eCli, cli_args=expand_config(args, command_flags()))
    except SystemExit as error:
        # argparse exits on --help and on usage errors.
        return error.code if isinstance(error.code, int) else EXIT_VALIDATION
    except Exception as error:  # noqa: BLE001
        code = exit_code(error)
        if code == EXIT_UNEXPECTED:
            logger.exception(f"Command failed: {error}")
        else:
            logger.error(f"{type(error).__name__}: {error}")
        return code
    return EXIT_OK
