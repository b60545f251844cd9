"""`--config` files: UTF-8 `key=value` lines whose keys are flag names.

Values from the file are appended to the command line for flags that were
not given explicitly, so explicit flags always win.
"""

from pathlib import Path

from loguru import logger

from app.services.exceptions import InvalidInputError

CONFIG_FLAG = "--config"


def parse_config_file(path: Path) -> dict[str, str]:
    """Key/value pairs of a config file; blank lines and `#` comments are skipped.

    Raises:
        InvalidInputError: If the file is missing or a line has no `=`.
    """
    if not path.is_file():
        msg = f"Config file {path} does not exist."
        raise InvalidInputError(msg)
    values: dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            msg = f"{path}:{number}: expected key=value, got {line!r}."
            raise InvalidInputError(msg)
        values[key.strip().lstrip("-").replace("_", "-")] = value.strip()
    return values


def _config_path(argv: list[str]) -> Path | None:
    for index, arg in enumerate(argv):
        if arg == CONFIG_FLAG and index + 1 < len(argv):
            return Path(argv[index + 1])
        if arg.startswith(f"{CONFIG_FLAG}="):
            return Path(arg.split("=", 1)[1])
    return None


def _given_flags(argv: list[str]) -> set[str]:
    return {arg[2:].split("=", 1)[0] for arg in argv if arg.startswith("--")}


def expand_config(argv: list[str], command_flags: dict[str, set[str]]) -> list[str]:
    """Append the config file's values for flags of the selected command that are not set.

    Args:
        argv: Arguments after the program name, the command first.
        command_flags: Flag names (kebab case, without dashes) of every command.
    """
    if not argv or argv[0] not in command_flags:
        return argv
    path = _config_path(argv)
    if path is None:
        return argv

    flags = command_flags[argv[0]]
    given = _given_flags(argv)
    expanded = list(argv)
    for key, value in parse_config_file(path).items():
        if key not in flags:
            logger.warning(f"Ignoring {key!r} from {path}: not a flag of {argv[0]!r}.")
            continue
        if key in given:
            continue
        expanded.extend([f"--{key}", value])
    return expanded
