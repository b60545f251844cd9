import sys

from app.controller.cli import run_cli


def main() -> None:
    """Entrypoint of the application."""
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
