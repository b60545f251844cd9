"""Command line of the speaker verification pipeline."""

from app.controller.cli.main import run_cli

__all__ = ["run_cli"]
