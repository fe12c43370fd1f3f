"""Command-line entry point."""

from distillkit.cli.logs import JsonFormatter, configure_logging
from distillkit.cli.main import RUNTIME_ERROR, USAGE_ERROR, cli, main

__all__ = ["RUNTIME_ERROR", "USAGE_ERROR", "JsonFormatter", "cli", "configure_logging", "main"]
