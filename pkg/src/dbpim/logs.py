import logging
import os

from rich.console import Console
from rich.logging import RichHandler


LOG_LEVEL_ENV = "DBPIM_LOG_LEVEL"


def setup_logging(level: str | int | None = None, console: Console | None = None) -> None:
    """
    Configures the `dbpim` logger with a rich handler.

    Args:
        level: Explicit level. Falls back to the `DBPIM_LOG_LEVEL` environment variable, then `WARNING`.
        console: Console to log to. Defaults to a stderr console.
    """

    if level is None:
        level = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()

    logger = logging.getLogger("dbpim")
    logger.handlers.clear()
    logger.addHandler(RichHandler(console=console or Console(stderr=True), show_path=False, markup=False))
    logger.setLevel(level)
    logger.propagate = False
