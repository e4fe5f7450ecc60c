import logging
from typing import Optional, Union

from rich.logging import RichHandler

from featguard.common.console import log_console
from featguard.common.constants import PACKAGE_NAME

_handler: Optional[RichHandler] = None


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def configure_logging(level: Union[int, str] = logging.WARNING):
    global _handler
    root = logging.getLogger(PACKAGE_NAME)
    if _handler is None:
        _handler = RichHandler(console=log_console, show_path=False, rich_tracebacks=False)
        _handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(_handler)
        root.propagate = False

    root.setLevel(level.upper() if isinstance(level, str) else level)
