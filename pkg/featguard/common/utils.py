from contextlib import contextmanager

import typer

from .console import error_console
from .errors import FeatguardError


@contextmanager
def pretty_errors():
    try:
        yield

    except FeatguardError as e:
        error_console.print(e)
        raise typer.Exit(e.exit_code)
