from rich.console import Console

console = Console()
error_console = Console(stderr=True, style="bold red")
log_console = Console(stderr=True)
