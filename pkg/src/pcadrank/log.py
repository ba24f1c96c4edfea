import logging

from rich.console import Console
from rich.logging import RichHandler

# stdout stays free for reports and summaries
stderr_console = Console(stderr=True)

_configured = False


def configure_logging(level: str = "INFO") -> None:
    global _configured
    root = logging.getLogger("pcadrank")
    root.setLevel(level.upper())
    if not _configured:
        handler = RichHandler(console=stderr_console, show_path=False, rich_tracebacks=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        root.addHandler(handler)
        root.propagate = False
        _configured = True
