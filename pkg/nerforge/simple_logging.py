import sys
from typing import Any

LEVELS = {"debug": 10, "info": 20, "warning": 30, "error": 40}

_level = LEVELS["info"]


def set_log_level(name: str) -> None:
    global _level  # noqa: PLW0603
    if name not in LEVELS:
        raise ValueError("Unknown log level " + name + ", expected one of " + ", ".join(LEVELS))
    _level = LEVELS[name]


def get_log_level() -> str:
    return next(name for name, value in LEVELS.items() if value == _level)


def eprint(*args: Any, **kwargs: Any) -> None:
    """
    A logger with differnt log handlers felt overkill for this project.
    So we just have one logger that logs to stderr, filtered by a single
    process wide level which the CLI sets with --log-level.
    """
    if _level <= LEVELS["info"]:
        print(*args, file=sys.stderr, **kwargs)  # noqa: T201


def debug_print(*args: Any, **kwargs: Any) -> None:
    if _level <= LEVELS["debug"]:
        print(*args, file=sys.stderr, **kwargs)  # noqa: T201


def warn_print(*args: Any, **kwargs: Any) -> None:
    if _level <= LEVELS["warning"]:
        print("WARNING:", *args, file=sys.stderr, **kwargs)  # noqa: T201


def error_print(*args: Any, **kwargs: Any) -> None:
    print(*args, file=sys.stderr, **kwargs)  # noqa: T201
