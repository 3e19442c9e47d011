#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Error root and command-level error handling.
#
"""
Error root for RelJudge and the decorator used by every CLI command.

Each layer defines its own exception family deriving from RelJudgeError.
Commands convert them to process exit codes in one place.
"""

from functools import wraps
from typing import Callable, Any

import logging

logger = logging.getLogger("reljudge")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_TYPED_ERROR = 2


class RelJudgeError(Exception):
    """Base class for all expected, typed failures."""
    pass


class ConfigError(RelJudgeError):
    """Raised when configuration is missing, malformed or inconsistent."""
    pass


def handle_command_errors(
    operation_name: str = "command",
    error_message: str | None = None,
):
    """
    Decorator for consistent error handling in CLI commands.

    The wrapped function returns an exit code (or None for success).

    Usage:
        @handle_command_errors("rerank")
        def cmd_rerank(args) -> int:
            ...
    """
    def decorator(func: Callable[..., Any]) -> Callable[..., int]:
        def log_exception(exc: Exception, base_message: str, with_traceback: bool) -> None:
            final_message = error_message or base_message
            detail = f"{final_message} ({operation_name}): {exc}"
            if with_traceback:
                logger.exception(detail)
            else:
                logger.error(detail)

        @wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                result = func(*args, **kwargs)
            except RelJudgeError as exc:
                log_exception(exc, type(exc).__name__, with_traceback=False)
                return EXIT_TYPED_ERROR
            except KeyboardInterrupt:
                logger.warning("Interrupted (%s)", operation_name)
                return EXIT_UNEXPECTED
            except Exception as exc:
                log_exception(exc, "Unexpected error", with_traceback=True)
                return EXIT_UNEXPECTED
            return EXIT_OK if result is None else int(result)
        return wrapper
    return decorator
