#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Central error handling for the repository layer.
#
"""
Central error handling for the repository layer.
"""

from __future__ import annotations

from functools import wraps
from typing import Callable, Any
import json
import logging
import struct

from error_handling import RelJudgeError

logger = logging.getLogger("reljudge")


class RepositoryError(RelJudgeError):
    """An artifact could not be read or durably written."""
    pass


def _build_repository_error_detail(
    operation_name: str,
    base_message: str,
    exc: Exception,
    error_message: str | None = None,
    additional_info: str = "",
) -> str:
    final_message = error_message or base_message
    detail = f"{final_message} ({operation_name}): {exc}"
    if additional_info:
        detail = f"{detail} | {additional_info}"
    return detail


def _log_repository_exception(
    operation_name: str,
    base_message: str,
    exc: Exception,
    error_message: str | None = None,
    additional_info: str = "",
) -> str:
    detail = _build_repository_error_detail(
        operation_name,
        base_message,
        exc,
        error_message=error_message,
        additional_info=additional_info,
    )
    logger.error(detail)
    return detail


def handle_repository_errors(
    operation_name: str = "file operation",
    error_message: str | None = None,
    additional_info: str = "",
):
    """Decorator for consistent error handling in repositories.

    I/O and decode failures are logged and re-raised as RepositoryError;
    typed errors from lower layers pass through untouched.
    """
    def decorator(func: Callable) -> Callable:
        def log_and_wrap(exc: Exception, base_message: str) -> RepositoryError:
            detail = _log_repository_exception(
                operation_name,
                base_message,
                exc,
                error_message=error_message,
                additional_info=additional_info,
            )
            return RepositoryError(detail)

        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                return func(*args, **kwargs)
            except RelJudgeError:
                raise
            except OSError as exc:
                raise log_and_wrap(exc, "File system error") from exc
            except (json.JSONDecodeError, UnicodeDecodeError, struct.error, KeyError, TypeError, ValueError) as exc:
                raise log_and_wrap(exc, "Corrupt artifact") from exc
        return wrapper
    return decorator
