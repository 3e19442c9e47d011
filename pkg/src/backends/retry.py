#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Retry transient backend failures with exponential backoff.
#
"""Retry transient backend failures with exponential backoff."""

import asyncio
import logging
from typing import Awaitable, Callable, TypeVar

from backends.errors import (
    BackendError,
    BackendHTTPError,
    BackendTimeoutError,
    BackendTransportError,
    MalformedResponseError,
)
from models import RetryPolicy


logger = logging.getLogger("reljudge")

T = TypeVar("T")


def backoff_delay(policy: RetryPolicy, attempt: int) -> float:
    """Delay before retry number `attempt` (1-based)."""
    return min(policy.backoff_base_seconds * (2 ** (attempt - 1)), policy.backoff_max_seconds)


def is_retryable(exc: BaseException, policy: RetryPolicy) -> bool:
    if isinstance(exc, BackendHTTPError):
        return exc.status_code in policy.retry_statuses
    return isinstance(exc, (BackendTimeoutError, BackendTransportError, MalformedResponseError))


async def retry_async(
    fn: Callable[[], Awaitable[T]],
    policy: RetryPolicy,
    operation: str = "backend call",
    sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
) -> T:
    """
    Await fn() until it succeeds or the policy gives up.

    Non-retryable errors (context length, client errors) are raised at once;
    after the last attempt the last error is re-raised.
    """
    attempt = 1
    while True:
        try:
            return await fn()
        except BackendError as exc:
            if not is_retryable(exc, policy) or attempt >= policy.max_attempts:
                raise
            delay = backoff_delay(policy, attempt)
            logger.warning(
                "%s failed (attempt %s/%s): %s; retrying in %.1fs",
                operation, attempt, policy.max_attempts, exc, delay,
            )
            await sleep(delay)
            attempt += 1
