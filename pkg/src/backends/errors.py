#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Typed backend failures.
#
from error_handling import RelJudgeError


class BackendError(RelJudgeError):
    """Base class for chat-completion backend failures."""
    pass


class BackendTimeoutError(BackendError):
    pass


class BackendTransportError(BackendError):
    """Connection refused, reset, DNS failure and similar."""
    pass


class BackendHTTPError(BackendError):

    def __init__(self, status_code: int, body: str = ""):
        self.status_code = status_code
        self.body = body
        super().__init__(f"HTTP {status_code}: {body[:300]}")


class MalformedResponseError(BackendError):
    """The response body is not a valid chat completion."""
    pass


class ContextLengthExceededError(BackendError):
    """The prompt does not fit the model context. Never retried as-is."""
    pass


class NoScriptMatchError(BackendError):
    """No scripted rule matched the prompt."""
    pass
