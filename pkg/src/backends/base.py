#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Chat request/response types and the bounded backend base class.
#
"""
Chat request/response types and the bounded backend base class.
"""

import asyncio
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable

MAX_TOP_LOGPROBS = 20
_LOGPROB_SLACK = 1e-6


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    user_prompt: str
    max_new_tokens: int = 1024
    temperature: float = 0.0
    top_logprobs: int = 0

    def __post_init__(self) -> None:
        if self.max_new_tokens < 1:
            raise ValueError(f"max_new_tokens must be >= 1, got {self.max_new_tokens}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not 0 <= self.top_logprobs <= MAX_TOP_LOGPROBS:
            raise ValueError(f"top_logprobs must be in [0, {MAX_TOP_LOGPROBS}], got {self.top_logprobs}")


@dataclass(frozen=True)
class TokenAlternative:
    token: str
    logprob: float


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


def sort_alternatives(alternatives: Iterable[TokenAlternative], limit: int | None = None) -> tuple[TokenAlternative, ...]:
    """Sort by logprob descending (token as tie-break) and keep the first `limit`."""
    ordered = sorted(alternatives, key=lambda alt: (-alt.logprob, alt.token))
    if limit is not None:
        ordered = ordered[:limit]
    return tuple(ordered)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    first_token_alternatives: tuple[TokenAlternative, ...] = ()
    usage: Usage = field(default_factory=Usage)

    def __post_init__(self) -> None:
        alternatives = tuple(self.first_token_alternatives)
        for alt in alternatives:
            if alt.logprob > _LOGPROB_SLACK:
                raise ValueError(f"logprob must be <= 0, got {alt.logprob} for {alt.token!r}")
        # rounding noise from servers can yield tiny positive values
        alternatives = tuple(TokenAlternative(a.token, min(a.logprob, 0.0)) for a in alternatives)
        object.__setattr__(self, "first_token_alternatives", sort_alternatives(alternatives))


class ChatBackend(ABC):
    """
    Base class for chat-completion backends.

    `complete` may be awaited from many tasks at once; at most
    `max_in_flight` calls run concurrently.
    """

    def __init__(self, model: str, max_in_flight: int = 8):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.model = model
        self.max_in_flight = max_in_flight
        self._semaphore = asyncio.Semaphore(max_in_flight)
        self.in_flight = 0
        self.peak_in_flight = 0
        self.calls = 0
        self.prompt_tokens = 0
        self.completion_tokens = 0

    async def complete(self, request: ChatRequest) -> ChatResponse:
        async with self._semaphore:
            self.in_flight += 1
            self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
            try:
                response = await self._complete(request)
            finally:
                self.in_flight -= 1
        self.calls += 1
        self.prompt_tokens += response.usage.prompt_tokens
        self.completion_tokens += response.usage.completion_tokens
        return response

    @abstractmethod
    async def _complete(self, request: ChatRequest) -> ChatResponse: ...

    async def aclose(self) -> None:
        pass

    async def __aenter__(self):
        return self

    async def __aexit__(self, exc_type, exc, tb):
        await self.aclose()
