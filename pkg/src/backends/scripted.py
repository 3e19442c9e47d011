#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Deterministic backend answering from a YAML script of prompt patterns.
#
"""
Deterministic backend answering from a YAML script.

Script format::

    rules:
      - match: "Doc d1"            # regex, searched in system + "\\n" + user prompt
        text: "Yes"
        first_token: {"Yes": -0.2231, "No": -1.6094}
      - match: "OVERSIZED"
        error: context_length      # context_length | timeout | transport | malformed | http_<status>
        error_times: 1             # optional: raise only for the first N hits, answer afterwards
        delay: 0.01                # optional: seconds to wait before answering

Rules are tried in order; the first match wins. A prompt no rule matches
raises NoScriptMatchError.
"""

import asyncio
import logging
import re
import threading
from pathlib import Path
from typing import Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from backends.base import ChatBackend, ChatRequest, ChatResponse, TokenAlternative, Usage, sort_alternatives
from backends.errors import (
    BackendError,
    BackendHTTPError,
    BackendTimeoutError,
    BackendTransportError,
    ContextLengthExceededError,
    MalformedResponseError,
    NoScriptMatchError,
)
from backends.retry import retry_async
from error_handling import ConfigError
from models import BackendConfig, RetryPolicy


logger = logging.getLogger("reljudge")

_ERROR_KINDS = re.compile(r"^(context_length|timeout|transport|malformed|http_\d{3})$")


class ScriptRule(BaseModel):
    match: str
    text: str = ""
    first_token: dict[str, float] = {}
    error: Optional[str] = None
    error_times: Optional[int] = Field(default=None, ge=1)
    delay: float = Field(default=0.0, ge=0)

    @field_validator("match")
    @classmethod
    def check_pattern(cls, value: str) -> str:
        try:
            re.compile(value)
        except re.error as e:
            raise ValueError(f"invalid pattern {value!r}: {e}") from e
        return value

    @field_validator("error")
    @classmethod
    def check_error(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and not _ERROR_KINDS.match(value):
            raise ValueError(f"unknown error kind {value!r}")
        return value

    @field_validator("first_token")
    @classmethod
    def check_logprobs(cls, value: dict[str, float]) -> dict[str, float]:
        for token, logprob in value.items():
            if logprob > 0:
                raise ValueError(f"logprob for {token!r} must be <= 0")
        return value


class Script(BaseModel):
    rules: list[ScriptRule] = Field(min_length=1)

    def compiled(self) -> list[tuple[re.Pattern, ScriptRule]]:
        return [(re.compile(rule.match), rule) for rule in self.rules]


def load_script(path: Path | str) -> Script:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
        return Script.model_validate(raw)
    except FileNotFoundError as e:
        raise ConfigError(f"Script file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Error parsing script {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid script {path}: {e}") from e


def error_for(kind: str, rule: ScriptRule) -> BackendError:
    message = f"scripted {kind} for pattern {rule.match!r}"
    if kind == "context_length":
        return ContextLengthExceededError(message)
    if kind == "timeout":
        return BackendTimeoutError(message)
    if kind == "transport":
        return BackendTransportError(message)
    if kind == "malformed":
        return MalformedResponseError(message)
    return BackendHTTPError(int(kind.split("_", 1)[1]), message)


def _find_rule(script: Script, request: ChatRequest) -> tuple[int, ScriptRule]:
    prompt = f"{request.system_prompt}\n{request.user_prompt}"
    for index, rule in enumerate(script.rules):
        if re.search(rule.match, prompt):
            return index, rule
    tail = request.user_prompt[-120:].replace("\n", " ")
    raise NoScriptMatchError(f"No script rule matches prompt ending in {tail!r}")


def _response_for(rule: ScriptRule, request: ChatRequest) -> ChatResponse:
    alternatives = ()
    if request.top_logprobs > 0:
        alternatives = sort_alternatives(
            (TokenAlternative(token, logprob) for token, logprob in rule.first_token.items()),
            request.top_logprobs,
        )
    usage = Usage(
        prompt_tokens=len(request.system_prompt.split()) + len(request.user_prompt.split()),
        completion_tokens=min(len(rule.text.split()), request.max_new_tokens),
    )
    return ChatResponse(text=rule.text, first_token_alternatives=alternatives, usage=usage)


def scripted_complete(script: Script, request: ChatRequest, hits: dict[int, int] | None = None) -> ChatResponse:
    """
    Answer `request` from the first matching rule.

    `hits` counts matches per rule index across calls; it is needed only for
    rules with `error_times`.
    """
    index, rule = _find_rule(script, request)
    if rule.error is not None:
        seen = 0
        if hits is not None:
            seen = hits.get(index, 0)
            hits[index] = seen + 1
        if rule.error_times is None or seen < rule.error_times:
            raise error_for(rule.error, rule)
    return _response_for(rule, request)


class ScriptedBackend(ChatBackend):
    """Offline backend; retries follow the configured policy without sleeping."""

    def __init__(self, script: Script, model: str = "scripted", max_in_flight: int = 8,
                 retry: RetryPolicy | None = None):
        super().__init__(model, max_in_flight)
        self.script = script
        self.retry = retry or RetryPolicy(max_attempts=1)
        self.request_log: list[ChatRequest] = []
        self._hits: dict[int, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_config(cls, config: BackendConfig) -> "ScriptedBackend":
        return cls(load_script(config.script), config.model, config.max_in_flight, config.retry)

    async def _attempt(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.request_log.append(request)
        _, rule = _find_rule(self.script, request)
        if rule.delay:
            await asyncio.sleep(rule.delay)
        with self._lock:
            return scripted_complete(self.script, request, self._hits)

    async def _complete(self, request: ChatRequest) -> ChatResponse:
        return await retry_async(
            lambda: self._attempt(request),
            self.retry,
            operation=f"scripted completion ({self.model})",
            sleep=_no_sleep,
        )


async def _no_sleep(_delay: float) -> None:
    return None
