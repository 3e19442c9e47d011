#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Client for OpenAI-compatible chat-completion endpoints with first-token logprobs.
#
"""
Client for OpenAI-compatible chat-completion endpoints.

Requests go through `openai.AsyncOpenAI` to `{endpoint}/v1/chat/completions`.
The SDK does not retry; retries and backoff follow the backend's RetryPolicy.
When `top_logprobs` is requested the alternatives of the first generated
token are returned.
"""

import logging
import os
from typing import Any

import httpx
import openai
from openai import AsyncOpenAI
from openai.types.chat import ChatCompletion

from backends.base import ChatBackend, ChatRequest, ChatResponse, TokenAlternative, Usage, sort_alternatives
from backends.errors import (
    BackendHTTPError,
    BackendTimeoutError,
    BackendTransportError,
    ContextLengthExceededError,
    MalformedResponseError,
)
from backends.retry import retry_async
from models import BackendConfig


logger = logging.getLogger("reljudge")

# vLLM and llama.cpp servers accept any key when none is configured
PLACEHOLDER_API_KEY = "EMPTY"

_CONTEXT_LENGTH_STATUSES = (400, 413, 422)
_CONTEXT_LENGTH_MARKERS = (
    "context_length_exceeded",
    "maximum context length",
    "context length",
    "too many tokens",
    "prompt is too long",
)


def api_base_url(endpoint: str) -> str:
    base = endpoint.rstrip("/")
    if base.endswith("/v1"):
        return base
    return f"{base}/v1"


def build_payload(model: str, request: ChatRequest) -> dict[str, Any]:
    """Keyword arguments for `chat.completions.create`."""
    payload: dict[str, Any] = {
        "model": model,
        "messages": [
            {"role": "system", "content": request.system_prompt},
            {"role": "user", "content": request.user_prompt},
        ],
        "max_tokens": request.max_new_tokens,
        "temperature": request.temperature,
    }
    if request.top_logprobs > 0:
        payload["logprobs"] = True
        payload["top_logprobs"] = request.top_logprobs
    return payload


def is_context_length_error(status_code: int, body: str) -> bool:
    if status_code not in _CONTEXT_LENGTH_STATUSES:
        return False
    lowered = body.lower()
    return any(marker in lowered for marker in _CONTEXT_LENGTH_MARKERS)


def _first_token_alternatives(choice: Any) -> list[TokenAlternative] | None:
    logprobs = choice.logprobs
    if logprobs is None:
        return None
    content = logprobs.content
    if isinstance(content, list):
        if not content:
            return []
        first = content[0]
        if first.top_logprobs:
            return [TokenAlternative(str(item.token), float(item.logprob)) for item in first.top_logprobs]
        return [TokenAlternative(str(first.token), float(first.logprob))]
    # older llama.cpp builds: {"top_logprobs": [{token: logprob, ...}, ...]}
    legacy = (logprobs.model_extra or {}).get("top_logprobs")
    if isinstance(legacy, list):
        if not legacy:
            return []
        return [TokenAlternative(str(token), float(value)) for token, value in legacy[0].items()]
    return None


def parse_chat_response(completion: Any, request: ChatRequest) -> ChatResponse:
    """Turn an SDK completion into a ChatResponse or raise MalformedResponseError."""
    if not isinstance(completion, ChatCompletion):
        raise MalformedResponseError(f"Response body is not a chat completion: {str(completion)[:200]!r}")
    try:
        choice = completion.choices[0]
        text = choice.message.content
        if text is None:
            text = ""
        if not isinstance(text, str):
            raise TypeError("message content is not a string")
        alternatives: list[TokenAlternative] = []
        if request.top_logprobs > 0:
            parsed = _first_token_alternatives(choice)
            if parsed is None:
                raise MalformedResponseError("logprobs were requested but the response carries none")
            alternatives = parsed
        usage = Usage(
            prompt_tokens=int(getattr(completion.usage, "prompt_tokens", 0) or 0),
            completion_tokens=int(getattr(completion.usage, "completion_tokens", 0) or 0),
        )
        limited = sort_alternatives(alternatives, request.top_logprobs or None)
        return ChatResponse(text=text, first_token_alternatives=limited, usage=usage)
    except MalformedResponseError:
        raise
    except (KeyError, IndexError, TypeError, ValueError, AttributeError) as e:
        raise MalformedResponseError(f"Unexpected chat completion body: {e}") from e


class OpenAICompatibleBackend(ChatBackend):

    def __init__(self, config: BackendConfig, http_client: httpx.AsyncClient | None = None, sleep=None):
        super().__init__(config.model, config.max_in_flight)
        self.config = config
        self.base_url = api_base_url(config.endpoint)
        api_key = os.environ.get(config.api_key_env) if config.api_key_env else None
        self._owns_client = http_client is None
        self._client = AsyncOpenAI(
            base_url=self.base_url,
            api_key=api_key or PLACEHOLDER_API_KEY,
            timeout=config.timeout_seconds,
            max_retries=0,
            http_client=http_client,
        )
        self._sleep = sleep

    async def _post_once(self, request: ChatRequest) -> ChatResponse:
        try:
            completion = await self._client.chat.completions.create(**build_payload(self.config.model, request))
        except openai.APITimeoutError as e:
            raise BackendTimeoutError(f"{self.base_url} timed out after {self.config.timeout_seconds}s") from e
        except openai.APIConnectionError as e:
            raise BackendTransportError(f"{self.base_url}: {e}") from e
        except openai.APIStatusError as e:
            body = e.response.text
            if is_context_length_error(e.status_code, body):
                raise ContextLengthExceededError(body[:300]) from e
            raise BackendHTTPError(e.status_code, body) from e
        except openai.APIResponseValidationError as e:
            raise MalformedResponseError(f"Unexpected chat completion body: {e}") from e
        return parse_chat_response(completion, request)

    async def _complete(self, request: ChatRequest) -> ChatResponse:
        kwargs = {"sleep": self._sleep} if self._sleep is not None else {}
        return await retry_async(
            lambda: self._post_once(request),
            self.config.retry,
            operation=f"chat completion ({self.config.model})",
            **kwargs,
        )

    async def aclose(self) -> None:
        if self._owns_client:
            await self._client.close()
