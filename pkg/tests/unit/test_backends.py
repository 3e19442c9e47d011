#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Tests for the chat backends, retry policy and scripted responses
#
import asyncio
import json
import logging

import httpx
import pytest
from openai.types.chat import ChatCompletion

from backends.base import ChatBackend, ChatRequest, ChatResponse, TokenAlternative, Usage
from backends.errors import (
    BackendHTTPError,
    BackendTimeoutError,
    BackendTransportError,
    ContextLengthExceededError,
    MalformedResponseError,
    NoScriptMatchError,
)
from backends.factory import create_backend
from backends.openai_compatible import (
    OpenAICompatibleBackend,
    api_base_url,
    build_payload,
    is_context_length_error,
    parse_chat_response,
)
from backends.retry import backoff_delay, is_retryable, retry_async
from backends.scripted import Script, ScriptedBackend, load_script, scripted_complete
from error_handling import ConfigError
from models import BackendConfig, RetryPolicy

logger = logging.getLogger(__name__)

pytestmark = pytest.mark.unit


def chat_body(text="Yes", top=None, usage=None):
    choice = {"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}
    if top is not None:
        choice["logprobs"] = {"content": [{
            "token": top[0][0], "logprob": top[0][1],
            "top_logprobs": [{"token": t, "logprob": lp} for t, lp in top],
        }]}
    return {
        "id": "chatcmpl-test", "object": "chat.completion", "created": 0, "model": "judge-model",
        "choices": [choice], "usage": usage or {"prompt_tokens": 11, "completion_tokens": 1, "total_tokens": 12},
    }


def completion(body):
    return ChatCompletion.construct(**body)


def openai_backend(handler, **overrides):
    retry = overrides.pop("retry", RetryPolicy(max_attempts=3, backoff_base_seconds=0.5))
    config = BackendConfig(model="judge-model", endpoint="http://llm.test", api_key_env="RELJUDGE_TEST_KEY",
                           retry=retry, **overrides)
    http_client = httpx.AsyncClient(transport=httpx.MockTransport(handler))
    delays = []

    async def record_sleep(delay):
        delays.append(delay)

    return OpenAICompatibleBackend(config, http_client=http_client, sleep=record_sleep), delays


class TestChatTypes:

    def test_request_validation(self):
        with pytest.raises(ValueError):
            ChatRequest("s", "u", max_new_tokens=0)
        with pytest.raises(ValueError):
            ChatRequest("s", "u", top_logprobs=21)
        with pytest.raises(ValueError):
            ChatRequest("s", "u", temperature=-0.1)

    def test_response_sorts_alternatives(self):
        response = ChatResponse("x", (TokenAlternative("No", -2.0), TokenAlternative("Yes", -0.1)))
        assert [a.token for a in response.first_token_alternatives] == ["Yes", "No"]

    def test_response_rejects_positive_logprob(self):
        with pytest.raises(ValueError):
            ChatResponse("x", (TokenAlternative("Yes", 0.5),))

    def test_response_clamps_rounding_noise(self):
        response = ChatResponse("x", (TokenAlternative("Yes", 1e-9),))
        assert response.first_token_alternatives[0].logprob == 0.0


class TestBoundedConcurrency:

    async def test_in_flight_never_exceeds_limit(self):
        class SlowBackend(ChatBackend):
            async def _complete(self, request):
                await asyncio.sleep(0.01)
                return ChatResponse("ok", usage=Usage(3, 1))

        backend = SlowBackend("slow", max_in_flight=3)
        await asyncio.gather(*(backend.complete(ChatRequest("s", "u")) for _ in range(20)))
        assert backend.peak_in_flight == 3
        assert backend.calls == 20
        assert backend.prompt_tokens == 60
        assert backend.in_flight == 0


class TestRetryPolicy:

    def test_backoff_doubles_and_caps(self):
        policy = RetryPolicy(backoff_base_seconds=1.0, backoff_max_seconds=5.0)
        assert [backoff_delay(policy, attempt) for attempt in range(1, 6)] == [1.0, 2.0, 4.0, 5.0, 5.0]

    @pytest.mark.parametrize("exc, retryable", [
        (BackendTimeoutError("t"), True),
        (BackendTransportError("t"), True),
        (MalformedResponseError("m"), True),
        (BackendHTTPError(503), True),
        (BackendHTTPError(429), True),
        (BackendHTTPError(401), False),
        (ContextLengthExceededError("c"), False),
    ])
    def test_retryable_classification(self, exc, retryable):
        assert is_retryable(exc, RetryPolicy()) is retryable

    async def test_gives_up_after_max_attempts(self):
        attempts = []

        async def failing():
            attempts.append(1)
            raise BackendTimeoutError("slow")

        async def no_sleep(_):
            return None

        with pytest.raises(BackendTimeoutError):
            await retry_async(failing, RetryPolicy(max_attempts=4), sleep=no_sleep)
        assert len(attempts) == 4

    async def test_non_retryable_raised_at_once(self):
        attempts = []

        async def overflow():
            attempts.append(1)
            raise ContextLengthExceededError("too long")

        with pytest.raises(ContextLengthExceededError):
            await retry_async(overflow, RetryPolicy(max_attempts=5))
        assert len(attempts) == 1


class TestOpenAIWireFormat:

    @pytest.mark.parametrize("endpoint", ["http://host:8000", "http://host:8000/", "http://host:8000/v1"])
    def test_base_url(self, endpoint):
        assert api_base_url(endpoint) == "http://host:8000/v1"

    def test_payload_requests_logprobs_only_when_needed(self):
        plain = build_payload("m", ChatRequest("sys", "user", max_new_tokens=64))
        assert "logprobs" not in plain
        assert plain["messages"][0] == {"role": "system", "content": "sys"}
        judged = build_payload("m", ChatRequest("sys", "user", max_new_tokens=1, top_logprobs=20))
        assert judged["logprobs"] is True
        assert judged["top_logprobs"] == 20
        assert judged["max_tokens"] == 1
        assert judged["temperature"] == 0.0

    def test_parse_chat_logprobs(self):
        request = ChatRequest("s", "u", max_new_tokens=1, top_logprobs=5)
        body = chat_body("Yes", [("Yes", -0.1), (" no", -2.5), ("Maybe", -4.0)])
        response = parse_chat_response(completion(body), request)
        assert response.text == "Yes"
        assert [a.token for a in response.first_token_alternatives] == ["Yes", " no", "Maybe"]
        assert response.usage == Usage(11, 1)

    def test_parse_legacy_logprobs(self):
        request = ChatRequest("s", "u", max_new_tokens=1, top_logprobs=5)
        body = chat_body("No")
        body["choices"][0]["logprobs"] = {"top_logprobs": [{"No": -0.2, "Yes": -1.8}]}
        response = parse_chat_response(completion(body), request)
        assert [a.token for a in response.first_token_alternatives] == ["No", "Yes"]

    def test_parse_limits_to_requested_count(self):
        request = ChatRequest("s", "u", max_new_tokens=1, top_logprobs=5)
        top = [(f"t{i}", -float(i)) for i in range(8)]
        assert len(parse_chat_response(completion(chat_body("t0", top)), request).first_token_alternatives) == 5

    def test_missing_logprobs_is_malformed(self):
        with pytest.raises(MalformedResponseError):
            parse_chat_response(completion(chat_body("Yes")), ChatRequest("s", "u", top_logprobs=5))

    def test_missing_choices_is_malformed(self):
        with pytest.raises(MalformedResponseError):
            parse_chat_response(completion({"usage": {}}), ChatRequest("s", "u"))

    def test_plain_text_body_is_malformed(self):
        with pytest.raises(MalformedResponseError, match="not a chat completion"):
            parse_chat_response("<html>", ChatRequest("s", "u"))

    def test_first_token_without_alternatives(self):
        body = chat_body("Yes")
        body["choices"][0]["logprobs"] = {"content": [{"token": "Yes", "logprob": -0.3, "top_logprobs": []}]}
        response = parse_chat_response(completion(body), ChatRequest("s", "u", max_new_tokens=1, top_logprobs=5))
        assert response.first_token_alternatives == (TokenAlternative("Yes", -0.3),)

    def test_context_length_detection(self):
        assert is_context_length_error(400, '{"error": {"code": "context_length_exceeded"}}')
        assert is_context_length_error(400, "This model's maximum context length is 8192 tokens")
        assert not is_context_length_error(500, "maximum context length")
        assert not is_context_length_error(400, "bad request")


class TestOpenAICompatibleBackend:

    async def test_sends_payload_and_key(self, monkeypatch):
        monkeypatch.setenv("RELJUDGE_TEST_KEY", "secret")
        seen = {}

        def handler(request: httpx.Request) -> httpx.Response:
            seen["url"] = str(request.url)
            seen["auth"] = request.headers.get("authorization")
            seen["payload"] = json.loads(request.content)
            return httpx.Response(200, json=chat_body("Yes", [("Yes", -0.05), ("No", -3.0)]))

        backend, _ = openai_backend(handler)
        response = await backend.complete(ChatRequest("sys", "user", max_new_tokens=1, top_logprobs=20))
        await backend.aclose()

        assert seen["url"] == "http://llm.test/v1/chat/completions"
        assert seen["auth"] == "Bearer secret"
        assert seen["payload"]["model"] == "judge-model"
        assert response.first_token_alternatives[0].token == "Yes"
        assert backend.calls == 1
        logger.info("✓ Chat completion request sent")

    async def test_retries_server_errors_with_backoff(self):
        statuses = iter([503, 502, 200])

        def handler(request):
            status = next(statuses)
            if status != 200:
                return httpx.Response(status, text="busy")
            return httpx.Response(200, json=chat_body("done"))

        backend, delays = openai_backend(handler)
        response = await backend.complete(ChatRequest("s", "u"))
        assert response.text == "done"
        assert delays == [0.5, 1.0]

    async def test_rate_limit_retried(self):
        statuses = iter([429, 200])

        def handler(request):
            if next(statuses) == 429:
                return httpx.Response(429, json={"error": {"message": "slow down"}})
            return httpx.Response(200, json=chat_body("done"))

        backend, delays = openai_backend(handler)
        assert (await backend.complete(ChatRequest("s", "u"))).text == "done"
        assert delays == [0.5]

    async def test_placeholder_key_without_environment(self, monkeypatch):
        monkeypatch.delenv("RELJUDGE_TEST_KEY", raising=False)
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            return httpx.Response(200, json=chat_body("Yes"))

        backend, _ = openai_backend(handler)
        await backend.complete(ChatRequest("s", "u"))
        assert seen["auth"] == "Bearer EMPTY"

    async def test_client_error_not_retried(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(401, text="unauthorized")

        backend, _ = openai_backend(handler)
        with pytest.raises(BackendHTTPError) as excinfo:
            await backend.complete(ChatRequest("s", "u"))
        assert excinfo.value.status_code == 401
        assert len(calls) == 1

    async def test_context_length_raised_without_retry(self):
        calls = []

        def handler(request):
            calls.append(1)
            return httpx.Response(400, json={"error": {"message": "maximum context length exceeded"}})

        backend, _ = openai_backend(handler)
        with pytest.raises(ContextLengthExceededError):
            await backend.complete(ChatRequest("s", "u"))
        assert len(calls) == 1

    async def test_timeout_mapped(self):
        def handler(request):
            raise httpx.ReadTimeout("slow", request=request)

        backend, delays = openai_backend(handler, retry=RetryPolicy(max_attempts=2, backoff_base_seconds=0.1))
        with pytest.raises(BackendTimeoutError):
            await backend.complete(ChatRequest("s", "u"))
        assert delays == [0.1]

    async def test_connection_error_mapped(self):
        def handler(request):
            raise httpx.ConnectError("refused", request=request)

        backend, _ = openai_backend(handler, retry=RetryPolicy(max_attempts=1))
        with pytest.raises(BackendTransportError):
            await backend.complete(ChatRequest("s", "u"))

    async def test_non_json_body_is_malformed(self):
        backend, _ = openai_backend(lambda request: httpx.Response(200, text="<html>"),
                                    retry=RetryPolicy(max_attempts=1))
        with pytest.raises(MalformedResponseError):
            await backend.complete(ChatRequest("s", "u"))


class TestScriptedBackend:

    def test_first_matching_rule_wins(self):
        script = Script.model_validate({"rules": [
            {"match": "Doc d1", "text": "Yes", "first_token": {"Yes": -0.1, "No": -2.4}},
            {"match": "Doc", "text": "No"},
        ]})
        request = ChatRequest("s", "judge Doc d1", max_new_tokens=1, top_logprobs=5)
        response = scripted_complete(script, request)
        assert response.text == "Yes"
        assert [a.token for a in response.first_token_alternatives] == ["Yes", "No"]
        assert scripted_complete(script, ChatRequest("s", "Doc d2")).text == "No"

    def test_no_match(self):
        script = Script.model_validate({"rules": [{"match": "never", "text": "x"}]})
        with pytest.raises(NoScriptMatchError):
            scripted_complete(script, ChatRequest("s", "something else"))

    def test_alternatives_only_when_requested(self):
        script = Script.model_validate({"rules": [{"match": ".", "text": "Yes", "first_token": {"Yes": -0.1}}]})
        assert scripted_complete(script, ChatRequest("s", "u")).first_token_alternatives == ()

    async def test_error_times_then_success(self):
        script = Script.model_validate({"rules": [
            {"match": "flaky", "error": "http_503", "error_times": 2, "text": "recovered"},
        ]})
        backend = ScriptedBackend(script, retry=RetryPolicy(max_attempts=3))
        response = await backend.complete(ChatRequest("s", "flaky"))
        assert response.text == "recovered"
        assert len(backend.request_log) == 3
        assert backend.calls == 1

    async def test_error_without_limit_always_raises(self):
        script = Script.model_validate({"rules": [{"match": "big", "error": "context_length"}]})
        backend = ScriptedBackend(script)
        for _ in range(2):
            with pytest.raises(ContextLengthExceededError):
                await backend.complete(ChatRequest("s", "big"))
        assert backend.calls == 0

    @pytest.mark.parametrize("raw", [
        {"rules": []},
        {"rules": [{"match": "("}]},
        {"rules": [{"match": "x", "error": "explode"}]},
        {"rules": [{"match": "x", "first_token": {"Yes": 0.3}}]},
    ])
    def test_invalid_scripts(self, raw):
        with pytest.raises(ValueError):
            Script.model_validate(raw)

    def test_load_missing_script(self, tmp_path):
        with pytest.raises(ConfigError):
            load_script(tmp_path / "absent.yaml")

    def test_fixture_script_loads(self, judge_script):
        assert len(judge_script.rules) > 10

    def test_factory_builds_scripted(self, fixture_paths):
        config = BackendConfig(kind="scripted", model="fixture-judge", script=fixture_paths['script'])
        backend = create_backend(config)
        assert isinstance(backend, ScriptedBackend)
        assert backend.model == "fixture-judge"

    def test_factory_builds_http(self):
        backend = create_backend(BackendConfig(model="m", endpoint="http://localhost:9"))
        assert isinstance(backend, OpenAICompatibleBackend)
        asyncio.run(backend.aclose())
