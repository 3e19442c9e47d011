#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Smoke test against a real OpenAI-compatible endpoint
#
"""
Smoke test against a real OpenAI-compatible endpoint.

Deselected by default. Run with:

    export RELJUDGE_LIVE=1 RELJUDGE_LIVE_ENDPOINT=http://gpu-box:8000
    RELJUDGE_LIVE_MODEL=meta-llama/Llama-3.1-8B-Instruct pytest -m live
"""

import logging
import os

import pytest

from backends.openai_compatible import OpenAICompatibleBackend
from domain.corpus import Document, Query
from models import BackendConfig
from services.pipeline import judge_direct

logger = logging.getLogger(__name__)

pytestmark = [
    pytest.mark.live,
    pytest.mark.skipif(os.environ.get("RELJUDGE_LIVE") != "1", reason="set RELJUDGE_LIVE=1 to call a real endpoint"),
]


@pytest.fixture
def live_config():
    return BackendConfig(
        endpoint=os.environ.get("RELJUDGE_LIVE_ENDPOINT", "http://localhost:8000"),
        model=os.environ.get("RELJUDGE_LIVE_MODEL", "meta-llama/Llama-3.1-8B-Instruct"),
        timeout_seconds=60,
    )


@pytest.mark.timeout(120)
async def test_endpoint_returns_first_token_logprobs(live_config, template):
    """A relevant and an unrelated document get well-formed, ordered judgments."""
    query = Query("live", "Why do cats purr?")
    relevant = Document("rel", "Purring", "Cats purr by twitching their laryngeal muscles while breathing.")
    unrelated = Document("unrel", "Tides", "Tides are caused by the gravity of the moon and the sun.")

    async with OpenAICompatibleBackend(live_config) as backend:
        yes = await judge_direct(backend, template, query, relevant)
        no = await judge_direct(backend, template, query, unrelated)

    for record in (yes, no):
        assert 0.0 <= record.p_yes <= 1.0 and 0.0 <= record.p_no <= 1.0
        assert record.p_yes + record.p_no > 0.5, "Yes/No should dominate the first token"
    assert yes.p_yes / (yes.p_yes + yes.p_no) > no.p_yes / (no.p_yes + no.p_no)
    logger.info("✓ Live judgments: relevant p_yes=%.3f, unrelated p_yes=%.3f", yes.p_yes, no.p_yes)
