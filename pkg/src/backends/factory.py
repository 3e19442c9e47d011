#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Build a chat backend from its configuration.
#
import logging

from backends.base import ChatBackend
from backends.openai_compatible import OpenAICompatibleBackend
from backends.scripted import ScriptedBackend
from models import BackendConfig


logger = logging.getLogger("reljudge")


def create_backend(config: BackendConfig) -> ChatBackend:
    if config.kind == "scripted":
        logger.info("Using scripted backend %s (%s)", config.tag, config.script)
        return ScriptedBackend.from_config(config)
    logger.info("Using backend %s at %s (max %s in flight)", config.model, config.endpoint, config.max_in_flight)
    return OpenAICompatibleBackend(config)
