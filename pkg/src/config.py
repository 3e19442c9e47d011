#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Central configuration access.
#
"""
Central configuration access helpers.
"""

import os
from datetime import datetime, timezone
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from error_handling import ConfigError
from models import RunConfig
from utils import load_config


DEFAULT_CONFIG_PATH = "cfg/config.yaml"


def get_config(config_path: str = DEFAULT_CONFIG_PATH) -> dict[str, Any]:
    return load_config(config_path=config_path)


def get_config_section(
    section: str | None = None,
    config_path: str = DEFAULT_CONFIG_PATH,
) -> dict[str, Any]:
    if section:
        return load_config(config_path=config_path, subconfig=section)
    return load_config(config_path=config_path)


def load_run_config(config_path: str = DEFAULT_CONFIG_PATH) -> RunConfig:
    """
    Load and validate the run configuration.

    `.env` in the working directory is read first so secrets referenced as
    ${VAR} can live outside the versioned manifest.
    """
    load_dotenv()
    raw = get_config(config_path)
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {config_path}:\n{e}") from e


def reproducible_timestamp() -> str:
    """UTC timestamp honouring SOURCE_DATE_EPOCH for byte-reproducible outputs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        try:
            moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
        except ValueError as e:
            raise ConfigError(f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}") from e
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")
