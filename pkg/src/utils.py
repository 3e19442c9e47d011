#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: YAML loading with environment interpolation.
#
import os
import re
import yaml

from pathlib import Path
from typing import Any

from error_handling import ConfigError


_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}")


def interpolate_env(value: Any, environ: dict[str, str] | None = None) -> Any:
   """
   Replace ${NAME} and ${NAME:-default} in every string of a loaded YAML tree.

   Args:
      value: Parsed YAML value (dict, list or scalar).
      environ: Environment mapping (defaults to os.environ).

   Returns:
      The same structure with placeholders substituted.

   Raises:
      ConfigError: A referenced variable is unset and has no default.
   """
   env = os.environ if environ is None else environ

   if isinstance(value, dict):
      return {key: interpolate_env(item, env) for key, item in value.items()}
   if isinstance(value, list):
      return [interpolate_env(item, env) for item in value]
   if not isinstance(value, str):
      return value

   def substitute(match: re.Match) -> str:
      name, default = match.group(1), match.group(2)
      if name in env:
         return env[name]
      if default is not None:
         return default
      raise ConfigError(f"Environment variable '{name}' is not set and has no default")

   return _ENV_PATTERN.sub(substitute, value)


def load_config(config_path: str = 'cfg/config.yaml', subconfig: str | None = None) -> dict[str, Any]:
   """
   Load a YAML configuration file.

   Args:
      config_path: Path to the YAML file.
      subconfig: Optional top-level key to extract.

   Returns:
      Configuration as a dictionary, environment placeholders resolved.
   """
   config_file = Path(config_path)
   if not config_file.exists():
      raise ConfigError(f"Configuration file not found at: {config_path}")

   try:
      with open(config_file, 'r', encoding='utf-8') as f:
         config = yaml.safe_load(f) or {}
   except yaml.YAMLError as e:
      raise ConfigError(f"Failed to parse {config_path}: {e}") from e

   if not isinstance(config, dict):
      raise ConfigError(f"{config_path} must contain a mapping at the top level")

   config = interpolate_env(config)

   if subconfig:
      if subconfig in config:
         return config[subconfig]
      raise ConfigError(f"Sub-configuration '{subconfig}' not found in configuration")
   return config
