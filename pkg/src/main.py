#!/usr/bin/env python3
#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Command line entrypoint for RelJudge
#
"""
Command line entrypoint for RelJudge.
Dispatches to the subcommand handlers in cli.commands.
"""

import asyncio
import logging
import platform
import sys

from cli.parser import build_parser


LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
   logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr, force=True)
   # keep per-request httpx lines out of INFO output
   logging.getLogger("httpx").setLevel(max(logging.WARNING, getattr(logging, level)))


def main(argv: list[str] | None = None) -> int:
   args = build_parser().parse_args(argv)
   configure_logging(args.log_level)

   # Windows: use SelectorEventLoop to avoid Proactor connection_lost errors (WinError 10054)
   if platform.system() == "Windows":
      try:
         asyncio.set_event_loop_policy(asyncio.WindowsSelectorEventLoopPolicy())
      except Exception:
         pass

   return args.func(args)


if __name__ == "__main__":
   sys.exit(main())
