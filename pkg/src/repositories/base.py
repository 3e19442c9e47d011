#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: File-backed repository base shared by all artifact stores.
#
from pathlib import Path

from infrastructure.unit_of_work import UnitOfWork


class BaseRepository:
   def __init__(self, path: Path | str):
      """Initialize repository over a single artifact file.

      Args:
         path: Location of the artifact; parent directories are created on write.
      """
      self.path = Path(path)

   def exists(self) -> bool:
      return self.path.exists()

   def unit_of_work(self, mode: str = "w") -> UnitOfWork:
      """Atomic replacement of the artifact."""
      return UnitOfWork(self.path, mode=mode)

   def __repr__(self) -> str:
      return f"{type(self).__name__}({str(self.path)!r})"
