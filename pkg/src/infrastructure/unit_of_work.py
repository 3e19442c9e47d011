#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Atomic file replacement as a unit of work.
#
import os
import tempfile
from contextlib import AbstractContextManager
from pathlib import Path


class UnitOfWork(AbstractContextManager):
   """Write a file through a sibling temp file; commit renames it into place.

   On an exception inside the block the temp file is discarded and the
   target keeps its previous content.
   """

   def __init__(self, target: Path | str, mode: str = "w", encoding: str | None = "utf-8"):
      self.target = Path(target)
      self.mode = mode
      self.encoding = None if "b" in mode else encoding
      self._handle = None
      self._temp_path: Path | None = None

   def __enter__(self):
      self.target.parent.mkdir(parents=True, exist_ok=True)
      fd, temp_name = tempfile.mkstemp(prefix=f".{self.target.name}.", dir=self.target.parent)
      self._temp_path = Path(temp_name)
      # newline="" keeps "\n" on every platform
      if "b" in self.mode:
         self._handle = os.fdopen(fd, self.mode)
      else:
         self._handle = os.fdopen(fd, self.mode, encoding=self.encoding, newline="")
      return self

   @property
   def handle(self):
      return self._handle

   def write(self, data) -> None:
      self._handle.write(data)

   def commit(self):
      self._handle.flush()
      os.fsync(self._handle.fileno())
      self._handle.close()
      os.replace(self._temp_path, self.target)

   def rollback(self):
      if not self._handle.closed:
         self._handle.close()
      if self._temp_path and self._temp_path.exists():
         self._temp_path.unlink()

   def __exit__(self, exc_type, exc, tb):
      if exc:
         self.rollback()
      else:
         try:
            self.commit()
         except Exception:
            self.rollback()
            raise
      return False
