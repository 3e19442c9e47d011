#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: JSON Lines store of judgment records.
#
"""
JSON Lines store of judgment records.

Records are appended as they complete so an interrupted run can resume;
once a run finishes the file is rewritten in canonical order.
"""

import json
import logging
import threading
from typing import Iterable

from domain.judgment import JudgmentRecord
from repositories.base import BaseRepository
from repositories.error_handling import RepositoryError, handle_repository_errors


logger = logging.getLogger("reljudge")


class AmbiguousJudgmentsError(RepositoryError):
    """A judgment file holds several models or templates for the same pair."""
    pass


def _dumps(record: JudgmentRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n"


class JudgmentRepository(BaseRepository):

    def __init__(self, path):
        super().__init__(path)
        self._lock = threading.Lock()

    @handle_repository_errors("JudgmentRepository.load")
    def load(self) -> list[JudgmentRecord]:
        """All records in file order. A torn final line (interrupted append) is skipped."""
        if not self.exists():
            return []
        with open(self.path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
        records: list[JudgmentRecord] = []
        for line_number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                records.append(JudgmentRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, ValueError) as e:
                if line_number == len(lines) and not line.endswith("\n"):
                    logger.warning("Ignoring incomplete last line of %s", self.path)
                    continue
                raise RepositoryError(f"{self.path} line {line_number}: {e}") from e
        return records

    def load_current(self, model: str | None = None, template_hash: str | None = None) -> list[JudgmentRecord]:
        """
        One record per (query_id, doc_id), optionally restricted to a model and template hash.

        Raises AmbiguousJudgmentsError when a pair still has records from more
        than one model or template; a repeated key keeps its last record.
        """
        selected: dict[tuple[str, str], JudgmentRecord] = {}
        for record in self.load():
            if model is not None and record.model != model:
                continue
            if template_hash is not None and record.template_hash != template_hash:
                continue
            pair = (record.query_id, record.doc_id)
            earlier = selected.get(pair)
            if earlier is not None and earlier.key != record.key:
                raise AmbiguousJudgmentsError(
                    f"{self.path}: ({pair[0]}, {pair[1]}) is judged by {earlier.model}/{earlier.template_hash} "
                    f"and {record.model}/{record.template_hash}; select one with --template-hash"
                )
            selected[pair] = record
        return list(selected.values())

    @handle_repository_errors("JudgmentRepository.append")
    def append(self, record: JudgmentRecord) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8", newline="") as handle:
                handle.write(_dumps(record))
                handle.flush()

    @handle_repository_errors("JudgmentRepository.rewrite")
    def rewrite(self, records: Iterable[JudgmentRecord]) -> None:
        with self._lock:
            with self.unit_of_work() as uow:
                for record in records:
                    uow.write(_dumps(record))
