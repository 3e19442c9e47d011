#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Durable query-analysis cache, one JSON file per dataset.
#
import json
import threading

from domain.judgment import QueryAnalysis
from repositories.base import BaseRepository
from repositories.error_handling import handle_repository_errors


class QueryAnalysisRepository(BaseRepository):
    """query_id -> QueryAnalysis, rewritten atomically on every put."""

    def __init__(self, path):
        super().__init__(path)
        self._lock = threading.Lock()
        self._entries: dict[str, QueryAnalysis] | None = None

    @handle_repository_errors("QueryAnalysisRepository.load")
    def _load(self) -> dict[str, QueryAnalysis]:
        if self._entries is None:
            if self.exists():
                with open(self.path, "r", encoding="utf-8") as handle:
                    raw = json.load(handle)
                self._entries = {qid: QueryAnalysis.from_dict(record) for qid, record in raw.items()}
            else:
                self._entries = {}
        return self._entries

    def get(self, query_id: str) -> QueryAnalysis | None:
        with self._lock:
            return self._load().get(query_id)

    @handle_repository_errors("QueryAnalysisRepository.put")
    def put(self, analysis: QueryAnalysis) -> None:
        with self._lock:
            entries = dict(self._load())
            entries[analysis.query_id] = analysis
            payload = {qid: entries[qid].to_dict() for qid in sorted(entries)}
            with self.unit_of_work() as uow:
                json.dump(payload, uow.handle, indent=2, sort_keys=True, ensure_ascii=False)
                uow.write("\n")
            self._entries = entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._load())
