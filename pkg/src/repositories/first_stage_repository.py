#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Record of the settings that produced a first-stage run.
#
import json
from dataclasses import asdict, dataclass

from repositories.base import BaseRepository
from repositories.error_handling import handle_repository_errors


@dataclass(frozen=True)
class FirstStageRecord:
    k1: float
    b: float
    first_stage_k: int
    query_text: str
    corpus: str
    queries: str

    def differences(self, other: "FirstStageRecord") -> list[str]:
        mine, theirs = asdict(self), asdict(other)
        return [name for name in mine if mine[name] != theirs[name]]


class FirstStageRecordRepository(BaseRepository):
    """`{dataset}.first_stage.bm25.json`, written after the run file."""

    @handle_repository_errors("FirstStageRecordRepository.load")
    def load(self) -> FirstStageRecord | None:
        if not self.exists():
            return None
        with open(self.path, "r", encoding="utf-8") as handle:
            return FirstStageRecord(**json.load(handle))

    @handle_repository_errors("FirstStageRecordRepository.save")
    def save(self, record: FirstStageRecord) -> None:
        with self.unit_of_work() as uow:
            json.dump(asdict(record), uow.handle, indent=2, sort_keys=True)
            uow.write("\n")
