#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Persist evaluation tables and agreement matrices as TSV and JSON.
#
import json
import logging
from pathlib import Path

from domain.report import AgreementMatrix, BenchmarkReport
from repositories.base import BaseRepository
from repositories.error_handling import handle_repository_errors
from services.evaluation import format_agreement, format_report_tsv, report_to_dict


logger = logging.getLogger("reljudge")


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class ReportRepository(BaseRepository):
    """Writes `<stem>.tsv` and `<stem>.json` next to each other; `path` is the stem."""

    @property
    def tsv_path(self) -> Path:
        return self.path.with_name(self.path.name + ".tsv")

    @property
    def json_path(self) -> Path:
        return self.path.with_name(self.path.name + ".json")

    def exists(self) -> bool:
        return self.tsv_path.exists() and self.json_path.exists()

    @handle_repository_errors("ReportRepository.save_benchmark")
    def save_benchmark(self, report: BenchmarkReport) -> tuple[Path, Path]:
        with BaseRepository(self.tsv_path).unit_of_work() as uow:
            uow.write(format_report_tsv(report))
        with BaseRepository(self.json_path).unit_of_work() as uow:
            uow.write(_dump_json(report_to_dict(report)))
        logger.info("Wrote report %s and %s", self.tsv_path, self.json_path)
        return self.tsv_path, self.json_path

    @handle_repository_errors("ReportRepository.save_agreement")
    def save_agreement(self, matrix: AgreementMatrix, label_a: str, label_b: str) -> tuple[Path, Path]:
        with BaseRepository(self.tsv_path).unit_of_work() as uow:
            uow.write(format_agreement(matrix, label_a, label_b))
        payload = {"a": label_a, "b": label_b, **matrix.to_dict()}
        with BaseRepository(self.json_path).unit_of_work() as uow:
            uow.write(_dump_json(payload))
        logger.info("Wrote agreement %s and %s", self.tsv_path, self.json_path)
        return self.tsv_path, self.json_path
