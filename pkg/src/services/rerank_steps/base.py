#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Step interface and shared per-dataset state of a rerank run.
#
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from backends.base import ChatBackend
from domain.corpus import Document, QrelSet, Query
from domain.judgment import JudgmentFailure, JudgmentRecord
from domain.ranking import RankedRun
from domain.report import EvalReport
from domain.run import CandidateList, RunEntry
from models import BackendConfig, DatasetConfig, RunConfig


BackendFactory = Callable[[BackendConfig], ChatBackend]


@dataclass
class DatasetContext:
   """Everything the steps of one dataset read and produce."""
   name: str
   dataset: DatasetConfig
   config: RunConfig
   backend_factory: Optional[BackendFactory] = None
   documents: dict[str, Document] = field(default_factory=dict)
   queries: list[Query] = field(default_factory=list)
   qrels: Optional[QrelSet] = None
   first_stage: list[RunEntry] = field(default_factory=list)
   candidates: dict[str, CandidateList] = field(default_factory=dict)
   # judge tag -> query_id -> doc_id -> record
   judgments: dict[str, dict[str, dict[str, JudgmentRecord]]] = field(default_factory=dict)
   failures: dict[str, list[JudgmentFailure]] = field(default_factory=dict)
   runs: dict[str, list[RankedRun]] = field(default_factory=dict)
   run_files: dict[str, Path] = field(default_factory=dict)
   reports: list[EvalReport] = field(default_factory=list)
   backend_calls: int = 0

   @property
   def output_dir(self) -> Path:
      return self.config.output_dir


class RerankStep(ABC):
   @abstractmethod
   def name(self) -> str: ...

   @abstractmethod
   def run(self, context: DatasetContext) -> bool: ...
