#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Scoring configuration and reranked runs.
#
import math
from dataclasses import dataclass
from enum import Enum

from domain.run import RunEntry


class ScoringMode(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"
    HYBRID = "hybrid"


DEFAULT_ALPHA = 100.0


@dataclass(frozen=True)
class ScoringConfig:
    mode: ScoringMode = ScoringMode.HYBRID
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", ScoringMode(self.mode))
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")


@dataclass(frozen=True)
class ScoredCandidate:
    doc_id: str
    first_stage_rank: int
    bm25_score: float
    prob_score: float
    verdict: bool
    final_score: float
    final_rank: int


@dataclass(frozen=True)
class RankedRun:
    query_id: str
    mode: ScoringMode
    candidates: tuple[ScoredCandidate, ...]
    tag: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        for position, candidate in enumerate(self.candidates, start=1):
            if candidate.final_rank != position:
                raise ValueError(f"Final ranks for query {self.query_id} must be 1..n")
            if position > 1 and candidate.final_score > self.candidates[position - 2].final_score:
                raise ValueError(f"Final scores for query {self.query_id} increase at rank {position}")

    @property
    def doc_ids(self) -> list[str]:
        return [c.doc_id for c in self.candidates]

    def to_run_entries(self) -> list[RunEntry]:
        return [
            RunEntry(self.query_id, c.doc_id, c.final_rank, c.final_score, self.tag)
            for c in self.candidates
        ]
