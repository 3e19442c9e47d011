#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Run entries and first-stage candidate lists.
#
from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


@dataclass(frozen=True)
class CandidateEntry:
    doc_id: str
    first_stage_rank: int
    bm25_score: float


@dataclass(frozen=True)
class CandidateList:
    """Top-k first-stage results for one query, ordered by first-stage rank."""
    query_id: str
    entries: tuple[CandidateEntry, ...]
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        for position, entry in enumerate(self.entries, start=1):
            if entry.first_stage_rank != position:
                raise ValueError(
                    f"Candidate ranks for query {self.query_id} must be 1..n, "
                    f"got {entry.first_stage_rank} at position {position}"
                )
            if position > 1 and entry.bm25_score > self.entries[position - 2].bm25_score:
                raise ValueError(
                    f"Candidate scores for query {self.query_id} increase at rank {position}"
                )

    @property
    def doc_ids(self) -> list[str]:
        return [entry.doc_id for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CandidateEntry]:
        return iter(self.entries)

    def to_run_entries(self, tag: str) -> list[RunEntry]:
        return [
            RunEntry(self.query_id, entry.doc_id, entry.first_stage_rank, entry.bm25_score, tag)
            for entry in self.entries
        ]

    @classmethod
    def from_run_entries(cls, query_id: str, entries: Iterable[RunEntry], k: int | None = None) -> "CandidateList":
        ordered = sorted(entries, key=lambda e: e.rank)
        if k is not None:
            ordered = ordered[:k]
        candidates = tuple(
            CandidateEntry(e.doc_id, e.rank, e.score) for e in ordered
        )
        return cls(query_id, candidates, k if k is not None else len(candidates))
