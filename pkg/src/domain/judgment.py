#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Records produced by the three reranking steps.
#
from dataclasses import dataclass, asdict, fields
from typing import Any

PROBABILITY_FLOOR = 1e-6
PROBABILITY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class QueryAnalysis:
    query_id: str
    analysis_text: str
    model: str
    created_at: str
    template_hash: str = ""

    def __post_init__(self) -> None:
        if not self.analysis_text.strip():
            raise ValueError(f"Empty query analysis for query {self.query_id}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "QueryAnalysis":
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


@dataclass(frozen=True)
class DocumentAnalysis:
    query_id: str
    doc_id: str
    extractive_summary: str
    relevance_discussion: str
    truncated: bool = False


@dataclass(frozen=True)
class JudgmentRecord:
    """Outcome of the judgment step for one (query, document) pair."""
    query_id: str
    doc_id: str
    p_yes: float
    p_no: float
    verdict_text: str
    model: str
    template_hash: str = ""
    extractive_summary: str = ""
    relevance_discussion: str = ""
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.p_yes < 0 or self.p_no < 0:
            raise ValueError(f"Negative probability for ({self.query_id}, {self.doc_id})")
        if self.p_yes + self.p_no > 1 + PROBABILITY_TOLERANCE:
            raise ValueError(
                f"p_yes + p_no exceeds 1 for ({self.query_id}, {self.doc_id}): "
                f"{self.p_yes} + {self.p_no}"
            )

    @property
    def verdict(self) -> bool:
        """Discrete verdict: Yes when p_yes >= p_no."""
        return self.p_yes >= self.p_no

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.query_id, self.doc_id, self.model, self.template_hash)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "JudgmentRecord":
        return cls(**{f.name: data[f.name] for f in fields(cls) if f.name in data})


@dataclass(frozen=True)
class JudgmentFailure:
    """A candidate whose analysis or judgment could not be completed."""
    query_id: str
    doc_id: str
    stage: str
    error_type: str
    message: str
