#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Corpus, query and relevance judgment records.
#
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping, Optional


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str = ""
    text: str = ""

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be a non-empty string")

    @property
    def full_text(self) -> str:
        """Title and body joined the way they are indexed and shown to the judge."""
        if self.title:
            return f"{self.title}\n{self.text}" if self.text else self.title
        return self.text


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    augmented_text: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.query_id:
            raise ValueError("query_id must be a non-empty string")

    def text_for(self, policy: str) -> str:
        """
        Select the query text for a given policy.

        - original: always `text`
        - augmented: `augmented_text`, falling back to `text` when absent
        - auto: same as augmented
        """
        if policy == "original":
            return self.text
        if policy in ("augmented", "auto"):
            return self.augmented_text if self.augmented_text else self.text
        raise ValueError(f"Unknown query text policy: {policy}")


class QrelSet:
    """Graded relevance judgments, query_id -> doc_id -> grade.

    Absent pairs read as grade 0. Grade-0 rows are kept: they mark
    judged non-relevant documents.
    """

    def __init__(self, judgments: Mapping[str, Mapping[str, int]]):
        frozen = {}
        for query_id, grades in judgments.items():
            for doc_id, grade in grades.items():
                if grade < 0:
                    raise ValueError(f"Negative grade for ({query_id}, {doc_id}): {grade}")
            frozen[query_id] = MappingProxyType(dict(grades))
        self._judgments = MappingProxyType(frozen)

    def grade(self, query_id: str, doc_id: str) -> int:
        return self._judgments.get(query_id, {}).get(doc_id, 0)

    def for_query(self, query_id: str) -> Mapping[str, int]:
        return self._judgments.get(query_id, MappingProxyType({}))

    def relevant(self, query_id: str) -> dict[str, int]:
        return {doc_id: g for doc_id, g in self.for_query(query_id).items() if g > 0}

    def query_ids(self) -> list[str]:
        return list(self._judgments.keys())

    def __contains__(self, query_id: object) -> bool:
        return query_id in self._judgments

    def __len__(self) -> int:
        return len(self._judgments)

    def __iter__(self) -> Iterator[str]:
        return iter(self._judgments)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QrelSet):
            return NotImplemented
        return {q: dict(g) for q, g in self._judgments.items()} == \
            {q: dict(g) for q, g in other._judgments.items()}

    def __repr__(self) -> str:
        pairs = sum(len(g) for g in self._judgments.values())
        return f"QrelSet(queries={len(self._judgments)}, pairs={pairs})"
