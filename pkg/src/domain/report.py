#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Evaluation and agreement reports.
#
from dataclasses import dataclass, field
from typing import Any, Mapping


@dataclass(frozen=True)
class EvalReport:
    run_tag: str
    k: int
    per_query: Mapping[str, float]
    mean: float
    dataset: str = ""
    skipped_queries: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "run_tag": self.run_tag,
            "k": self.k,
            "mean": self.mean,
            "per_query": dict(self.per_query),
            "skipped_queries": list(self.skipped_queries),
        }


@dataclass(frozen=True)
class BenchmarkReport:
    """Dataset x run-tag table of mean nDCG@k with a macro average per run tag."""
    k: int
    cells: Mapping[str, Mapping[str, EvalReport]]
    macro_average: Mapping[str, float] = field(default_factory=dict)

    @property
    def run_tags(self) -> list[str]:
        tags: list[str] = []
        for row in self.cells.values():
            for tag in row:
                if tag not in tags:
                    tags.append(tag)
        return tags


@dataclass(frozen=True)
class AgreementMatrix:
    yes_yes: int
    yes_no: int
    no_yes: int
    no_no: int
    unmatched_a: int = 0
    unmatched_b: int = 0

    @property
    def total(self) -> int:
        return self.yes_yes + self.yes_no + self.no_yes + self.no_no

    @property
    def percentages(self) -> dict[str, float]:
        total = self.total
        return {
            "yes_yes": 100.0 * self.yes_yes / total,
            "yes_no": 100.0 * self.yes_no / total,
            "no_yes": 100.0 * self.no_yes / total,
            "no_no": 100.0 * self.no_no / total,
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "counts": {
                "yes_yes": self.yes_yes,
                "yes_no": self.yes_no,
                "no_yes": self.no_yes,
                "no_no": self.no_no,
            },
            "percentages": self.percentages,
            "shared_pairs": self.total,
            "unmatched_a": self.unmatched_a,
            "unmatched_b": self.unmatched_b,
        }
