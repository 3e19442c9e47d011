#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Factory Pattern for test data generation using factory-boy
#
import random

import factory

from domain.corpus import Document, Query
from domain.judgment import JudgmentRecord
from domain.run import CandidateEntry, CandidateList


class DocumentFactory(factory.Factory):
    """Factory for corpus documents"""
    class Meta:
        model = Document

    doc_id = factory.Sequence(lambda n: f"doc{n:05d}")
    title = factory.Faker('sentence', nb_words=4)
    text = factory.Faker('paragraph', nb_sentences=4)


class QueryFactory(factory.Factory):
    """Factory for queries without augmented text"""
    class Meta:
        model = Query

    query_id = factory.Sequence(lambda n: f"q{n:04d}")
    text = factory.Faker('sentence', nb_words=8)
    augmented_text = None


class JudgmentRecordFactory(factory.Factory):
    """Factory for judgments with p_yes + p_no <= 1"""
    class Meta:
        model = JudgmentRecord

    query_id = factory.Sequence(lambda n: f"q{n:04d}")
    doc_id = factory.Sequence(lambda n: f"doc{n:05d}")
    p_yes = factory.LazyFunction(lambda: round(random.uniform(0.01, 0.95), 6))
    p_no = factory.LazyAttribute(lambda o: round(random.uniform(0.0, 1.0 - o.p_yes), 6) or 1e-6)
    verdict_text = factory.LazyAttribute(lambda o: "Yes" if o.p_yes >= o.p_no else "No")
    model = "fixture-judge"
    template_hash = "0123456789abcdef"


def candidate_list(query_id: str, doc_ids: list[str], rng: random.Random | None = None,
                   scores: list[float] | None = None) -> CandidateList:
    """Candidates in the given order with non-increasing BM25 scores (random unless given)."""
    rng = rng or random.Random(0)
    if scores is None:
        scores = sorted((round(rng.uniform(0.0, 30.0), 6) for _ in doc_ids), reverse=True)
    entries = tuple(
        CandidateEntry(doc_id, rank, score)
        for rank, (doc_id, score) in enumerate(zip(doc_ids, scores), start=1)
    )
    return CandidateList(query_id, entries, len(entries))
