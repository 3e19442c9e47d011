#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Faker-based test data generators for corpora, qrels and judgments
#
import random

from faker import Faker

from domain.corpus import Document, QrelSet, Query
from domain.judgment import JudgmentRecord
from domain.run import CandidateList

from factories import candidate_list


class TestDataGenerator:
    """Generate seeded, repeatable test data using Faker"""
    __test__ = False

    def __init__(self, seed: int = 0, locale: str = 'en_US'):
        self.faker = Faker(locale)
        self.faker.seed_instance(seed)
        self.rng = random.Random(seed)

    # ========================================
    # CORPUS DATA GENERATORS
    # ========================================

    def vocabulary(self, size: int = 40) -> list[str]:
        words: list[str] = []
        while len(words) < size:
            word = self.faker.unique.word().lower()
            if word.isalpha():
                words.append(word)
        self.faker.unique.clear()
        return words

    def corpus(self, count: int = 30, vocabulary: list[str] | None = None,
               min_len: int = 1, max_len: int = 40) -> list[Document]:
        """Documents drawn from a small vocabulary so terms repeat across documents."""
        vocabulary = vocabulary or self.vocabulary()
        return [
            Document(
                doc_id=f"doc{index:04d}",
                title="",
                text=" ".join(self.rng.choices(vocabulary, k=self.rng.randint(min_len, max_len))),
            )
            for index in range(count)
        ]

    def queries(self, count: int, vocabulary: list[str], max_terms: int = 4) -> list[Query]:
        return [
            Query(f"q{index:03d}", " ".join(self.rng.choices(vocabulary, k=self.rng.randint(1, max_terms))))
            for index in range(count)
        ]

    # ========================================
    # RELEVANCE DATA GENERATORS
    # ========================================

    def qrels(self, query_ids: list[str], doc_ids: list[str], pairs_per_query: int = 5,
              max_grade: int = 3) -> QrelSet:
        judgments = {}
        for query_id in query_ids:
            chosen = self.rng.sample(doc_ids, min(pairs_per_query, len(doc_ids)))
            judgments[query_id] = {doc_id: self.rng.randint(0, max_grade) for doc_id in chosen}
        return QrelSet(judgments)

    def candidates(self, query_id: str, count: int, tie_rate: float = 0.3) -> CandidateList:
        """Candidate list whose BM25 scores contain ties at roughly `tie_rate`."""
        scores: list[float] = []
        for _ in range(count):
            if scores and self.rng.random() < tie_rate:
                scores.append(scores[-1])
            else:
                scores.append(round(self.rng.uniform(0.0, 25.0), 6))
        scores.sort(reverse=True)
        doc_ids = [f"{query_id}-d{index:03d}" for index in range(count)]
        self.rng.shuffle(doc_ids)
        return candidate_list(query_id, doc_ids, scores=scores)

    def judgments(self, candidates: CandidateList, model: str = "fixture-judge",
                  template_hash: str = "0123456789abcdef") -> dict[str, JudgmentRecord]:
        """One judgment per candidate; about a fifth are exact Yes/No ties."""
        records = {}
        for entry in candidates:
            p_yes = round(self.rng.uniform(1e-6, 0.9), 6)
            if self.rng.random() < 0.2:
                p_no = min(p_yes, 1.0 - p_yes)
                p_yes = p_no
            else:
                p_no = round(self.rng.uniform(1e-6, 1.0 - p_yes), 6)
            records[entry.doc_id] = JudgmentRecord(
                candidates.query_id, entry.doc_id, p_yes, p_no,
                "Yes" if p_yes >= p_no else "No", model, template_hash,
            )
        return records
