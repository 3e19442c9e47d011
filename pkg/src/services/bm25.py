#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Okapi BM25 inverted index and first-stage retrieval.
#
"""
Okapi BM25 inverted index and first-stage retrieval.

score(t, d) = IDF(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
IDF(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))

Query terms are summed per occurrence, so a repeated query term counts twice.
"""

import hashlib
import heapq
import logging
import math
import re
from bisect import bisect_left
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from domain.corpus import Document, Query
from domain.run import CandidateEntry, CandidateList
from error_handling import RelJudgeError


logger = logging.getLogger("reljudge")

_TOKEN_PATTERN = re.compile(r"[^\W_]+")


class Bm25Error(RelJudgeError):
    pass


class EmptyIndexError(Bm25Error):
    pass


class UnknownDocumentError(Bm25Error):
    pass


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN_PATTERN.findall(text.lower())


def corpus_fingerprint(documents: Iterable[Document]) -> str:
    """Hash of doc ids and indexed text, independent of document order."""
    digest = hashlib.sha256()
    for document in sorted(documents, key=lambda d: d.doc_id):
        for part in (document.doc_id, document.full_text):
            digest.update(part.encode("utf-8"))
            digest.update(b"\x00")
    return digest.hexdigest()[:16]


class InvertedIndex:
    """Immutable term -> postings index. Postings are sorted by doc_id."""

    def __init__(self, postings: Mapping[str, Sequence[tuple[str, int]]], doc_lengths: Mapping[str, int]):
        self.postings: dict[str, tuple[tuple[str, int], ...]] = {
            term: tuple(sorted((doc_id, tf) for doc_id, tf in plist))
            for term, plist in postings.items()
        }
        self.doc_lengths: dict[str, int] = dict(doc_lengths)
        self.doc_count = len(self.doc_lengths)
        total = sum(self.doc_lengths.values())
        self.avg_doc_length = total / self.doc_count if self.doc_count else 0.0

    @classmethod
    def build(cls, documents: Iterable[Document]) -> "InvertedIndex":
        postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
        doc_lengths: dict[str, int] = {}
        for document in documents:
            if document.doc_id in doc_lengths:
                raise ValueError(f"duplicate doc_id while indexing: {document.doc_id}")
            tokens = tokenize(document.full_text)
            doc_lengths[document.doc_id] = len(tokens)
            for term, tf in Counter(tokens).items():
                postings[term].append((document.doc_id, tf))
        index = cls(postings, doc_lengths)
        logger.info(
            "Built BM25 index: %s documents, %s terms, avgdl %.2f",
            index.doc_count, len(index.postings), index.avg_doc_length,
        )
        return index

    @cached_property
    def _posting_keys(self) -> dict[str, list[str]]:
        return {term: [doc_id for doc_id, _ in plist] for term, plist in self.postings.items()}

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        df = self.document_frequency(term)
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def term_frequency(self, term: str, doc_id: str) -> int:
        plist = self.postings.get(term)
        if not plist:
            return 0
        keys = self._posting_keys[term]
        position = bisect_left(keys, doc_id)
        if position < len(keys) and keys[position] == doc_id:
            return plist[position][1]
        return 0

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self.doc_lengths

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return self.postings == other.postings and self.doc_lengths == other.doc_lengths


def _term_weight(idf: float, tf: int, doc_length: int, avg_doc_length: float, params: Bm25Params) -> float:
    norm = 1.0 - params.b + params.b * doc_length / avg_doc_length
    return idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)


def score(index: InvertedIndex, params: Bm25Params, query_terms: Sequence[str], doc_id: str) -> float:
    """BM25 score of one indexed document; 0.0 when no query term occurs in it."""
    if doc_id not in index.doc_lengths:
        raise UnknownDocumentError(f"document not in index: {doc_id}")
    doc_length = index.doc_lengths[doc_id]
    total = 0.0
    for term in query_terms:
        tf = index.term_frequency(term, doc_id)
        if tf:
            total += _term_weight(index.idf(term), tf, doc_length, index.avg_doc_length, params)
    return total


def retrieve_topk(
    index: InvertedIndex,
    params: Bm25Params,
    query: Query,
    k: int,
    query_text_policy: str = "auto",
) -> CandidateList:
    """
    Top-k documents by BM25, ties broken by ascending doc_id.

    Only documents with a positive score are returned, so the list can be
    shorter than k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if index.doc_count == 0:
        raise EmptyIndexError("cannot retrieve from an empty index")

    if query_text_policy == "augmented" and not query.augmented_text:
        logger.warning("Query %s has no augmented text, retrieving with the original text", query.query_id)
    terms = tokenize(query.text_for(query_text_policy))
    accumulator: dict[str, float] = defaultdict(float)
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for doc_id, tf in plist:
            accumulator[doc_id] += _term_weight(idf, tf, index.doc_lengths[doc_id], index.avg_doc_length, params)

    scored = [(s, doc_id) for doc_id, s in accumulator.items() if s > 0]
    top = heapq.nsmallest(k, scored, key=lambda item: (-item[0], item[1]))
    entries = tuple(
        CandidateEntry(doc_id=doc_id, first_stage_rank=rank, bm25_score=s)
        for rank, (s, doc_id) in enumerate(top, start=1)
    )
    return CandidateList(query_id=query.query_id, entries=entries, k=k)
