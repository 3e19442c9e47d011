#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Corpus, query, qrels and TREC run file parsing.
#
"""
Corpus, query, qrels and TREC run file parsing.

Formats:
- corpus / queries: BEIR JSON Lines (`_id`, `title`, `text`; queries add
  an optional `augmented_text`)
- qrels: `query_id <TAB> doc_id <TAB> grade`, optional BEIR header row;
  four-column TREC qrels (`query_id iter doc_id grade`) are accepted too
- runs: `query_id Q0 doc_id rank score tag`, scores with 6 decimals
"""

import json
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from domain.corpus import Document, Query, QrelSet
from domain.run import RunEntry
from error_handling import RelJudgeError
from infrastructure.unit_of_work import UnitOfWork


logger = logging.getLogger("reljudge")

MAX_LINE_BYTES = 8 * 1024 * 1024
QRELS_HEADER = ("query-id", "corpus-id", "score")
SCORE_DECIMALS = 6


class IngestError(RelJudgeError):
    """Base class for input format errors."""
    pass


class CorpusParseError(IngestError):
    """A JSON Lines record could not be parsed."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class DuplicateKeyError(IngestError):
    """An identifier or (query, document) pair occurs twice."""
    pass


class QrelsError(IngestError):
    pass


class RunFormatError(IngestError):
    pass


def _numbered_lines(stream: Iterable[str]) -> Iterator[tuple[int, str]]:
    line_number = 0
    iterator = iter(stream)
    while True:
        try:
            line = next(iterator)
        except StopIteration:
            return
        except UnicodeDecodeError as e:
            raise CorpusParseError(line_number + 1, f"invalid UTF-8: {e}") from e
        line_number += 1
        yield line_number, line


def _iter_json_records(stream: Iterable[str]) -> Iterator[tuple[int, dict]]:
    for line_number, line in _numbered_lines(stream):
        if len(line.encode("utf-8")) > MAX_LINE_BYTES:
            raise CorpusParseError(line_number, f"line exceeds {MAX_LINE_BYTES} bytes")
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise CorpusParseError(line_number, f"malformed JSON: {e.msg}") from e
        if not isinstance(record, dict):
            raise CorpusParseError(line_number, "expected a JSON object")
        yield line_number, record


def _record_id(record: dict, line_number: int) -> str:
    raw_id = record.get("_id")
    if isinstance(raw_id, int) and not isinstance(raw_id, bool):
        raw_id = str(raw_id)
    if not isinstance(raw_id, str) or not raw_id:
        raise CorpusParseError(line_number, "missing or empty '_id'")
    return raw_id


def _text_field(record: dict, name: str, line_number: int) -> str:
    value = record.get(name)
    if value is None:
        return ""
    if not isinstance(value, str):
        raise CorpusParseError(line_number, f"'{name}' must be a string")
    return value


def parse_corpus(stream: Iterable[str]) -> list[Document]:
    """
    Parse a BEIR corpus. One document per non-empty line, order preserved.

    Raises:
        CorpusParseError: malformed JSON, missing `_id`, over-long line
        DuplicateKeyError: the same `_id` appears twice
    """
    documents: list[Document] = []
    seen: dict[str, int] = {}
    for line_number, record in _iter_json_records(stream):
        doc_id = _record_id(record, line_number)
        if doc_id in seen:
            raise DuplicateKeyError(
                f"duplicate document id '{doc_id}' on line {line_number} (first on line {seen[doc_id]})"
            )
        seen[doc_id] = line_number
        documents.append(Document(
            doc_id=doc_id,
            title=_text_field(record, "title", line_number),
            text=_text_field(record, "text", line_number),
        ))
    return documents


def parse_queries(stream: Iterable[str]) -> list[Query]:
    """Parse BEIR queries (`_id`, `text`, optional `augmented_text`)."""
    queries: list[Query] = []
    seen: dict[str, int] = {}
    for line_number, record in _iter_json_records(stream):
        query_id = _record_id(record, line_number)
        if query_id in seen:
            raise DuplicateKeyError(
                f"duplicate query id '{query_id}' on line {line_number} (first on line {seen[query_id]})"
            )
        seen[query_id] = line_number
        augmented = record.get("augmented_text")
        if augmented is not None and not isinstance(augmented, str):
            raise CorpusParseError(line_number, "'augmented_text' must be a string")
        queries.append(Query(
            query_id=query_id,
            text=_text_field(record, "text", line_number),
            augmented_text=augmented or None,
        ))
    return queries


def parse_qrels(stream: Iterable[str]) -> QrelSet:
    """
    Parse graded relevance judgments.

    Raises:
        QrelsError: wrong column count, non-integer or negative grade
        DuplicateKeyError: the same (query_id, doc_id) pair twice
    """
    judgments: dict[str, dict[str, int]] = defaultdict(dict)
    first_row = True
    for line_number, line in _numbered_lines(stream):
        columns = line.split()
        if not columns:
            continue
        if first_row and tuple(c.lower() for c in columns) == QRELS_HEADER:
            first_row = False
            continue
        first_row = False

        if len(columns) == 3:
            query_id, doc_id, raw_grade = columns
        elif len(columns) == 4:
            query_id, _, doc_id, raw_grade = columns
        else:
            raise QrelsError(f"line {line_number}: expected 3 or 4 columns, got {len(columns)}")

        try:
            grade = int(raw_grade)
        except ValueError as e:
            raise QrelsError(f"line {line_number}: grade must be an integer, got '{raw_grade}'") from e
        if grade < 0:
            raise QrelsError(f"line {line_number}: grade must be >= 0, got {grade}")
        if doc_id in judgments[query_id]:
            raise DuplicateKeyError(f"line {line_number}: duplicate qrels pair ({query_id}, {doc_id})")
        judgments[query_id][doc_id] = grade
    return QrelSet(judgments)


def _check_run_groups(entries: list[RunEntry], strict: bool) -> None:
    groups: dict[tuple[str, str], list[RunEntry]] = defaultdict(list)
    for entry in entries:
        groups[(entry.query_id, entry.tag)].append(entry)

    problems: list[str] = []
    for (query_id, tag), group in groups.items():
        ordered = sorted(group, key=lambda e: e.rank)
        ranks = [e.rank for e in ordered]
        if ranks != list(range(1, len(ranks) + 1)):
            problems.append(f"ranks of ({query_id}, {tag}) are not 1..{len(ranks)}")
        for previous, current in zip(ordered, ordered[1:]):
            if current.score > previous.score:
                problems.append(
                    f"score increases from rank {previous.rank} to {current.rank} in ({query_id}, {tag})"
                )
                break

    for problem in problems:
        if strict:
            raise RunFormatError(problem)
        logger.warning("Run file: %s", problem)


def parse_run(stream: Iterable[str], strict: bool = False) -> list[RunEntry]:
    """
    Parse a six-column TREC run, preserving line order.

    Rank gaps and score-order violations are warnings unless `strict`.
    """
    entries: list[RunEntry] = []
    for line_number, line in _numbered_lines(stream):
        columns = line.split()
        if not columns:
            continue
        if len(columns) != 6:
            raise RunFormatError(f"line {line_number}: expected 6 columns, got {len(columns)}")
        query_id, _, doc_id, raw_rank, raw_score, tag = columns
        try:
            rank = int(raw_rank)
            score = float(raw_score)
        except ValueError as e:
            raise RunFormatError(f"line {line_number}: bad rank or score: {e}") from e
        if rank < 1:
            raise RunFormatError(f"line {line_number}: rank must be positive, got {rank}")
        if not math.isfinite(score):
            raise RunFormatError(f"line {line_number}: score must be finite")
        entries.append(RunEntry(query_id, doc_id, rank, score, tag))
    _check_run_groups(entries, strict)
    return entries


def format_run_line(entry: RunEntry) -> str:
    for label, value in (("query_id", entry.query_id), ("doc_id", entry.doc_id), ("tag", entry.tag)):
        if not value or any(ch.isspace() for ch in value):
            raise RunFormatError(f"{label} must be non-empty without whitespace: {value!r}")
    return f"{entry.query_id} Q0 {entry.doc_id} {entry.rank} {entry.score:.{SCORE_DECIMALS}f} {entry.tag}\n"


def write_run(entries: Iterable[RunEntry], stream: TextIO) -> None:
    for entry in entries:
        stream.write(format_run_line(entry))


def read_corpus(path: Path) -> list[Document]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_corpus(handle)


def read_queries(path: Path) -> list[Query]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_queries(handle)


def read_qrels(path: Path) -> QrelSet:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_qrels(handle)


def read_run(path: Path, strict: bool = False) -> list[RunEntry]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_run(handle, strict=strict)


def write_run_file(path: Path, entries: Iterable[RunEntry]) -> Path:
    with UnitOfWork(path) as uow:
        write_run(entries, uow.handle)
    logger.info("Wrote run file %s", path)
    return path
