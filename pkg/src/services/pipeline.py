#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Query analysis, document analysis and yes/no judgment for one query's candidates.
#
"""
Query analysis, document analysis and yes/no judgment for one query's candidates.

The query analysis runs once per query and is cached. Document analysis and
judgment fan out over the candidates under a per-query concurrency limit.
Results come back in first-stage rank order whatever order the requests
complete in.
"""

import asyncio
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Awaitable, Callable, Iterable, Mapping, Optional, Protocol

from backends.base import ChatBackend, ChatRequest, ChatResponse, TokenAlternative
from backends.errors import BackendError, ContextLengthExceededError, MalformedResponseError
from config import reproducible_timestamp
from domain.corpus import Document, Query
from domain.judgment import (
    PROBABILITY_FLOOR,
    PROBABILITY_TOLERANCE,
    DocumentAnalysis,
    JudgmentFailure,
    JudgmentRecord,
    QueryAnalysis,
)
from domain.run import CandidateList
from models import PipelineSettings
from services.prompts import PipelineError, PromptStep, PromptTemplate, render_prompt


logger = logging.getLogger("reljudge")

JUDGMENT_MIN_TOP_LOGPROBS = 5
ANALYSIS_STEPS = (PromptStep.QUERY_ANALYSIS, PromptStep.DOC_ANALYSIS, PromptStep.JUDGMENT)

_DOC_ANALYSIS_SECTIONS = re.compile(r"SUMMARY:\s*(.*?)\s*DISCUSSION:\s*(.*)", re.DOTALL)


class QueryInputError(PipelineError):
    """A query or document has no text to work with."""
    pass


class AnalysisCache(Protocol):
    def get(self, query_id: str) -> Optional[QueryAnalysis]: ...

    def put(self, analysis: QueryAnalysis) -> None: ...


@dataclass(frozen=True)
class PipelineOptions:
    query_text: str = "original"
    use_analyses: bool = True
    doc_char_budget: int = 24000
    concurrency_limit: int = 8
    top_logprobs: int = 20
    analysis_max_new_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be >= 1")
        if self.top_logprobs < JUDGMENT_MIN_TOP_LOGPROBS:
            raise ValueError(f"top_logprobs must be >= {JUDGMENT_MIN_TOP_LOGPROBS} for judgments")

    @classmethod
    def from_settings(cls, settings: PipelineSettings) -> "PipelineOptions":
        return cls(
            query_text=settings.query_text,
            use_analyses=settings.use_analyses,
            doc_char_budget=settings.doc_char_budget,
            concurrency_limit=settings.concurrency_limit,
            top_logprobs=settings.top_logprobs,
            analysis_max_new_tokens=settings.analysis_max_new_tokens,
        )


@dataclass(frozen=True)
class PipelineBackends:
    """Backends per step; document analysis and judgment usually share a model."""
    query_analysis: ChatBackend
    judgment: ChatBackend
    document_analysis: Optional[ChatBackend] = None

    @property
    def doc_analysis(self) -> ChatBackend:
        return self.document_analysis or self.judgment


@dataclass
class UsageTally:
    calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def add(self, response: ChatResponse) -> None:
        self.calls += 1
        self.prompt_tokens += response.usage.prompt_tokens
        self.completion_tokens += response.usage.completion_tokens


@dataclass
class QueryResult:
    query_id: str
    judgments: list[JudgmentRecord] = field(default_factory=list)
    failures: list[JudgmentFailure] = field(default_factory=list)
    new_judgments: int = 0
    query_analysis: Optional[QueryAnalysis] = None
    usage: UsageTally = field(default_factory=UsageTally)


def judgment_template_hash(template: PromptTemplate, use_analyses: bool = True) -> str:
    return template.hash_for(ANALYSIS_STEPS if use_analyses else (PromptStep.DIRECT_JUDGMENT,))


def query_text_for(query: Query, policy: str) -> str:
    if policy == "augmented" and not query.augmented_text:
        logger.warning("Query %s has no augmented text, using the original text", query.query_id)
    return query.text_for(policy)


def extract_yes_no_probs(alternatives: Iterable[TokenAlternative]) -> tuple[float, float]:
    """
    Sum exp(logprob) of first-token alternatives reading "yes" / "no".

    Tokens are compared after stripping whitespace and lowercasing. A side
    with no matching token gets PROBABILITY_FLOOR.
    """
    yes_mass: list[float] = []
    no_mass: list[float] = []
    for alt in alternatives:
        normalized = alt.token.strip().lower()
        if normalized == "yes":
            yes_mass.append(math.exp(alt.logprob))
        elif normalized == "no":
            no_mass.append(math.exp(alt.logprob))

    p_yes = min(max(math.fsum(yes_mass), PROBABILITY_FLOOR), 1.0)
    p_no = min(max(math.fsum(no_mass), PROBABILITY_FLOOR), 1.0)
    total = p_yes + p_no
    if total > 1.0 + PROBABILITY_TOLERANCE:
        # duplicated variants can overshoot when servers round logprobs
        p_yes, p_no = max(p_yes / total, PROBABILITY_FLOOR), max(p_no / total, PROBABILITY_FLOOR)
    return p_yes, p_no


def split_doc_analysis(text: str) -> tuple[str, str]:
    """(extractive_summary, relevance_discussion); ("", text) when the labels are missing."""
    match = _DOC_ANALYSIS_SECTIONS.search(text)
    if match is None:
        return "", text
    return match.group(1).strip(), match.group(2).strip()


def truncate_document(text: str, budget: int) -> str:
    return text[:budget]


async def _complete_with_truncation(
    backend: ChatBackend,
    build: Callable[[str], ChatRequest],
    doc_text: str,
    budget: int,
    label: str,
) -> tuple[ChatResponse, str, bool]:
    """
    Send build(doc_text); on context overflow retry once with the head of
    the document cut to `budget` characters.
    """
    try:
        return await backend.complete(build(doc_text)), doc_text, False
    except ContextLengthExceededError:
        if len(doc_text) <= budget:
            raise
        logger.warning("%s exceeds the context window, retrying with the first %s characters", label, budget)
        shortened = truncate_document(doc_text, budget)
        return await backend.complete(build(shortened)), shortened, True


async def analyze_query(
    backend: ChatBackend,
    template: PromptTemplate,
    query: Query,
    cache: Optional[AnalysisCache] = None,
    query_text: str = "original",
    max_new_tokens: int = 1024,
    usage: Optional[UsageTally] = None,
) -> QueryAnalysis:
    """
    Return the cached analysis for `query` or produce and persist one.

    A cached entry is reused only when it was made by the same model with
    the same query-analysis template.
    """
    text = query_text_for(query, query_text)
    if not text.strip():
        raise QueryInputError(f"Query {query.query_id} has no text")

    template_hash = template.hash_for((PromptStep.QUERY_ANALYSIS,))
    if cache is not None:
        cached = cache.get(query.query_id)
        if cached is not None and cached.model == backend.model and cached.template_hash == template_hash:
            logger.debug("Query analysis cache hit for %s", query.query_id)
            return cached

    system_prompt, user_prompt = render_prompt(template, PromptStep.QUERY_ANALYSIS, query=text)
    response = await backend.complete(
        ChatRequest(system_prompt, user_prompt, max_new_tokens=max_new_tokens, temperature=0.0)
    )
    if usage is not None:
        usage.add(response)
    if not response.text.strip():
        raise MalformedResponseError(f"Empty query analysis for query {query.query_id}")

    analysis = QueryAnalysis(
        query_id=query.query_id,
        analysis_text=response.text.strip(),
        model=backend.model,
        created_at=reproducible_timestamp(),
        template_hash=template_hash,
    )
    if cache is not None:
        cache.put(analysis)
    return analysis


async def analyze_document(
    backend: ChatBackend,
    template: PromptTemplate,
    query: Query,
    query_analysis: QueryAnalysis,
    document: Document,
    query_text: str = "original",
    doc_char_budget: int = 24000,
    max_new_tokens: int = 1024,
    usage: Optional[UsageTally] = None,
) -> DocumentAnalysis:
    doc_text = document.full_text
    if not doc_text.strip():
        raise QueryInputError(f"Document {document.doc_id} has no text")
    text = query_text_for(query, query_text)

    def build(body: str) -> ChatRequest:
        system_prompt, user_prompt = render_prompt(
            template, PromptStep.DOC_ANALYSIS,
            query=text, query_analysis=query_analysis.analysis_text, document=body,
        )
        return ChatRequest(system_prompt, user_prompt, max_new_tokens=max_new_tokens, temperature=0.0)

    response, _, truncated = await _complete_with_truncation(
        backend, build, doc_text, doc_char_budget, f"Document {document.doc_id}"
    )
    if usage is not None:
        usage.add(response)
    summary, discussion = split_doc_analysis(response.text)
    return DocumentAnalysis(query.query_id, document.doc_id, summary, discussion, truncated)


async def _judge(
    backend: ChatBackend,
    step: PromptStep,
    template: PromptTemplate,
    query: Query,
    document: Document,
    query_text: str,
    top_logprobs: int,
    doc_char_budget: int,
    template_hash: str,
    query_analysis: Optional[QueryAnalysis] = None,
    doc_analysis: Optional[DocumentAnalysis] = None,
    usage: Optional[UsageTally] = None,
) -> JudgmentRecord:
    if top_logprobs < JUDGMENT_MIN_TOP_LOGPROBS:
        raise ValueError(f"Judgments need top_logprobs >= {JUDGMENT_MIN_TOP_LOGPROBS}")
    doc_text = document.full_text
    if not doc_text.strip():
        raise QueryInputError(f"Document {document.doc_id} has no text")
    if doc_analysis is not None and doc_analysis.truncated:
        doc_text = truncate_document(doc_text, doc_char_budget)
    text = query_text_for(query, query_text)

    def build(body: str) -> ChatRequest:
        system_prompt, user_prompt = render_prompt(
            template, step,
            query=text,
            query_analysis=query_analysis.analysis_text if query_analysis is not None else None,
            document=body,
            doc_analysis=doc_analysis,
        )
        return ChatRequest(system_prompt, user_prompt, max_new_tokens=1, temperature=0.0, top_logprobs=top_logprobs)

    response, _, truncated = await _complete_with_truncation(
        backend, build, doc_text, doc_char_budget, f"Document {document.doc_id}"
    )
    if usage is not None:
        usage.add(response)
    p_yes, p_no = extract_yes_no_probs(response.first_token_alternatives)
    return JudgmentRecord(
        query_id=query.query_id,
        doc_id=document.doc_id,
        p_yes=p_yes,
        p_no=p_no,
        verdict_text=response.text.strip(),
        model=backend.model,
        template_hash=template_hash,
        extractive_summary=doc_analysis.extractive_summary if doc_analysis is not None else "",
        relevance_discussion=doc_analysis.relevance_discussion if doc_analysis is not None else "",
        truncated=truncated or (doc_analysis is not None and doc_analysis.truncated),
    )


async def judge(
    backend: ChatBackend,
    template: PromptTemplate,
    query: Query,
    query_analysis: QueryAnalysis,
    document: Document,
    doc_analysis: DocumentAnalysis,
    query_text: str = "original",
    top_logprobs: int = 20,
    doc_char_budget: int = 24000,
    usage: Optional[UsageTally] = None,
) -> JudgmentRecord:
    """One-token Yes/No judgment at temperature 0 informed by both analyses."""
    return await _judge(
        backend, PromptStep.JUDGMENT, template, query, document, query_text, top_logprobs,
        doc_char_budget, judgment_template_hash(template, True),
        query_analysis=query_analysis, doc_analysis=doc_analysis, usage=usage,
    )


async def judge_direct(
    backend: ChatBackend,
    template: PromptTemplate,
    query: Query,
    document: Document,
    query_text: str = "original",
    top_logprobs: int = 20,
    doc_char_budget: int = 24000,
    usage: Optional[UsageTally] = None,
) -> JudgmentRecord:
    """Judgment from query and document alone, without the analysis steps."""
    return await _judge(
        backend, PromptStep.DIRECT_JUDGMENT, template, query, document, query_text, top_logprobs,
        doc_char_budget, judgment_template_hash(template, False), usage=usage,
    )


def _failure(query_id: str, doc_id: str, stage: str, exc: Exception) -> JudgmentFailure:
    return JudgmentFailure(query_id, doc_id, stage, type(exc).__name__, str(exc))


async def run_pipeline(
    backends: PipelineBackends,
    template: PromptTemplate,
    query: Query,
    candidates: CandidateList,
    documents: Mapping[str, Document],
    options: PipelineOptions = PipelineOptions(),
    cache: Optional[AnalysisCache] = None,
    existing: Optional[Mapping[str, JudgmentRecord]] = None,
    on_record: Optional[Callable[[JudgmentRecord], Awaitable[None] | None]] = None,
) -> QueryResult:
    """
    Judge every candidate of one query.

    `existing` maps doc_id to judgments from an earlier run; those candidates
    are not sent to the backend again. `on_record` sees each new judgment as
    soon as it is made. A failed query analysis raises; a failed candidate
    becomes a JudgmentFailure and the others continue.
    """
    if len(candidates) == 0:
        raise QueryInputError(f"Query {query.query_id} has no candidates")

    existing = existing or {}
    result = QueryResult(query.query_id)
    slots: list[Optional[JudgmentRecord]] = [existing.get(doc_id) for doc_id in candidates.doc_ids]
    pending = [index for index, record in enumerate(slots) if record is None]
    if not pending:
        logger.info("Query %s: all %s candidates already judged", query.query_id, len(slots))
        result.judgments = [record for record in slots if record is not None]
        return result

    if options.use_analyses:
        result.query_analysis = await analyze_query(
            backends.query_analysis, template, query, cache,
            query_text=options.query_text,
            max_new_tokens=options.analysis_max_new_tokens,
            usage=result.usage,
        )

    semaphore = asyncio.Semaphore(options.concurrency_limit)
    failures: dict[int, JudgmentFailure] = {}

    async def process(index: int) -> None:
        doc_id = candidates.entries[index].doc_id
        document = documents.get(doc_id)
        if document is None:
            failures[index] = JudgmentFailure(query.query_id, doc_id, "input", "UnknownDocument",
                                              f"Document {doc_id} is not in the corpus")
            return
        async with semaphore:
            stage = "judgment"
            try:
                if options.use_analyses:
                    stage = "doc_analysis"
                    doc_analysis = await analyze_document(
                        backends.doc_analysis, template, query, result.query_analysis, document,
                        query_text=options.query_text,
                        doc_char_budget=options.doc_char_budget,
                        max_new_tokens=options.analysis_max_new_tokens,
                        usage=result.usage,
                    )
                    stage = "judgment"
                    record = await judge(
                        backends.judgment, template, query, result.query_analysis, document, doc_analysis,
                        query_text=options.query_text,
                        top_logprobs=options.top_logprobs,
                        doc_char_budget=options.doc_char_budget,
                        usage=result.usage,
                    )
                else:
                    record = await judge_direct(
                        backends.judgment, template, query, document,
                        query_text=options.query_text,
                        top_logprobs=options.top_logprobs,
                        doc_char_budget=options.doc_char_budget,
                        usage=result.usage,
                    )
            except (BackendError, PipelineError) as e:
                logger.warning("Query %s, document %s: %s failed: %s", query.query_id, doc_id, stage, e)
                failures[index] = _failure(query.query_id, doc_id, stage, e)
                return
        slots[index] = record
        result.new_judgments += 1
        if on_record is not None:
            outcome = on_record(record)
            if asyncio.iscoroutine(outcome):
                await outcome

    await asyncio.gather(*(process(index) for index in pending))

    result.judgments = [record for record in slots if record is not None]
    result.failures = [failures[index] for index in sorted(failures)]
    logger.info(
        "Query %s: %s judged (%s new, %s failed), %s calls, %s prompt / %s completion tokens",
        query.query_id, len(result.judgments), result.new_judgments, len(result.failures),
        result.usage.calls, result.usage.prompt_tokens, result.usage.completion_tokens,
    )
    return result
