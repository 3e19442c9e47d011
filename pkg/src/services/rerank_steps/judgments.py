#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Run the judging pipeline for every judge, resuming from earlier judgment files.
#
import asyncio
import json
import logging
from dataclasses import asdict
from typing import Optional

from backends.base import ChatBackend
from backends.errors import BackendError
from backends.factory import create_backend
from domain.judgment import JudgmentFailure, JudgmentRecord
from models import BackendConfig
from repositories.artifacts import STAGE_FAILURES, STAGE_JUDGMENTS, STAGE_QUERY_ANALYSIS, artifact_path
from repositories.base import BaseRepository
from repositories.error_handling import handle_repository_errors
from repositories.judgment_repository import JudgmentRepository
from repositories.query_analysis_repository import QueryAnalysisRepository
from services.pipeline import (
    PipelineBackends,
    PipelineOptions,
    QueryResult,
    judgment_template_hash,
    run_pipeline,
)
from services.prompts import PipelineError, PromptTemplate, load_template
from services.rerank_steps.base import DatasetContext, RerankStep


logger = logging.getLogger("reljudge")

DIRECT_SUFFIX = "direct"


def judge_label(judge: BackendConfig, use_analyses: bool) -> str:
    """Tag of a judge's artifacts; direct-judge runs get their own files."""
    return judge.tag if use_analyses else f"{judge.tag}-{DIRECT_SUFFIX}"


@handle_repository_errors("write failures")
def _write_failures(path, failures: list[JudgmentFailure]) -> None:
    with BaseRepository(path).unit_of_work() as uow:
        for failure in failures:
            uow.write(json.dumps(asdict(failure), sort_keys=True, ensure_ascii=False) + "\n")


class JudgmentStep(RerankStep):
    """
    Judges the candidates of every query with every configured judge.

    Judgments are appended to `{dataset}.judgments.{judge}.jsonl` as they
    complete and the file is rewritten in canonical order at the end, so an
    interrupted run resumes where it stopped.
    """

    def name(self) -> str:
        return "judgments"

    def run(self, context: DatasetContext) -> bool:
        if context.config.pipeline is None or context.config.backends is None:
            raise PipelineError("Reranking needs the 'pipeline' and 'backends' sections")
        settings = context.config.pipeline
        template = load_template(settings.template_dir, settings.query_name, settings.doc_name, settings.relation)
        options = PipelineOptions.from_settings(settings)

        ok = True
        for judge in context.config.backends.judges:
            ok = asyncio.run(self._run_judge(context, judge, template, options)) and ok
        return ok

    def _backend(self, context: DatasetContext, config: BackendConfig) -> ChatBackend:
        factory = context.backend_factory or create_backend
        return factory(config)

    async def _run_judge(
        self,
        context: DatasetContext,
        judge: BackendConfig,
        template: PromptTemplate,
        options: PipelineOptions,
    ) -> bool:
        label = judge_label(judge, options.use_analyses)
        backends_config = context.config.backends
        store = JudgmentRepository(artifact_path(context.output_dir, context.name, STAGE_JUDGMENTS, label, "jsonl"))
        cache = QueryAnalysisRepository(
            artifact_path(context.output_dir, context.name, STAGE_QUERY_ANALYSIS,
                          backends_config.query_analysis.tag, "json")
        )
        template_hash = judgment_template_hash(template, options.use_analyses)

        # drops a torn final line left by an interrupted append
        previous = store.load()
        if previous:
            store.rewrite(previous)
        done = {r.key: r for r in store.load_current(judge.model, template_hash)}
        if done:
            logger.info("Judge %s: resuming with %s earlier judgments", label, len(done))

        query_backend = self._backend(context, backends_config.query_analysis)
        judgment_backend = self._backend(context, judge)
        doc_backend: Optional[ChatBackend] = None
        if judge.document_analysis is not None:
            doc_backend = self._backend(context, judge.document_analysis)
        backends = PipelineBackends(query_backend, judgment_backend, doc_backend)

        query_semaphore = asyncio.Semaphore(context.config.pipeline.query_concurrency)
        results: dict[str, QueryResult] = {}
        failures: list[JudgmentFailure] = []

        async def process(query) -> None:
            candidates = context.candidates.get(query.query_id)
            if candidates is None or len(candidates) == 0:
                return
            existing = {
                doc_id: done[(query.query_id, doc_id, judge.model, template_hash)]
                for doc_id in candidates.doc_ids
                if (query.query_id, doc_id, judge.model, template_hash) in done
            }
            async with query_semaphore:
                try:
                    results[query.query_id] = await run_pipeline(
                        backends, template, query, candidates, context.documents, options,
                        cache=cache, existing=existing, on_record=store.append,
                    )
                except (BackendError, PipelineError) as e:
                    logger.error("Query %s: query analysis failed, its candidates stay unjudged: %s",
                                 query.query_id, e)
                    results[query.query_id] = QueryResult(
                        query.query_id,
                        judgments=list(existing.values()),
                        failures=[
                            JudgmentFailure(query.query_id, doc_id, "query_analysis", type(e).__name__, str(e))
                            for doc_id in candidates.doc_ids if doc_id not in existing
                        ],
                    )

        try:
            await asyncio.gather(*(process(query) for query in context.queries))
        finally:
            for backend in {id(b): b for b in (query_backend, judgment_backend, doc_backend) if b}.values():
                context.backend_calls += backend.calls
                await backend.aclose()

        canonical: list[JudgmentRecord] = []
        by_query: dict[str, dict[str, JudgmentRecord]] = {}
        for query in context.queries:
            result = results.get(query.query_id)
            if result is None:
                continue
            by_query[query.query_id] = {record.doc_id: record for record in result.judgments}
            canonical.extend(result.judgments)
            failures.extend(result.failures)
        dropped = len({r.key for r in previous} - {r.key for r in canonical})
        if dropped:
            logger.info("Judge %s: dropping %s judgments of other models, templates or candidates", label, dropped)
        store.rewrite(canonical)

        context.judgments[label] = by_query
        context.failures[label] = failures
        failures_path = artifact_path(context.output_dir, context.name, STAGE_FAILURES, label, "jsonl")
        if failures:
            logger.warning("Judge %s: %s candidates failed, see %s", label, len(failures), failures_path)
            _write_failures(failures_path, failures)
        elif failures_path.exists():
            failures_path.unlink()
        logger.info("✓ Judge %s on %s: %s judgments, %s failures",
                    label, context.name, len(canonical), len(failures))
        return True
