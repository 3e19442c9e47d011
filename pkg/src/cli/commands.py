#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: One function per reljudge subcommand.
#
"""
One function per reljudge subcommand.

Every command takes the parsed argparse namespace and returns an exit
status through `handle_command_errors`: 0 on success, 2 on a typed error,
1 on anything unexpected.
"""

import asyncio
import logging
import sys
from collections import defaultdict
from pathlib import Path

from backends.errors import BackendError
from backends.factory import create_backend
from config import load_run_config
from domain.run import CandidateList, RunEntry
from error_handling import handle_command_errors
from repositories.artifacts import STAGE_QUERY_ANALYSIS, artifact_path
from repositories.index_repository import IndexRepository
from repositories.judgment_repository import JudgmentRepository
from repositories.query_analysis_repository import QueryAnalysisRepository
from repositories.report_repository import ReportRepository
from services.bm25 import Bm25Params, InvertedIndex, corpus_fingerprint, retrieve_topk
from services.evaluation import agreement, build_benchmark_report, evaluate_run, format_agreement, format_report_tsv
from services.ingest import read_corpus, read_qrels, read_queries, read_run, write_run_file
from services.pipeline import analyze_query
from services.prompts import PipelineError, load_template
from services.rerank_service import RerankService
from services.scoring import ensemble_tag, judgment_probabilities, rank_ensemble


logger = logging.getLogger("reljudge")


@handle_command_errors("index")
def cmd_index(args) -> int:
    params = Bm25Params(args.k1, args.b)
    documents = read_corpus(Path(args.corpus))
    index = InvertedIndex.build(documents)
    IndexRepository(Path(args.out)).save(index, params, corpus_fingerprint(documents))
    logger.info("✓ Indexed %s documents, %s terms into %s", index.doc_count, len(index.postings), args.out)
    return 0


@handle_command_errors("retrieve")
def cmd_retrieve(args) -> int:
    index, stored = IndexRepository(Path(args.index)).load_with_params()
    defaults = stored or Bm25Params()
    params = Bm25Params(
        args.k1 if args.k1 is not None else defaults.k1,
        args.b if args.b is not None else defaults.b,
    )
    entries: list[RunEntry] = []
    for query in read_queries(Path(args.queries)):
        candidates = retrieve_topk(index, params, query, args.k, args.query_text)
        if len(candidates) == 0:
            logger.warning("Query %s retrieved no documents", query.query_id)
        entries.extend(candidates.to_run_entries(args.tag))
    write_run_file(Path(args.out), entries)
    logger.info("✓ Retrieved top-%s for %s queries (k1=%s, b=%s)", args.k, len({e.query_id for e in entries}),
                params.k1, params.b)
    return 0


async def _analyze_dataset(config, name: str) -> int:
    pipeline = config.pipeline
    template = load_template(pipeline.template_dir, pipeline.query_name, pipeline.doc_name, pipeline.relation)
    qa_config = config.backends.query_analysis
    cache = QueryAnalysisRepository(
        artifact_path(config.output_dir, name, STAGE_QUERY_ANALYSIS, qa_config.tag, "json")
    )
    queries = read_queries(config.datasets[name].queries)
    failed = 0

    async with create_backend(qa_config) as backend:
        async def analyze(query) -> None:
            nonlocal failed
            try:
                await analyze_query(backend, template, query, cache,
                                    query_text=pipeline.query_text,
                                    max_new_tokens=pipeline.analysis_max_new_tokens)
            except (BackendError, PipelineError) as e:
                failed += 1
                logger.error("Query %s: analysis failed: %s", query.query_id, e)

        await asyncio.gather(*(analyze(query) for query in queries))
        logger.info("✓ %s: %s query analyses cached in %s (%s new calls)",
                    name, len(cache), cache.path, backend.calls)
    return failed


@handle_command_errors("analyze-queries")
def cmd_analyze_queries(args) -> int:
    config = load_run_config(args.config)
    if config.pipeline is None or config.backends is None:
        raise PipelineError("Query analysis needs the 'pipeline' and 'backends' sections")
    failed = 0
    for name in args.dataset or list(config.datasets):
        failed += asyncio.run(_analyze_dataset(config, name))
    if failed:
        raise PipelineError(f"{failed} query analyses failed")
    return 0


@handle_command_errors("rerank")
def cmd_rerank(args) -> int:
    config = load_run_config(args.config)
    summary = RerankService(config).run(args.dataset)
    if summary.benchmark is not None:
        sys.stdout.write(format_report_tsv(summary.benchmark))
    else:
        for context in summary.contexts:
            if context.reports:
                sys.stdout.write(format_report_tsv(build_benchmark_report(context.reports)))
    return 0


@handle_command_errors("ensemble")
def cmd_ensemble(args) -> int:
    first_stage = read_run(Path(args.first_stage), strict=True)
    grouped: dict[str, list[RunEntry]] = defaultdict(list)
    for entry in first_stage:
        grouped[entry.query_id].append(entry)

    members = []
    for path in args.judgments:
        by_query: dict[str, dict] = defaultdict(dict)
        for record in JudgmentRepository(Path(path)).load_current(template_hash=args.template_hash):
            by_query[record.query_id][record.doc_id] = record
        members.append(by_query)

    tag = args.tag or ensemble_tag(len(members), args.alpha)
    entries: list[RunEntry] = []
    for query_id, query_entries in grouped.items():
        candidates = CandidateList.from_run_entries(query_id, query_entries, args.k)
        member_scores = [judgment_probabilities(candidates, member.get(query_id, {}))[0] for member in members]
        entries.extend(rank_ensemble(candidates, member_scores, args.alpha, tag).to_run_entries())
    write_run_file(Path(args.out), entries)
    logger.info("✓ Ensembled %s judgment files into %s (%s)", len(members), args.out, tag)
    return 0


@handle_command_errors("agreement")
def cmd_agreement(args) -> int:
    judgments_a = JudgmentRepository(Path(args.a)).load_current(template_hash=args.template_hash)
    judgments_b = JudgmentRepository(Path(args.b)).load_current(template_hash=args.template_hash)
    matrix = agreement(judgments_a, judgments_b)
    label_a, label_b = args.label_a or Path(args.a).stem, args.label_b or Path(args.b).stem
    sys.stdout.write(format_agreement(matrix, label_a, label_b))
    if args.out:
        ReportRepository(Path(args.out)).save_agreement(matrix, label_a, label_b)
    return 0


@handle_command_errors("eval")
def cmd_eval(args) -> int:
    qrels = read_qrels(Path(args.qrels))
    reports = []
    for path in args.run:
        run = read_run(Path(path), strict=args.strict)
        reports.append(evaluate_run(run, qrels, args.k, dataset=args.dataset,
                                    exclude_empty_queries=args.exclude_empty))
    table = build_benchmark_report(reports)
    sys.stdout.write(format_report_tsv(table))
    if args.out:
        ReportRepository(Path(args.out)).save_benchmark(table)
    return 0
