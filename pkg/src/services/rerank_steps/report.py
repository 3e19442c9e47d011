#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Evaluate the first-stage run and every reranked run of a dataset.
#
import logging
from itertools import combinations

from repositories.artifacts import STAGE_AGREEMENT, report_stem
from repositories.report_repository import ReportRepository
from services.evaluation import agreement, build_benchmark_report, evaluate_run
from services.ingest import read_run
from services.rerank_steps.base import DatasetContext, RerankStep
from services.rerank_steps.ranking import tag_prefix


logger = logging.getLogger("reljudge")


class ReportStep(RerankStep):
    def name(self) -> str:
        return "report"

    def run(self, context: DatasetContext) -> bool:
        if context.qrels is None:
            logger.info("Dataset %s has no qrels, skipping evaluation", context.name)
            return True

        evaluation = context.config.evaluation
        context.reports = []
        for tag, path in context.run_files.items():
            # evaluate what is on disk, the strict parse doubles as a format check
            run = read_run(path, strict=True)
            report = evaluate_run(run, context.qrels, evaluation.k, tag, context.name,
                                  evaluation.exclude_empty_queries)
            context.reports.append(report)
            logger.info("%s %s: nDCG@%s = %.4f", context.name, tag, evaluation.k, report.mean)

        table = build_benchmark_report(context.reports)
        ReportRepository(report_stem(context.output_dir, context.name, tag_prefix(context))).save_benchmark(table)
        return True


class AgreementStep(RerankStep):
    """Verdict agreement of every pair of judges that ran on the dataset."""

    def name(self) -> str:
        return "agreement"

    def run(self, context: DatasetContext) -> bool:
        for label_a, label_b in combinations(sorted(context.judgments), 2):
            records_a = [r for by_doc in context.judgments[label_a].values() for r in by_doc.values()]
            records_b = [r for by_doc in context.judgments[label_b].values() for r in by_doc.values()]
            if not records_a or not records_b:
                continue
            matrix = agreement(records_a, records_b)
            stem = context.output_dir / f"{context.name}.{STAGE_AGREEMENT}.{label_a}-vs-{label_b}"
            ReportRepository(stem).save_agreement(matrix, label_a, label_b)
            logger.info("%s agreement %s vs %s: %.1f%% matching verdicts", context.name, label_a, label_b,
                        matrix.percentages['yes_yes'] + matrix.percentages['no_no'])
        return True
