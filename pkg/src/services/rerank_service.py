#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Run the rerank steps for each configured dataset and tabulate the results.
#
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional

from domain.report import BenchmarkReport, EvalReport
from error_handling import ConfigError
from models import RunConfig
from repositories.artifacts import report_stem
from repositories.report_repository import ReportRepository
from services.evaluation import build_benchmark_report
from services.rerank_steps.base import BackendFactory, DatasetContext, RerankStep
from services.rerank_steps.dataset import LoadDatasetStep
from services.rerank_steps.first_stage import FirstStageStep
from services.rerank_steps.judgments import JudgmentStep
from services.rerank_steps.ranking import RankingStep, tag_prefix
from services.rerank_steps.report import AgreementStep, ReportStep


logger = logging.getLogger("reljudge")

BENCHMARK_NAME = "benchmark"


def default_steps() -> List[RerankStep]:
    return [LoadDatasetStep(), FirstStageStep(), JudgmentStep(), RankingStep(), ReportStep(), AgreementStep()]


@dataclass
class RerankSummary:
    contexts: list[DatasetContext] = field(default_factory=list)
    benchmark: Optional[BenchmarkReport] = None

    @property
    def backend_calls(self) -> int:
        return sum(context.backend_calls for context in self.contexts)

    @property
    def failure_count(self) -> int:
        return sum(len(f) for context in self.contexts for f in context.failures.values())


class RerankService:
    def __init__(self, config: RunConfig, steps: List[RerankStep] | None = None,
                 backend_factory: Optional[BackendFactory] = None):
        """
        Initializes the rerank service.

        Args:
            config: Validated run configuration
            steps: Steps to run per dataset (defaults to the full rerank chain)
            backend_factory: Builds a chat backend from its config (tests inject scripted ones)
        """
        self.config = config
        self.steps = steps if steps is not None else default_steps()
        self.backend_factory = backend_factory

        if not self.steps:
            raise ValueError("Rerank steps are required.")

    def run_dataset(self, name: str) -> DatasetContext:
        if name not in self.config.datasets:
            raise ConfigError(f"Unknown dataset '{name}', configured: {sorted(self.config.datasets)}")
        context = DatasetContext(name, self.config.datasets[name], self.config, self.backend_factory)
        for step in self.steps:
            logger.info("Running step: %s (%s)", step.name(), name)
            if not step.run(context):
                logger.warning("Step %s reported problems for %s", step.name(), name)
        return context

    def run(self, datasets: Iterable[str] | None = None) -> RerankSummary:
        """Runs all steps for each dataset (all configured ones by default)."""
        names = list(datasets) if datasets else list(self.config.datasets)
        summary = RerankSummary()
        for name in names:
            summary.contexts.append(self.run_dataset(name))

        reports: list[EvalReport] = [report for context in summary.contexts for report in context.reports]
        if len(summary.contexts) > 1 and reports:
            groups = {name: dataset.group for name, dataset in self.config.datasets.items()}
            summary.benchmark = build_benchmark_report(reports, groups)
            stem: Path = report_stem(self.config.output_dir, BENCHMARK_NAME, tag_prefix(summary.contexts[0]))
            ReportRepository(stem).save_benchmark(summary.benchmark)

        logger.info("✓ Rerank finished: %s datasets, %s backend calls, %s failed candidates",
                    len(summary.contexts), summary.backend_calls, summary.failure_count)
        return summary
