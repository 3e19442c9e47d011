#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Score the judgments in every configured mode and write the run files.
#
import logging

from domain.ranking import RankedRun, ScoringConfig
from domain.run import RunEntry
from repositories.artifacts import STAGE_RUN, artifact_path
from services.ingest import write_run_file
from services.rerank_steps.base import DatasetContext, RerankStep
from services.rerank_steps.judgments import DIRECT_SUFFIX, judge_label
from services.scoring import ensemble_tag, judgment_probabilities, rank_ensemble, run_tag, score_judgments


logger = logging.getLogger("reljudge")


def tag_prefix(context: DatasetContext) -> str:
    prefix = context.config.scoring.tag_prefix
    if context.config.pipeline is not None and not context.config.pipeline.use_analyses:
        return f"{prefix}-{DIRECT_SUFFIX}"
    return prefix


class RankingStep(RerankStep):
    """One run per judge and scoring mode, plus the ensemble run when several judges are configured."""

    def name(self) -> str:
        return "ranking"

    def run(self, context: DatasetContext) -> bool:
        scoring = context.config.scoring
        judges = context.config.backends.judges
        use_analyses = context.config.pipeline.use_analyses
        prefix = tag_prefix(context)
        multiple = len(judges) > 1

        for judge in judges:
            label = judge_label(judge, use_analyses)
            judgments = context.judgments.get(label, {})
            for mode in scoring.modes:
                config = ScoringConfig(mode, scoring.alpha)
                tag = run_tag(mode, scoring.alpha, prefix)
                if multiple:
                    tag = f"{tag}-{judge.tag}"
                runs = [
                    score_judgments(candidates, judgments.get(query_id, {}), config, tag)
                    for query_id, candidates in context.candidates.items()
                ]
                self._write(context, tag, runs)

        if multiple:
            tag = ensemble_tag(len(judges), scoring.alpha, prefix)
            runs = []
            for query_id, candidates in context.candidates.items():
                member_scores = [
                    judgment_probabilities(candidates, context.judgments.get(judge_label(j, use_analyses), {})
                                           .get(query_id, {}))[0]
                    for j in judges
                ]
                runs.append(rank_ensemble(candidates, member_scores, scoring.alpha, tag))
            self._write(context, tag, runs)
        return True

    def _write(self, context: DatasetContext, tag: str, runs: list[RankedRun]) -> None:
        entries: list[RunEntry] = [entry for run in runs for entry in run.to_run_entries()]
        path = artifact_path(context.output_dir, context.name, STAGE_RUN, tag, "run")
        write_run_file(path, entries)
        context.runs[tag] = runs
        context.run_files[tag] = path
