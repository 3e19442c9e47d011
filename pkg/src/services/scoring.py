#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Turn judgments into rankings: discrete, continuous, hybrid and ensemble scoring.
#
"""
Turn judgments into rankings.

- discrete: accepted documents first, first-stage order inside each group
- continuous: by S_prob = p_yes / (p_yes + p_no)
- hybrid: by alpha * S_prob + S_BM25
- ensemble: by alpha * mean(S_prob over models) + S_BM25

Ties are broken by first-stage rank, then doc_id.
"""

import logging
import math
from typing import Mapping, Optional, Sequence

from domain.judgment import PROBABILITY_FLOOR, JudgmentRecord
from domain.ranking import DEFAULT_ALPHA, RankedRun, ScoredCandidate, ScoringConfig, ScoringMode
from domain.run import CandidateEntry, CandidateList
from error_handling import RelJudgeError
from models import sanitize_tag


logger = logging.getLogger("reljudge")

DEFAULT_TAG_PREFIX = "reljudge"


class ScoringError(RelJudgeError):
    pass


def normalize_prob(p_yes: float, p_no: float) -> float:
    total = p_yes + p_no
    if p_yes < 0 or p_no < 0 or total <= 0:
        raise ScoringError(f"Cannot normalize p_yes={p_yes}, p_no={p_no}")
    return p_yes / total


def hybrid_score(prob_score: float, bm25_score: float, alpha: float = DEFAULT_ALPHA) -> float:
    if not (math.isfinite(prob_score) and math.isfinite(bm25_score) and math.isfinite(alpha)):
        raise ScoringError(f"Non-finite hybrid input ({prob_score}, {bm25_score}, {alpha})")
    return alpha * prob_score + bm25_score


def ensemble_score(prob_scores: Sequence[float], bm25_score: float, alpha: float = DEFAULT_ALPHA) -> float:
    """alpha * mean(prob_scores) + bm25_score."""
    if not prob_scores:
        raise ScoringError("Ensemble needs at least one model score")
    for value in prob_scores:
        if not 0.0 <= value <= 1.0:
            raise ScoringError(f"Model score {value} outside [0, 1]")
    return hybrid_score(math.fsum(prob_scores) / len(prob_scores), bm25_score, alpha)


def _format_alpha(alpha: float) -> str:
    return sanitize_tag(f"{alpha:g}".replace(".", "p"))


def run_tag(mode: ScoringMode | str, alpha: float = DEFAULT_ALPHA, prefix: str = DEFAULT_TAG_PREFIX) -> str:
    """reljudge-discrete, reljudge-continuous, reljudge-hybrid-a100"""
    mode = ScoringMode(mode)
    if mode is ScoringMode.HYBRID:
        return sanitize_tag(f"{prefix}-{mode.value}-a{_format_alpha(alpha)}")
    return sanitize_tag(f"{prefix}-{mode.value}")


def ensemble_tag(members: int, alpha: float = DEFAULT_ALPHA, prefix: str = DEFAULT_TAG_PREFIX) -> str:
    return sanitize_tag(f"{prefix}-ensemble{members}-a{_format_alpha(alpha)}")


def _check_coverage(candidates: CandidateList, values: Mapping[str, object], label: str) -> None:
    expected = set(candidates.doc_ids)
    provided = set(values)
    if expected != provided:
        missing = sorted(expected - provided)[:5]
        extra = sorted(provided - expected)[:5]
        raise ScoringError(
            f"{label} for query {candidates.query_id} do not match its candidates "
            f"(missing {missing}, unexpected {extra})"
        )


def _build_run(
    candidates: CandidateList,
    ordered: Sequence[CandidateEntry],
    final_scores: Mapping[str, float],
    prob_scores: Mapping[str, float],
    verdicts: Mapping[str, bool],
    mode: ScoringMode,
    tag: str,
) -> RankedRun:
    scored = tuple(
        ScoredCandidate(
            doc_id=entry.doc_id,
            first_stage_rank=entry.first_stage_rank,
            bm25_score=entry.bm25_score,
            prob_score=prob_scores[entry.doc_id],
            verdict=verdicts[entry.doc_id],
            final_score=final_scores[entry.doc_id],
            final_rank=position,
        )
        for position, entry in enumerate(ordered, start=1)
    )
    return RankedRun(candidates.query_id, mode, scored, tag)


def _sort_by_score(candidates: CandidateList, scores: Mapping[str, float]) -> list[CandidateEntry]:
    return sorted(candidates.entries, key=lambda e: (-scores[e.doc_id], e.first_stage_rank, e.doc_id))


def rank_discrete(
    candidates: CandidateList,
    verdicts: Mapping[str, bool],
    prob_scores: Optional[Mapping[str, float]] = None,
    tag: str = "",
) -> RankedRun:
    """
    Accepted documents before rejected ones, first-stage order within each.

    The emitted score is n - R + 1 so the run file stays score-ordered.
    """
    _check_coverage(candidates, verdicts, "Verdicts")
    if prob_scores is None:
        prob_scores = {doc_id: 1.0 if accepted else 0.0 for doc_id, accepted in verdicts.items()}
    accepted = [e for e in candidates.entries if verdicts[e.doc_id]]
    rejected = [e for e in candidates.entries if not verdicts[e.doc_id]]
    ordered = accepted + rejected
    n = len(ordered)
    final_scores = {entry.doc_id: float(n - position) for position, entry in enumerate(ordered)}
    return _build_run(candidates, ordered, final_scores, prob_scores, verdicts, ScoringMode.DISCRETE,
                      tag or run_tag(ScoringMode.DISCRETE))


def rank_continuous(
    candidates: CandidateList,
    prob_scores: Mapping[str, float],
    tag: str = "",
    verdicts: Optional[Mapping[str, bool]] = None,
) -> RankedRun:
    _check_coverage(candidates, prob_scores, "Scores")
    if verdicts is None:
        verdicts = {doc_id: score >= 0.5 for doc_id, score in prob_scores.items()}
    ordered = _sort_by_score(candidates, prob_scores)
    return _build_run(candidates, ordered, prob_scores, prob_scores, verdicts, ScoringMode.CONTINUOUS,
                      tag or run_tag(ScoringMode.CONTINUOUS))


def rank_hybrid(
    candidates: CandidateList,
    prob_scores: Mapping[str, float],
    alpha: float = DEFAULT_ALPHA,
    tag: str = "",
    verdicts: Optional[Mapping[str, bool]] = None,
) -> RankedRun:
    _check_coverage(candidates, prob_scores, "Scores")
    if verdicts is None:
        verdicts = {doc_id: score >= 0.5 for doc_id, score in prob_scores.items()}
    final_scores = {e.doc_id: hybrid_score(prob_scores[e.doc_id], e.bm25_score, alpha) for e in candidates}
    ordered = _sort_by_score(candidates, final_scores)
    return _build_run(candidates, ordered, final_scores, prob_scores, verdicts, ScoringMode.HYBRID,
                      tag or run_tag(ScoringMode.HYBRID, alpha))


def rank_ensemble(
    candidates: CandidateList,
    member_scores: Sequence[Mapping[str, float]],
    alpha: float = DEFAULT_ALPHA,
    tag: str = "",
) -> RankedRun:
    """Hybrid ranking on the mean S_prob of several judges."""
    if not member_scores:
        raise ScoringError("Ensemble needs at least one model")
    for scores in member_scores:
        _check_coverage(candidates, scores, "Ensemble scores")
    mean_scores = {
        e.doc_id: math.fsum(scores[e.doc_id] for scores in member_scores) / len(member_scores)
        for e in candidates
    }
    final_scores = {
        e.doc_id: ensemble_score([scores[e.doc_id] for scores in member_scores], e.bm25_score, alpha)
        for e in candidates
    }
    verdicts = {doc_id: score >= 0.5 for doc_id, score in mean_scores.items()}
    ordered = _sort_by_score(candidates, final_scores)
    return _build_run(candidates, ordered, final_scores, mean_scores, verdicts, ScoringMode.HYBRID,
                      tag or ensemble_tag(len(member_scores), alpha))


def judgment_probabilities(
    candidates: CandidateList,
    judgments: Mapping[str, JudgmentRecord],
) -> tuple[dict[str, float], dict[str, bool]]:
    """
    S_prob and verdict per candidate.

    Candidates without a judgment (failed or not yet judged) get S_prob 0.5
    and verdict No, so discrete runs keep them below every accepted document.
    """
    prob_scores: dict[str, float] = {}
    verdicts: dict[str, bool] = {}
    missing = 0
    for entry in candidates:
        record = judgments.get(entry.doc_id)
        if record is None:
            missing += 1
            prob_scores[entry.doc_id] = normalize_prob(PROBABILITY_FLOOR, PROBABILITY_FLOOR)
            verdicts[entry.doc_id] = False
        else:
            prob_scores[entry.doc_id] = normalize_prob(record.p_yes, record.p_no)
            verdicts[entry.doc_id] = record.verdict
    if missing:
        logger.warning("Query %s: %s candidates without judgment scored 0.5 and rejected",
                       candidates.query_id, missing)
    return prob_scores, verdicts


def score_judgments(
    candidates: CandidateList,
    judgments: Mapping[str, JudgmentRecord],
    config: ScoringConfig,
    tag: str = "",
) -> RankedRun:
    prob_scores, verdicts = judgment_probabilities(candidates, judgments)
    if config.mode is ScoringMode.DISCRETE:
        return rank_discrete(candidates, verdicts, prob_scores, tag)
    if config.mode is ScoringMode.CONTINUOUS:
        return rank_continuous(candidates, prob_scores, tag, verdicts)
    return rank_hybrid(candidates, prob_scores, config.alpha, tag, verdicts)
