#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: nDCG@k evaluation, benchmark tables and judgment agreement.
#
"""
nDCG@k evaluation, benchmark tables and judgment agreement.

nDCG uses exponential gain 2^grade - 1 and a log2(rank + 1) discount; the
ideal ranking is built from every judged document of the query, retrieved
or not. A query without relevant documents scores 0.
"""

import logging
import math
from collections import defaultdict
from typing import Iterable, Mapping, Optional, Sequence

from domain.corpus import QrelSet
from domain.judgment import JudgmentRecord
from domain.report import AgreementMatrix, BenchmarkReport, EvalReport
from domain.run import RunEntry
from error_handling import RelJudgeError


logger = logging.getLogger("reljudge")

AVERAGE_ROW = "Average"


class EvaluationError(RelJudgeError):
    pass


def dcg(grades: Sequence[int]) -> float:
    return math.fsum((2 ** grade - 1) / math.log2(rank + 1) for rank, grade in enumerate(grades, start=1))


def ndcg_at_k(ranked_doc_ids: Sequence[str], qrels_for_query: Mapping[str, int], k: int = 10) -> float:
    if k < 1:
        raise EvaluationError(f"k must be >= 1, got {k}")
    ideal = sorted((grade for grade in qrels_for_query.values() if grade > 0), reverse=True)[:k]
    if not ideal:
        return 0.0
    gains = [qrels_for_query.get(doc_id, 0) for doc_id in ranked_doc_ids[:k]]
    return dcg(gains) / dcg(ideal)


def group_run(run: Iterable[RunEntry]) -> dict[str, list[str]]:
    """query_id -> doc_ids in rank order, queries in first-seen order."""
    grouped: dict[str, list[RunEntry]] = defaultdict(list)
    for entry in run:
        grouped[entry.query_id].append(entry)
    return {
        query_id: [e.doc_id for e in sorted(entries, key=lambda e: (e.rank, -e.score, e.doc_id))]
        for query_id, entries in grouped.items()
    }


def evaluate_run(
    run: Sequence[RunEntry],
    qrels: QrelSet,
    k: int = 10,
    run_tag: Optional[str] = None,
    dataset: str = "",
    exclude_empty_queries: bool = False,
) -> EvalReport:
    """Mean nDCG@k over the queries the run and the qrels share."""
    if run_tag is None:
        tags = sorted({entry.tag for entry in run})
        run_tag = tags[0] if len(tags) == 1 else "+".join(tags)

    per_query: dict[str, float] = {}
    skipped: list[str] = []
    for query_id, doc_ids in group_run(run).items():
        if query_id not in qrels:
            skipped.append(query_id)
            continue
        if exclude_empty_queries and not qrels.relevant(query_id):
            skipped.append(query_id)
            continue
        per_query[query_id] = ndcg_at_k(doc_ids, qrels.for_query(query_id), k)

    if skipped:
        logger.warning("%s: skipped %s queries without usable qrels (%s)",
                       run_tag, len(skipped), ", ".join(skipped[:5]))
    if not per_query:
        raise EvaluationError(f"Run {run_tag} shares no evaluable query with the qrels")

    ordered = dict(sorted(per_query.items()))
    mean = math.fsum(ordered.values()) / len(ordered)
    return EvalReport(run_tag, k, ordered, mean, dataset, tuple(skipped))


def _group_report(group: str, members: Sequence[EvalReport]) -> EvalReport:
    per_query = {
        f"{member.dataset}/{query_id}": value
        for member in members
        for query_id, value in member.per_query.items()
    }
    mean = math.fsum(member.mean for member in members) / len(members)
    skipped = tuple(f"{m.dataset}/{q}" for m in members for q in m.skipped_queries)
    return EvalReport(members[0].run_tag, members[0].k, per_query, mean, group, skipped)


def build_benchmark_report(
    reports: Iterable[EvalReport],
    groups: Optional[Mapping[str, Optional[str]]] = None,
) -> BenchmarkReport:
    """
    Arrange per-dataset reports into a dataset x run-tag table.

    Datasets mapped to the same group collapse into one row whose mean is
    the average of their means. The macro average of a run tag is the mean
    over the rows that have it.
    """
    groups = groups or {}
    reports = list(reports)
    if not reports:
        raise EvaluationError("No reports to tabulate")
    ks = {report.k for report in reports}
    if len(ks) != 1:
        raise EvaluationError(f"Reports mix cutoffs {sorted(ks)}")

    collected: dict[str, dict[str, list[EvalReport]]] = {}
    for report in reports:
        row = groups.get(report.dataset) or report.dataset
        collected.setdefault(row, {}).setdefault(report.run_tag, []).append(report)

    cells: dict[str, dict[str, EvalReport]] = {}
    for row, by_tag in collected.items():
        cells[row] = {}
        for tag, members in by_tag.items():
            if len(members) == 1 and members[0].dataset == row:
                cells[row][tag] = members[0]
            else:
                cells[row][tag] = _group_report(row, sorted(members, key=lambda m: m.dataset))

    table = BenchmarkReport(ks.pop(), cells)
    macro = {}
    for tag in table.run_tags:
        means = [row[tag].mean for row in cells.values() if tag in row]
        macro[tag] = math.fsum(means) / len(means)
    return BenchmarkReport(table.k, cells, macro)


def format_report_tsv(report: BenchmarkReport, precision: int = 4) -> str:
    tags = report.run_tags
    lines = ["\t".join(["dataset", *tags])]
    for row, by_tag in report.cells.items():
        values = [f"{by_tag[tag].mean:.{precision}f}" if tag in by_tag else "-" for tag in tags]
        lines.append("\t".join([row, *values]))
    lines.append("\t".join([AVERAGE_ROW, *(f"{report.macro_average[tag]:.{precision}f}" for tag in tags)]))
    return "\n".join(lines) + "\n"


def report_to_dict(report: BenchmarkReport) -> dict:
    return {
        "k": report.k,
        "datasets": {
            row: {tag: cell.to_dict() for tag, cell in by_tag.items()}
            for row, by_tag in report.cells.items()
        },
        "average": dict(report.macro_average),
    }


def _verdicts(judgments: Iterable[JudgmentRecord], label: str) -> dict[tuple[str, str], bool]:
    verdicts: dict[tuple[str, str], bool] = {}
    for record in judgments:
        pair = (record.query_id, record.doc_id)
        if pair in verdicts:
            raise EvaluationError(f"The {label} judgment set holds ({pair[0]}, {pair[1]}) more than once")
        verdicts[pair] = record.verdict
    return verdicts


def agreement(
    judgments_a: Iterable[JudgmentRecord],
    judgments_b: Iterable[JudgmentRecord],
) -> AgreementMatrix:
    """Verdict quadrants of two judgment sets over their shared (query, doc) pairs."""
    verdicts_a = _verdicts(judgments_a, "first")
    verdicts_b = _verdicts(judgments_b, "second")
    shared = verdicts_a.keys() & verdicts_b.keys()
    if not shared:
        raise EvaluationError("The two judgment sets share no (query, document) pair")

    counts = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    for key in shared:
        counts[(verdicts_a[key], verdicts_b[key])] += 1
    return AgreementMatrix(
        yes_yes=counts[(True, True)],
        yes_no=counts[(True, False)],
        no_yes=counts[(False, True)],
        no_no=counts[(False, False)],
        unmatched_a=len(verdicts_a.keys() - shared),
        unmatched_b=len(verdicts_b.keys() - shared),
    )


def format_agreement(matrix: AgreementMatrix, label_a: str = "A", label_b: str = "B") -> str:
    pct = matrix.percentages
    rows = [
        f"{'':<12}{label_b + ' Yes':>14}{label_b + ' No':>14}",
        f"{label_a + ' Yes':<12}{matrix.yes_yes:>7} {pct['yes_yes']:5.1f}%{matrix.yes_no:>7} {pct['yes_no']:5.1f}%",
        f"{label_a + ' No':<12}{matrix.no_yes:>7} {pct['no_yes']:5.1f}%{matrix.no_no:>7} {pct['no_no']:5.1f}%",
        f"shared pairs: {matrix.total}, only in {label_a}: {matrix.unmatched_a}, only in {label_b}: {matrix.unmatched_b}",
    ]
    return "\n".join(rows) + "\n"
