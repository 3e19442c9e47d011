#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Deterministic artifact names under the output directory.
#
from pathlib import Path

from models import sanitize_tag


FIRST_STAGE_TAG = "bm25"

STAGE_INDEX = "index"
STAGE_FIRST_STAGE = "first_stage"
STAGE_QUERY_ANALYSIS = "query_analysis"
STAGE_JUDGMENTS = "judgments"
STAGE_RUN = "run"
STAGE_REPORT = "report"
STAGE_AGREEMENT = "agreement"
STAGE_FAILURES = "failures"


def artifact_path(output_dir: Path | str, dataset: str, stage: str, tag: str, ext: str) -> Path:
    """`{output_dir}/{dataset}.{stage}.{tag}.{ext}`"""
    return Path(output_dir) / f"{sanitize_tag(dataset)}.{stage}.{sanitize_tag(tag)}.{ext}"


def report_stem(output_dir: Path | str, dataset: str, tag: str) -> Path:
    """Stem for the TSV/JSON pair, `{dataset}.report.{tag}`."""
    return Path(output_dir) / f"{sanitize_tag(dataset)}.{STAGE_REPORT}.{sanitize_tag(tag)}"
