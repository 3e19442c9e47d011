#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Argument parser of the reljudge command line.
#
import argparse

from cli import commands
from config import DEFAULT_CONFIG_PATH
from domain.ranking import DEFAULT_ALPHA


LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=DEFAULT_CONFIG_PATH,
                        help=f"run configuration YAML (default: {DEFAULT_CONFIG_PATH})")
    parser.add_argument("--dataset", action="append",
                        help="dataset name from the configuration; repeat for several (default: all)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reljudge",
        description="BM25 retrieval and LLM-judged reranking with nDCG evaluation.",
    )
    parser.add_argument("--log-level", default="INFO", choices=LOG_LEVELS, help="logging verbosity (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("index", help="build a BM25 index from a JSONL corpus")
    p.add_argument("--corpus", required=True, help="corpus JSONL (_id, title, text)")
    p.add_argument("--out", required=True, help="index file to write")
    p.add_argument("--k1", type=float, default=1.2, help="BM25 k1 stored with the index (default: 1.2)")
    p.add_argument("--b", type=float, default=0.75, help="BM25 b stored with the index (default: 0.75)")
    p.set_defaults(func=commands.cmd_index)

    p = sub.add_parser("retrieve", help="write the BM25 top-k run for a query file")
    p.add_argument("--index", required=True, help="index file from 'reljudge index'")
    p.add_argument("--queries", required=True, help="queries JSONL (_id, text, optional augmented_text)")
    p.add_argument("--k", type=int, default=100, help="candidates per query (default: 100)")
    p.add_argument("--out", required=True, help="TREC run file to write")
    p.add_argument("--k1", type=float, default=None, help="override the k1 stored in the index")
    p.add_argument("--b", type=float, default=None, help="override the b stored in the index")
    p.add_argument("--query-text", choices=("auto", "original", "augmented"), default="auto",
                   help="query text to search with; auto prefers augmented_text (default: auto)")
    p.add_argument("--tag", default="bm25", help="run tag (default: bm25)")
    p.set_defaults(func=commands.cmd_retrieve)

    p = sub.add_parser("analyze-queries", help="fill the query-analysis cache of the configured datasets")
    _add_config(p)
    p.set_defaults(func=commands.cmd_analyze_queries)

    p = sub.add_parser("rerank", help="retrieve, judge, score and evaluate as configured")
    _add_config(p)
    p.set_defaults(func=commands.cmd_rerank)

    p = sub.add_parser("ensemble", help="average judge probabilities and add BM25 scores")
    p.add_argument("--judgments", required=True, nargs="+", help="judgment JSONL files, one per model")
    p.add_argument("--first-stage", required=True, help="first-stage TREC run supplying ranks and BM25 scores")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help=f"probability weight (default: {DEFAULT_ALPHA:g})")
    p.add_argument("--k", type=int, default=None, help="keep only the first k candidates per query")
    p.add_argument("--tag", default=None, help="run tag (default: reljudge-ensemble<N>-a<alpha>)")
    p.add_argument("--template-hash", default=None,
                   help="use only judgments with this template hash (needed when a file mixes templates)")
    p.add_argument("--out", required=True, help="TREC run file to write")
    p.set_defaults(func=commands.cmd_ensemble)

    p = sub.add_parser("agreement", help="Yes/No agreement quadrants of two judgment files")
    p.add_argument("--a", required=True, help="first judgment JSONL")
    p.add_argument("--b", required=True, help="second judgment JSONL")
    p.add_argument("--label-a", default=None, help="row label (default: file stem)")
    p.add_argument("--label-b", default=None, help="column label (default: file stem)")
    p.add_argument("--template-hash", default=None, help="use only judgments with this template hash")
    p.add_argument("--out", default=None, help="write <out>.tsv and <out>.json as well")
    p.set_defaults(func=commands.cmd_agreement)

    p = sub.add_parser("eval", help="nDCG@k of one or more run files")
    p.add_argument("--run", required=True, action="append", help="TREC run file; repeat for several")
    p.add_argument("--qrels", required=True, help="qrels TSV")
    p.add_argument("--k", type=int, default=10, help="cutoff (default: 10)")
    p.add_argument("--dataset", default="", help="dataset label for the report")
    p.add_argument("--exclude-empty", action="store_true", help="leave out queries without relevant documents")
    p.add_argument("--strict", action="store_true", help="reject rank gaps and score-order violations")
    p.add_argument("--out", default=None, help="write <out>.tsv and <out>.json as well")
    p.set_defaults(func=commands.cmd_eval)

    return parser
