#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: BM25 first stage: build or reuse the index, retrieve, persist the run.
#
import hashlib
import logging
from collections import defaultdict
from typing import Iterable

from domain.corpus import Query
from domain.run import CandidateList, RunEntry
from repositories.artifacts import FIRST_STAGE_TAG, STAGE_FIRST_STAGE, STAGE_INDEX, artifact_path
from repositories.first_stage_repository import FirstStageRecord, FirstStageRecordRepository
from repositories.index_repository import IndexRepository
from services.bm25 import Bm25Params, InvertedIndex, corpus_fingerprint, retrieve_topk
from services.ingest import read_run, write_run_file
from services.rerank_steps.base import DatasetContext, RerankStep


logger = logging.getLogger("reljudge")


def queries_fingerprint(queries: Iterable[Query], policy: str) -> str:
   """Hash of the query ids and the text retrieval uses under `policy`."""
   digest = hashlib.sha256()
   for query in sorted(queries, key=lambda q: q.query_id):
      for part in (query.query_id, query.text_for(policy)):
         digest.update(part.encode("utf-8"))
         digest.update(b"\x00")
   return digest.hexdigest()[:16]


class FirstStageStep(RerankStep):
   """
   Produces `{dataset}.first_stage.bm25.run` and its settings record
   `{dataset}.first_stage.bm25.json`.

   An existing run is reused only while its record matches the current
   settings and corpus. A run without a record was placed there by hand and
   is reused as given. Candidates are always read back from the run file so
   the BM25 scores used in hybrid scoring are exactly the ones on disk.
   """

   def name(self) -> str:
      return "first_stage"

   def run(self, context: DatasetContext) -> bool:
      settings = context.config.bm25
      run_path = artifact_path(context.output_dir, context.name, STAGE_FIRST_STAGE, FIRST_STAGE_TAG, "run")
      records = FirstStageRecordRepository(
         artifact_path(context.output_dir, context.name, STAGE_FIRST_STAGE, FIRST_STAGE_TAG, "json")
      )
      corpus = corpus_fingerprint(context.documents.values())
      current = FirstStageRecord(
         k1=settings.k1,
         b=settings.b,
         first_stage_k=settings.first_stage_k,
         query_text=settings.query_text,
         corpus=corpus,
         queries=queries_fingerprint(context.queries, settings.query_text),
      )

      if self._reusable(run_path, records, current):
         logger.info("Reusing first-stage run %s", run_path)
      else:
         params = Bm25Params(settings.k1, settings.b)
         index = self._index(context, params, corpus)
         entries: list[RunEntry] = []
         for query in context.queries:
            candidates = retrieve_topk(index, params, query, settings.first_stage_k, settings.query_text)
            if len(candidates) == 0:
               logger.warning("Query %s retrieved no documents", query.query_id)
            entries.extend(candidates.to_run_entries(FIRST_STAGE_TAG))
         write_run_file(run_path, entries)
         records.save(current)

      context.first_stage = read_run(run_path, strict=True)
      grouped: dict[str, list[RunEntry]] = defaultdict(list)
      for entry in context.first_stage:
         grouped[entry.query_id].append(entry)

      context.candidates = {}
      for query in context.queries:
         if query.query_id in grouped:
            context.candidates[query.query_id] = CandidateList.from_run_entries(
               query.query_id, grouped[query.query_id], settings.first_stage_k
            )
      logger.info("First stage for %s: %s queries with candidates", context.name, len(context.candidates))
      context.run_files[FIRST_STAGE_TAG] = run_path
      return True

   @staticmethod
   def _reusable(run_path, records: FirstStageRecordRepository, current: FirstStageRecord) -> bool:
      if not run_path.exists():
         return False
      stored = records.load()
      if stored is None:
         logger.warning("First-stage run %s has no settings record, using it as given", run_path)
         return True
      changed = stored.differences(current)
      if changed:
         logger.warning("First-stage run %s was built with different %s, retrieving again",
                        run_path, ", ".join(changed))
         return False
      return True

   def _index(self, context: DatasetContext, params: Bm25Params, corpus: str) -> InvertedIndex:
      repository = IndexRepository(
         artifact_path(context.output_dir, context.name, STAGE_INDEX, FIRST_STAGE_TAG, "bin")
      )
      if repository.exists():
         stored = repository.load_stored()
         if stored.corpus == corpus:
            logger.info("Loading BM25 index %s", repository.path)
            return stored.index
         logger.warning("BM25 index %s was built from a different corpus, rebuilding", repository.path)
      index = InvertedIndex.build(context.documents.values())
      repository.save(index, params, corpus)
      return index
