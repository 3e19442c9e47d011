#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Load corpus, queries and qrels of a dataset.
#
import logging

from services.ingest import read_corpus, read_qrels, read_queries
from services.rerank_steps.base import DatasetContext, RerankStep


logger = logging.getLogger("reljudge")


class LoadDatasetStep(RerankStep):
   def name(self) -> str:
      return "dataset"

   def run(self, context: DatasetContext) -> bool:
      documents = read_corpus(context.dataset.corpus)
      context.documents = {document.doc_id: document for document in documents}
      context.queries = read_queries(context.dataset.queries)
      if context.dataset.qrels is not None:
         context.qrels = read_qrels(context.dataset.qrels)

      logger.info(
         "Dataset %s: %s documents, %s queries%s",
         context.name, len(context.documents), len(context.queries),
         f", qrels for {len(context.qrels)} queries" if context.qrels is not None else "",
      )
      return True
