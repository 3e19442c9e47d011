#
# SPDX-License-Identifier: AGPL-3.0-only
# Copyright (c) 2026 m2-eng
# Author: m2-eng
# License: GNU Affero General Public License v3.0 (AGPL-3.0-only)
# Purpose: Binary persistence of the BM25 inverted index.
#
"""
Binary persistence of the BM25 inverted index.

Layout: MAGIC (8 bytes) | format version (uint32, big endian) |
payload length (uint64, big endian) | UTF-8 JSON payload.
"""

import json
import logging
import struct
from typing import NamedTuple

from repositories.base import BaseRepository
from repositories.error_handling import handle_repository_errors
from services.bm25 import Bm25Error, Bm25Params, InvertedIndex


logger = logging.getLogger("reljudge")

MAGIC = b"RJBM25\x00\x01"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">8sIQ")


class IndexFormatError(Bm25Error):
    """The file is not an index or has an unsupported format version."""
    pass


class StoredIndex(NamedTuple):
    index: InvertedIndex
    params: Bm25Params | None
    corpus: str | None


class IndexRepository(BaseRepository):
    """Reads and writes one index file."""

    @handle_repository_errors("IndexRepository.save")
    def save(self, index: InvertedIndex, params: Bm25Params | None = None, corpus: str | None = None) -> None:
        """
        Write the index.

        `params` are stored as the defaults for later retrieval, `corpus` is the
        fingerprint of the documents it was built from.
        """
        content = {
            "doc_lengths": index.doc_lengths,
            "postings": {term: [list(p) for p in plist] for term, plist in index.postings.items()},
        }
        if params is not None:
            content["params"] = {"k1": params.k1, "b": params.b}
        if corpus is not None:
            content["corpus"] = corpus
        payload = json.dumps(
            content,
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        ).encode("utf-8")
        with self.unit_of_work(mode="wb") as uow:
            uow.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(payload)))
            uow.write(payload)
        logger.info("Saved BM25 index to %s (%s bytes)", self.path, _HEADER.size + len(payload))

    def load(self) -> InvertedIndex:
        return self.load_stored().index

    def load_with_params(self) -> tuple[InvertedIndex, Bm25Params | None]:
        stored = self.load_stored()
        return stored.index, stored.params

    @handle_repository_errors("IndexRepository.load")
    def load_stored(self) -> StoredIndex:
        data = self.path.read_bytes()
        if len(data) < _HEADER.size:
            raise IndexFormatError(f"{self.path}: file too short for an index header")
        magic, version, length = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise IndexFormatError(f"{self.path}: not a BM25 index file")
        if version != FORMAT_VERSION:
            raise IndexFormatError(f"{self.path}: unsupported index format version {version}")
        payload = data[_HEADER.size:]
        if len(payload) != length:
            raise IndexFormatError(f"{self.path}: truncated payload ({len(payload)} of {length} bytes)")
        decoded = json.loads(payload.decode("utf-8"))
        postings = {
            term: [(doc_id, int(tf)) for doc_id, tf in plist]
            for term, plist in decoded["postings"].items()
        }
        params = None
        if "params" in decoded:
            params = Bm25Params(float(decoded["params"]["k1"]), float(decoded["params"]["b"]))
        return StoredIndex(InvertedIndex(postings, decoded["doc_lengths"]), params, decoded.get("corpus"))
