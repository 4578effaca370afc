"""Sparse term-by-document matrices under raw, normalized, and tf-idf weights.

Counting is parallelizable across documents: workers count contiguous chunks
and the results are reassembled in ascending document order, so the matrix is
identical at any worker count (counting itself is integer arithmetic and the
row order is sorted afterwards). No explicit zeros are ever stored.
"""

from __future__ import annotations

import dataclasses
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import DocumentRecord
from .errors import MatrixError

logger = logging.getLogger(__name__)

SCHEMES = ("raw", "normalized", "tfidf")
NF_LENGTH_MODES = ("filtered", "raw")

#: Recorded in matrix metadata and dump headers for reproducibility: raw term
#: count times natural-log inverse document frequency, no smoothing.
TFIDF_VARIANT = "count*ln(N/df)"


@dataclasses.dataclass(frozen=True, eq=False)
class TermDocumentMatrix:
    """Words-by-documents weights plus the metadata needed to re-weight them.

    ``doc_lengths`` holds the vocabulary-filtered token count per document
    and ``raw_doc_lengths`` (when available) the pre-filter count;
    ``doc_freq`` is the number of documents containing each word, taken from
    the raw counts.
    """

    words: tuple[str, ...]
    doc_ids: tuple[str, ...]
    matrix: sparse.csr_matrix
    scheme: str
    doc_lengths: np.ndarray
    doc_freq: np.ndarray
    raw_doc_lengths: np.ndarray | None = None
    tfidf_variant: str = TFIDF_VARIANT

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {word: i for i, word in enumerate(self.words)}

    @cached_property
    def col_index(self) -> dict[str, int]:
        return {doc_id: j for j, doc_id in enumerate(self.doc_ids)}


def _per_doc_counts(
    token_streams: Sequence[tuple[str, ...]], workers: int
) -> list[tuple[list[str], np.ndarray]]:
    def one(tokens: tuple[str, ...]) -> tuple[list[str], np.ndarray]:
        counts = Counter(tokens)
        return list(counts.keys()), np.fromiter(
            counts.values(), dtype=np.float64, count=len(counts)
        )

    if workers <= 1 or len(token_streams) < 2 * workers:
        return [one(tokens) for tokens in token_streams]
    chunk_size = -(-len(token_streams) // workers)
    chunks = [
        token_streams[i : i + chunk_size]
        for i in range(0, len(token_streams), chunk_size)
    ]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        chunk_results = list(pool.map(lambda chunk: [one(t) for t in chunk], chunks))
    return [entry for chunk in chunk_results for entry in chunk]


def count_terms(
    records: Sequence[DocumentRecord],
    *,
    raw_lengths: Mapping[str, int] | None = None,
    workers: int = 1,
) -> TermDocumentMatrix:
    """Count raw term occurrences into a sparse words-by-documents matrix.

    Tokens are expected to be vocabulary-filtered already. Documents with no
    tokens are skipped; a corpus with zero non-empty documents is an error.
    Rows cover exactly the words occurring at least once, in sorted order;
    columns follow corpus order.
    """
    kept = [record for record in records if record.tokens]
    if not kept:
        raise MatrixError("corpus has no non-empty documents")
    doc_ids = tuple(record.doc_id for record in kept)
    if len(set(doc_ids)) != len(doc_ids):
        raise MatrixError("duplicate document ids in corpus")

    per_doc = _per_doc_counts([record.tokens for record in kept], max(1, workers))

    # First-seen temporary word ids, remapped to sorted order below so the
    # result does not depend on document order of discovery.
    word_id: dict[str, int] = {}
    row_parts: list[np.ndarray] = []
    col_parts: list[np.ndarray] = []
    data_parts: list[np.ndarray] = []
    for col, (keys, counts) in enumerate(per_doc):
        ids = np.fromiter(
            (word_id.setdefault(word, len(word_id)) for word in keys),
            dtype=np.int64,
            count=len(keys),
        )
        row_parts.append(ids)
        col_parts.append(np.full(len(keys), col, dtype=np.int64))
        data_parts.append(counts)

    unsorted_words = list(word_id)
    order = sorted(range(len(unsorted_words)), key=unsorted_words.__getitem__)
    words = tuple(unsorted_words[i] for i in order)
    remap = np.empty(len(unsorted_words), dtype=np.int64)
    remap[np.asarray(order, dtype=np.int64)] = np.arange(len(order), dtype=np.int64)

    rows = remap[np.concatenate(row_parts)]
    cols = np.concatenate(col_parts)
    data = np.concatenate(data_parts)
    mat = sparse.csr_matrix(
        (data, (rows, cols)), shape=(len(words), len(doc_ids)), dtype=np.float64
    )
    mat.sort_indices()

    doc_freq = np.diff(mat.indptr).astype(np.int64)
    doc_lengths = np.asarray(mat.sum(axis=0)).ravel()
    raw_doc_lengths = None
    if raw_lengths is not None:
        try:
            raw_doc_lengths = np.asarray(
                [raw_lengths[doc_id] for doc_id in doc_ids], dtype=np.float64
            )
        except KeyError as exc:
            raise MatrixError(f"missing raw document length for {exc.args[0]!r}") from None
    return TermDocumentMatrix(
        words=words,
        doc_ids=doc_ids,
        matrix=mat,
        scheme="raw",
        doc_lengths=doc_lengths,
        doc_freq=doc_freq,
        raw_doc_lengths=raw_doc_lengths,
    )


def normalized_frequency(count: float, doc_len: int) -> float:
    """Occurrences divided by document length, in [0, 1]."""
    if doc_len <= 0:
        raise MatrixError("document length must be >= 1 for normalized frequency")
    if count < 0 or count > doc_len:
        raise MatrixError(f"count {count} outside [0, {doc_len}]")
    return count / doc_len


def tfidf_weight(count: float, df: int, n_docs: int) -> float:
    """Raw count times ln(n_docs / df); zero for absent terms."""
    if count == 0:
        return 0.0
    if count < 0:
        raise MatrixError(f"negative count {count}")
    if df <= 0:
        raise MatrixError("term has occurrences but document frequency 0")
    if df > n_docs:
        raise MatrixError(f"document frequency {df} exceeds corpus size {n_docs}")
    return count * np.log(n_docs / df)


def apply_weighting(
    raw: TermDocumentMatrix, scheme: str, *, nf_length: str = "filtered"
) -> TermDocumentMatrix:
    """Transform a raw-count matrix entrywise under ``scheme``.

    ``normalized`` divides each column by its document length (filtered
    length by default, pre-filter length with ``nf_length="raw"``); sparsity
    is unchanged. ``tfidf`` may zero out ubiquitous terms (df = N); such rows
    are dropped from the matrix and the drop count is logged.
    """
    if scheme not in SCHEMES:
        raise MatrixError(f"unknown weighting scheme {scheme!r}: expected one of {SCHEMES}")
    if raw.scheme != "raw":
        raise MatrixError(f"apply_weighting expects raw counts, got scheme {raw.scheme!r}")
    if nf_length not in NF_LENGTH_MODES:
        raise MatrixError(f"unknown nf length mode {nf_length!r}")
    if scheme == "raw":
        return dataclasses.replace(raw, matrix=raw.matrix.copy())

    mat = raw.matrix.copy()
    if scheme == "normalized":
        if nf_length == "filtered":
            lengths = raw.doc_lengths
        else:
            if raw.raw_doc_lengths is None:
                raise MatrixError(
                    "nf_length='raw' requires raw document lengths in the matrix metadata"
                )
            lengths = raw.raw_doc_lengths
        if np.any(lengths <= 0):
            raise MatrixError("document with non-positive length in metadata")
        mat.data = mat.data / lengths[mat.indices]
        return dataclasses.replace(raw, matrix=mat, scheme="normalized")

    # tfidf: scale every row by ln(N / df); df = N rows become all-zero.
    idf = np.log(raw.n_docs / raw.doc_freq.astype(np.float64))
    mat.data = mat.data * np.repeat(idf, np.diff(mat.indptr))
    mat.eliminate_zeros()
    nonzero_rows = np.flatnonzero(np.diff(mat.indptr) > 0)
    if len(nonzero_rows) < len(raw.words):
        dropped = len(raw.words) - len(nonzero_rows)
        logger.info(
            "tf-idf zeroed %d ubiquitous term(s) (df = N); dropped from the matrix",
            dropped,
        )
        mat = mat[nonzero_rows]
        words = tuple(raw.words[i] for i in nonzero_rows)
        doc_freq = raw.doc_freq[nonzero_rows]
    else:
        words = raw.words
        doc_freq = raw.doc_freq
    mat.sort_indices()
    return dataclasses.replace(
        raw, matrix=mat, scheme="tfidf", words=words, doc_freq=doc_freq
    )


def filter_min_df(tdm: TermDocumentMatrix, min_df: int) -> TermDocumentMatrix:
    """Drop rows whose document frequency is below ``min_df`` (raw counts only).

    Document lengths are left untouched: they describe the filtered token
    streams, not the surviving rows.
    """
    if min_df <= 1:
        return tdm
    if tdm.scheme != "raw":
        raise MatrixError("min-df filtering applies to raw counts")
    keep = np.flatnonzero(tdm.doc_freq >= min_df)
    if keep.size == 0:
        raise MatrixError(f"min-df {min_df} removed every term")
    if keep.size == len(tdm.words):
        return tdm
    mat = tdm.matrix[keep]
    mat.sort_indices()
    logger.info("min-df %d dropped %d term(s)", min_df, len(tdm.words) - keep.size)
    return dataclasses.replace(
        tdm,
        matrix=mat,
        words=tuple(tdm.words[i] for i in keep),
        doc_freq=tdm.doc_freq[keep],
    )


def write_matrix_dump(tdm: TermDocumentMatrix, sink) -> None:
    """Write ``lemma#pos<TAB>doc_id<TAB>weight`` triples in row-major order,
    after a header recording scheme, corpus size, and the tf-idf variant."""

    def _write(fh) -> None:
        fh.write(
            f"# scheme={tdm.scheme}\tn_docs={tdm.n_docs}\ttfidf_variant={tdm.tfidf_variant}\n"
        )
        csr = tdm.matrix
        for row in range(len(tdm.words)):
            start, stop = csr.indptr[row], csr.indptr[row + 1]
            for pos in range(start, stop):
                col = csr.indices[pos]
                fh.write(
                    f"{tdm.words[row]}\t{tdm.doc_ids[col]}\t{csr.data[pos]:.9g}\n"
                )

    if hasattr(sink, "write"):
        _write(sink)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            _write(fh)
