"""Word-by-emotion lexicon: product, two-stage normalization, serialization.

The lexicon is the words-by-documents matrix multiplied into the
documents-by-emotions vote matrix, normalized column-wise (each emotion
column divided by its own sum, so a globally over-voted emotion's advantage
divides out) and then scaled row-wise to unit sums. Per-row inner products
run in ascending document order, so results are identical at any parallelism
level; the built lexicon is immutable and freely shareable.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import textpipe
from .corpus import (
    DocEmotionMatrix,
    DocumentRecord,
    EmotionSet,
    vote_matrix,
)
from .errors import LexiconError
from .matrix import (
    SCHEMES,
    TermDocumentMatrix,
    apply_weighting,
    count_terms,
    filter_min_df,
    write_matrix_dump,
)

logger = logging.getLogger(__name__)

HEADER_KEY = "Lemma#PoS"
COL_NORM_MODES = ("sum", "max")

#: Serialized score precision (significant digits) and the row-sum tolerance
#: accepted when reading files back (looser than the build-time 1e-9 because
#: rows are rounded to the serialized precision).
SERIALIZED_DIGITS = 9
READ_ROW_SUM_TOLERANCE = 1e-6


def _fmt(value: float) -> str:
    return format(float(value), f".{SERIALIZED_DIGITS}g")


class EmotionLexicon:
    """Words-by-emotions score matrix with non-negative, row-stochastic rows.

    ``provenance`` is an ordered list of (key, value) string pairs written as
    ``#``-prefixed metadata lines in the serialized form and preserved
    verbatim by a read/write round trip.
    """

    def __init__(
        self,
        emotions: Sequence[str],
        rows: Mapping[str, np.ndarray] | Iterable[tuple[str, np.ndarray]],
        provenance: Sequence[tuple[str, str]] = (),
    ):
        self.emotions = tuple(emotions)
        if not self.emotions:
            raise LexiconError("lexicon needs at least one emotion")
        items = rows.items() if isinstance(rows, Mapping) else rows
        pairs = sorted(
            ((str(word), np.asarray(vec, dtype=np.float64)) for word, vec in items),
            key=lambda pair: pair[0],
        )
        if not pairs:
            raise LexiconError("empty lexicon")
        for word, vec in pairs:
            if vec.shape != (len(self.emotions),):
                raise LexiconError(
                    f"row {word!r} has {vec.shape} scores, expected {len(self.emotions)}"
                )
        self._words = tuple(word for word, _ in pairs)
        if len(set(self._words)) != len(self._words):
            raise LexiconError("duplicate words in lexicon rows")
        self._scores = np.stack([vec for _, vec in pairs])
        if not np.all(np.isfinite(self._scores)) or np.any(self._scores < 0):
            raise LexiconError("lexicon scores must be finite and non-negative")
        self._row_of = {word: i for i, word in enumerate(self._words)}
        self.provenance = [(str(k), str(v)) for k, v in provenance]

    @property
    def words(self) -> tuple[str, ...]:
        return self._words

    @property
    def scores(self) -> np.ndarray:
        return self._scores

    def __contains__(self, word: object) -> bool:
        return word in self._row_of

    def __len__(self) -> int:
        return len(self._words)

    def row(self, word: str) -> np.ndarray:
        try:
            return self._scores[self._row_of[word]]
        except KeyError:
            raise LexiconError(f"word {word!r} not in lexicon") from None

    def items(self) -> Iterable[tuple[str, np.ndarray]]:
        for i, word in enumerate(self._words):
            yield word, self._scores[i]


def emotion_product(wd: TermDocumentMatrix, de: DocEmotionMatrix) -> np.ndarray:
    """Raw words-by-emotions mass: for each word and emotion, the sum over
    documents of the word's weight times the document's vote fraction."""
    wd_ids = set(wd.doc_ids)
    de_ids = set(de.doc_ids)
    if wd_ids != de_ids:
        diff = sorted(wd_ids ^ de_ids)
        shown = ", ".join(diff[:10]) + (", ..." if len(diff) > 10 else "")
        raise LexiconError(
            f"document sets differ between term matrix and vote matrix ({len(diff)} ids): {shown}"
        )
    position = {doc_id: i for i, doc_id in enumerate(de.doc_ids)}
    aligned = de.values[[position[doc_id] for doc_id in wd.doc_ids], :]
    return np.asarray(wd.matrix @ aligned)


def column_normalize(
    raw: np.ndarray, emotions: Sequence[str], mode: str = "sum"
) -> np.ndarray:
    """Divide each emotion column by its own sum (or maximum, mode="max").

    A zero column means an emotion no document ever received and is an
    error naming that emotion.
    """
    if mode not in COL_NORM_MODES:
        raise LexiconError(f"unknown column normalization mode {mode!r}")
    mat = np.asarray(raw, dtype=np.float64)
    denom = mat.sum(axis=0) if mode == "sum" else mat.max(axis=0, initial=0.0)
    zero = np.flatnonzero(denom <= 0)
    if zero.size:
        labels = [str(emotions[i]) for i in zero]
        raise LexiconError(f"emotion column(s) with zero mass: {', '.join(labels)}")
    return mat / denom


def row_scale(
    mat: np.ndarray, words: Sequence[str]
) -> tuple[tuple[str, ...], np.ndarray, int]:
    """Scale each row to a unit sum; rows with zero sum are dropped and counted."""
    values = np.asarray(mat, dtype=np.float64)
    sums = values.sum(axis=1)
    keep = np.flatnonzero(sums > 0)
    dropped = len(words) - keep.size
    scaled = values[keep] / sums[keep, None]
    return tuple(words[i] for i in keep), scaled, dropped


def build_lexicon(
    corpus: Sequence[DocumentRecord],
    vocab: textpipe.VocabularyFilter,
    scheme: str,
    *,
    emotions: EmotionSet | None = None,
    lemma_table: textpipe.LemmaTable | None = None,
    ambiguity: str = "all",
    col_norm: str = "sum",
    nf_length: str = "filtered",
    min_df: int = 1,
    workers: int = 1,
    extra_provenance: Sequence[tuple[str, str]] = (),
    matrix_dump_sink=None,
) -> EmotionLexicon:
    """Run the full pipeline from a validated corpus to an emotion lexicon.

    Raw-text documents go through tokenize/lemmatize with candidates licensed
    by ``vocab``; pre-annotated token streams are used as-is. Both are then
    vocabulary-filtered, counted, weighted under ``scheme``, multiplied into
    the vote matrix, column-normalized and row-scaled.
    """
    if scheme not in SCHEMES:
        raise LexiconError(f"unknown weighting scheme {scheme!r}: expected one of {SCHEMES}")
    emotions = emotions if emotions is not None else EmotionSet.default()
    table = lemma_table if lemma_table is not None else textpipe.LemmaTable()
    tagger = textpipe.CandidateTagger(vocab=vocab, policy=ambiguity)

    prepared: list[DocumentRecord] = []
    raw_lengths: dict[str, int] = {}
    for record in corpus:
        if record.tokens is not None:
            candidates: Sequence[str] = record.tokens
        else:
            candidates = textpipe.lemmatize(
                textpipe.tokenize(record.text or ""), table, tagger
            )
        raw_lengths[record.doc_id] = len(candidates)
        filtered = textpipe.filter_vocabulary(candidates, vocab)
        prepared.append(
            DocumentRecord(
                doc_id=record.doc_id, votes=record.votes, tokens=tuple(filtered)
            )
        )

    kept = [record for record in prepared if record.tokens]
    empty = len(prepared) - len(kept)
    if empty:
        logger.warning(
            "%d document(s) had no tokens after vocabulary filtering and were dropped",
            empty,
        )

    counted = count_terms(kept, raw_lengths=raw_lengths, workers=workers)
    counted = filter_min_df(counted, min_df)
    weighted = apply_weighting(counted, scheme, nf_length=nf_length)
    if matrix_dump_sink is not None:
        write_matrix_dump(weighted, matrix_dump_sink)
    votes = vote_matrix(kept, emotions)

    raw_we = emotion_product(weighted, votes)
    normalized = column_normalize(raw_we, emotions.labels, mode=col_norm)
    words, scaled, dropped_rows = row_scale(normalized, weighted.words)
    if not words:
        raise LexiconError("empty lexicon: every word row had zero mass")
    if dropped_rows:
        logger.info("dropped %d all-zero lexicon row(s)", dropped_rows)

    provenance = [
        ("scheme", scheme),
        ("col-norm", col_norm),
        ("nf-length", nf_length),
        ("min-df", str(min_df)),
        ("ambiguity", ambiguity),
        ("entries", str(len(words))),
        ("dropped-zero-rows", str(dropped_rows)),
        ("dropped-empty-docs", str(empty)),
    ]
    provenance.extend((str(k), str(v)) for k, v in extra_provenance)
    return EmotionLexicon(
        emotions.labels,
        zip(words, scaled),
        provenance=provenance,
    )


def write_lexicon(lex: EmotionLexicon, sink) -> None:
    """Serialize a lexicon: ``#`` metadata lines, a header naming the
    emotions, then one tab-separated row per word in lexicographic order with
    scores at 9 significant digits."""

    def _write(fh) -> None:
        for key, value in lex.provenance:
            fh.write(f"# {key}: {value}\n")
        fh.write(HEADER_KEY + "\t" + "\t".join(lex.emotions) + "\n")
        for word, vec in lex.items():
            fh.write(word + "\t" + "\t".join(_fmt(v) for v in vec) + "\n")

    if hasattr(sink, "write"):
        _write(sink)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            _write(fh)


def read_lexicon(source) -> EmotionLexicon:
    """Parse a serialized lexicon, validating scores and per-row sums.

    Metadata lines are preserved in ``provenance`` so that reading and
    re-writing a well-formed file reproduces it byte for byte.
    """
    if hasattr(source, "read"):
        return _read_lexicon_lines(source, "<stream>")
    try:
        fh = open(source, encoding="utf-8")
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon: {exc}") from None
    with fh:
        return _read_lexicon_lines(fh, str(source))


def _read_lexicon_lines(fh, source: str) -> EmotionLexicon:
    provenance: list[tuple[str, str]] = []
    emotions: tuple[str, ...] | None = None
    rows: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(fh, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if emotions is None and line.startswith("#"):
            body = line[1:].lstrip()
            key, sep, value = body.partition(": ")
            provenance.append((key, value) if sep else (body, ""))
            continue
        fields = line.split("\t")
        if emotions is None:
            if fields[0] != HEADER_KEY or len(fields) < 2:
                raise LexiconError(
                    f"{source}:{lineno}: expected header '{HEADER_KEY}<TAB>EMOTION...'"
                )
            emotions = tuple(fields[1:])
            if len(set(emotions)) != len(emotions):
                raise LexiconError(f"{source}:{lineno}: duplicate emotion columns")
            continue
        if len(fields) != 1 + len(emotions):
            raise LexiconError(
                f"{source}:{lineno}: expected {1 + len(emotions)} columns, got {len(fields)}"
            )
        word = fields[0]
        try:
            textpipe.LemmaPos.parse(word)
        except Exception as exc:
            raise LexiconError(f"{source}:{lineno}: bad word key: {exc}") from None
        if word in rows:
            raise LexiconError(f"{source}:{lineno}: duplicate row for {word!r}")
        try:
            vec = np.asarray([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError:
            raise LexiconError(f"{source}:{lineno}: non-numeric score") from None
        if np.any(vec < 0) or not np.all(np.isfinite(vec)):
            raise LexiconError(f"{source}:{lineno}: scores must be finite and >= 0")
        total = float(vec.sum())
        if abs(total - 1.0) > READ_ROW_SUM_TOLERANCE:
            raise LexiconError(
                f"{source}:{lineno}: row sum {total:.9g} outside 1 +/- {READ_ROW_SUM_TOLERANCE:g}"
            )
        rows[word] = vec
    if emotions is None:
        raise LexiconError(f"{source}: missing lexicon header")
    if not rows:
        raise LexiconError(f"{source}: lexicon has no rows")
    return EmotionLexicon(emotions, rows, provenance=provenance)
