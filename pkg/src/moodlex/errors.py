"""Exception types shared across the toolkit."""


class MoodlexError(Exception):
    """Base class for every error the toolkit raises on bad input or state."""


class CorpusError(MoodlexError):
    """Corpus file or record violates the corpus contract."""


class VoteError(CorpusError):
    """A vote distribution is negative, empty, or outside the sum tolerance."""


class TextPipeError(MoodlexError):
    """Malformed lemma#pos token, lemma table, or tagging configuration."""


class VocabularyError(TextPipeError):
    """Vocabulary filter is empty or its file is malformed."""


class MatrixError(MoodlexError):
    """Term-document matrix construction or re-weighting failed."""


class LexiconError(MoodlexError):
    """Lexicon construction or (de)serialization failed."""


class EvaluationError(MoodlexError):
    """Evaluation inputs or metric preconditions were violated."""
