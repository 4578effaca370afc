"""Text preprocessing: tokenization, table-driven lemmatization, vocabulary filtering.

Raw text is reduced to lower-cased runs of letters, every surface token is
expanded into lemma#pos candidates through an exception table plus per-pos
suffix rules, and candidate streams are filtered against a reference
vocabulary (for example, a WordNet lemma inventory). All tables are
immutable after load, so distinct documents can be processed concurrently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import TextPipeError, VocabularyError

#: Coarse part-of-speech tags, in the order candidates are scanned per surface
#: form. Verbs come first so that e.g. "kill" yields kill#v before kill#n.
POS_TAGS = ("v", "n", "a", "r")

AMBIGUITY_POLICIES = ("all", "first")

# Maximal runs of Unicode letters; digits, underscores and punctuation are
# token boundaries, so "22" or the digit tail of "abc123" never survive.
_TOKEN_RE = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class LemmaPos:
    """A dictionary headword paired with its coarse part of speech.

    The canonical string form is ``lemma#pos``; :meth:`parse` and
    :meth:`text` are exact inverses.
    """

    lemma: str
    pos: str

    def __post_init__(self) -> None:
        if self.pos not in POS_TAGS:
            raise TextPipeError(
                f"invalid pos tag {self.pos!r}: expected one of {', '.join(POS_TAGS)}"
            )
        if not self.lemma:
            raise TextPipeError("lemma must be non-empty")
        if self.lemma != self.lemma.lower() or any(c.isspace() for c in self.lemma):
            raise TextPipeError(
                f"lemma must be lower-case with no whitespace: {self.lemma!r}"
            )

    @classmethod
    def parse(cls, token: str) -> "LemmaPos":
        lemma, sep, pos = token.rpartition("#")
        if not sep:
            raise TextPipeError(f"not a lemma#pos token: {token!r}")
        return cls(lemma, pos)

    def text(self) -> str:
        return f"{self.lemma}#{self.pos}"


class VocabularyFilter:
    """Exact-membership whitelist of lemma#pos entries.

    An empty filter is rejected at construction: it would silently drop the
    whole corpus, which is a configuration error rather than a usable mode.
    """

    def __init__(self, entries: Iterable[str | LemmaPos]):
        canon = set()
        for entry in entries:
            lp = entry if isinstance(entry, LemmaPos) else LemmaPos.parse(str(entry))
            canon.add(lp.text())
        if not canon:
            raise VocabularyError("vocabulary filter has no entries")
        self._entries = frozenset(canon)

    def __contains__(self, token: object) -> bool:
        if isinstance(token, LemmaPos):
            return token.text() in self._entries
        return token in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    @classmethod
    def from_file(cls, path) -> "VocabularyFilter":
        """Load one lemma#pos per line; ``#`` at column 1 starts a comment."""
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if raw.startswith("#"):
                    continue
                line = raw.strip()
                if not line:
                    continue
                try:
                    entries.append(LemmaPos.parse(line))
                except TextPipeError as exc:
                    raise VocabularyError(f"{path}:{lineno}: {exc}") from exc
        if not entries:
            raise VocabularyError(f"{path}: vocabulary file contains no entries")
        return cls(entries)


class LemmaTable:
    """Exception table mapping (surface, pos) to a lemma, plus suffix rules.

    Table lookups always take priority over rules. Rules are tried in file
    order and never yield an empty lemma (a rewrite that would empty the
    surface form is skipped).
    """

    def __init__(
        self,
        entries: Iterable[tuple[str, str, str]] = (),
        rules: Iterable[tuple[str, str, str]] = (),
    ):
        self._entries: dict[tuple[str, str], str] = {}
        for surface, pos, lemma in entries:
            self._check_pos(pos)
            key = (surface, pos)
            if key in self._entries and self._entries[key] != lemma:
                raise TextPipeError(
                    f"conflicting lemma table entries for {surface!r}#{pos}"
                )
            self._entries[key] = lemma
        self._rules: dict[str, list[tuple[str, str]]] = {p: [] for p in POS_TAGS}
        for pos, suffix, replacement in rules:
            self._check_pos(pos)
            if not suffix:
                raise TextPipeError("suffix rule with empty suffix")
            self._rules[pos].append((suffix, replacement))

    @staticmethod
    def _check_pos(pos: str) -> None:
        if pos not in POS_TAGS:
            raise TextPipeError(f"invalid pos tag {pos!r} in lemma table")

    def __len__(self) -> int:
        return len(self._entries) + sum(len(r) for r in self._rules.values())

    def entry(self, surface: str, pos: str) -> str | None:
        return self._entries.get((surface, pos))

    def rule_rewrites(self, surface: str, pos: str) -> Iterator[str]:
        """Yield rule-rewritten lemmas for ``surface`` in rule-file order."""
        for suffix, replacement in self._rules.get(pos, ()):
            if surface.endswith(suffix):
                rewritten = surface[: len(surface) - len(suffix)] + replacement
                if rewritten:
                    yield rewritten

    @classmethod
    def from_file(cls, path) -> "LemmaTable":
        """Load ``surface<TAB>pos<TAB>lemma`` lines, then an optional
        ``[rules]`` section of ``pos<TAB>suffix<TAB>replacement`` lines."""
        entries: list[tuple[str, str, str]] = []
        rules: list[tuple[str, str, str]] = []
        in_rules = False
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\r\n")
                if not line.strip():
                    continue
                if line.strip() == "[rules]":
                    in_rules = True
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise TextPipeError(
                        f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
                    )
                if in_rules:
                    rules.append((fields[0], fields[1], fields[2]))
                else:
                    entries.append((fields[0], fields[1], fields[2]))
        try:
            return cls(entries, rules)
        except TextPipeError as exc:
            raise TextPipeError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class CandidateTagger:
    """Pos-assignment strategy: vocabulary-licensed candidates per surface form.

    Under the default ``all`` policy every licensed (lemma, pos) pair is
    emitted once per occurrence; ``first`` keeps only the first candidate in
    the fixed POS_TAGS scan order. Without a vocabulary only exception-table
    hits can be licensed.
    """

    vocab: VocabularyFilter | None = None
    policy: str = "all"

    def __post_init__(self) -> None:
        if self.policy not in AMBIGUITY_POLICIES:
            raise TextPipeError(
                f"unknown ambiguity policy {self.policy!r}: expected one of {AMBIGUITY_POLICIES}"
            )


def tokenize(text: str) -> list[str]:
    """Split text into lower-cased maximal runs of Unicode letters."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def _candidates(surface: str, table: LemmaTable, tagger: CandidateTagger) -> list[str]:
    licensed: list[str] = []
    vocab = tagger.vocab
    for pos in POS_TAGS:
        hit = table.entry(surface, pos)
        if hit is not None:
            licensed.append(f"{hit}#{pos}")
            continue
        if vocab is None:
            continue
        identity = f"{surface}#{pos}"
        if identity in vocab:
            licensed.append(identity)
            continue
        for rewritten in table.rule_rewrites(surface, pos):
            candidate = f"{rewritten}#{pos}"
            if candidate in vocab:
                licensed.append(candidate)
                break
    if not licensed:
        # Unmapped surface forms pass through as nouns; downstream
        # vocabulary filtering decides whether they survive.
        return [f"{surface}#n"]
    if tagger.policy == "first":
        return licensed[:1]
    return licensed


def lemmatize(
    tokens: Iterable[str],
    table: LemmaTable,
    tagger: CandidateTagger = CandidateTagger(),
) -> list[str]:
    """Map surface tokens to lemma#pos candidate tokens.

    Each occurrence of a surface form yields every candidate licensed by the
    exception table or the tagger's vocabulary (identity form first, then
    suffix-rule rewrites), scanned in POS_TAGS order.
    """
    out: list[str] = []
    for surface in tokens:
        out.extend(_candidates(surface, table, tagger))
    return out


def filter_vocabulary(tokens: Iterable[str], vocab: VocabularyFilter) -> list[str]:
    """Keep exactly the tokens present in ``vocab``, preserving order and
    duplicates."""
    return [t for t in tokens if t in vocab]
