"""Command-line entry point wiring the modules into batch workflows.

Subcommands: ``build``, ``eval``, ``score``, ``stats``. Logs go to standard
error; data goes to files or standard output. Every output file starts with
metadata lines sufficient to re-run the exact command (a config echo plus
input content hashes). Nothing here samples randomness, so identical inputs
always produce byte-identical outputs; the worker count never changes a
result and is therefore left out of the config echo.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from contextlib import nullcontext

from . import __version__
from .corpus import EmotionSet, corpus_stats, load_corpus
from .errors import MoodlexError
from .evaluate import (
    EmotionMapping,
    batch_score,
    evaluate_all,
    load_gold,
    load_labels,
)
from .lexicon import build_lexicon, read_lexicon, write_lexicon
from .textpipe import CandidateTagger, LemmaTable, VocabularyFilter, lemmatize, tokenize

logger = logging.getLogger(__name__)

PROG = "moodlex"

#: CLI weighting flags to internal scheme names.
WEIGHTINGS = {"f": "raw", "nf": "normalized", "tfidf": "tfidf"}


class _StageError(Exception):
    """An error already attributed to a pipeline stage."""


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (MoodlexError, OSError) as exc:
        raise _StageError(f"{name}: {exc}") from exc


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


# Flag order used when echoing the resolved command into output metadata.
# --workers is deliberately absent: it never affects results, and outputs
# must be byte-identical across worker counts.
_ECHO_FLAGS = {
    "build": (
        "corpus",
        "vocab",
        "lemma_table",
        "output",
        "weighting",
        "emotions",
        "col_norm",
        "min_df",
        "min_votes_sum",
        "nf_length",
        "ambiguity",
        "dump_matrix",
    ),
    "eval": (
        "lexicon",
        "gold",
        "labels",
        "mapping",
        "lemma_table",
        "ambiguity",
        "uncovered",
        "minmax",
        "threshold",
        "output",
    ),
    "score": ("lexicon", "input", "lemma_table", "ambiguity", "output"),
    "stats": ("corpus", "emotions", "min_votes_sum", "output"),
}


def _config_echo(subcommand: str, args: argparse.Namespace) -> str:
    parts = [PROG, subcommand]
    for attr in _ECHO_FLAGS[subcommand]:
        value = getattr(args, attr)
        if value is None:
            continue
        flag = "--" + attr.replace("_", "-")
        if isinstance(value, float):
            parts.extend([flag, format(value, "g")])
        else:
            parts.extend([flag, str(value)])
    return " ".join(parts)


def _metadata(subcommand: str, args: argparse.Namespace, inputs: list[tuple[str, str]]):
    lines = [("command", _config_echo(subcommand, args))]
    for name, path in inputs:
        lines.append((f"input-{name}-sha256", _stage(f"hash-{name}", _sha256, path)))
    return lines


def _open_output(path):
    if path is None:
        return nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="\n")


def _write_metadata(fh, metadata) -> None:
    for key, value in metadata:
        fh.write(f"# {key}: {value}\n")
    fh.write(f"# tool-version: {PROG} {__version__}\n")


def _emotion_set(labels_csv: str | None) -> EmotionSet:
    if labels_csv is None:
        return EmotionSet.default()
    return EmotionSet(label for label in labels_csv.split(",") if label.strip())


def cmd_build(args: argparse.Namespace) -> int:
    emotions = _stage("configure", _emotion_set, args.emotions)
    records = _stage(
        "load-corpus", load_corpus, args.corpus, emotions, min_votes_sum=args.min_votes_sum
    )
    vocab = _stage("load-vocabulary", VocabularyFilter.from_file, args.vocab)
    table = None
    if args.lemma_table:
        table = _stage("load-lemma-table", LemmaTable.from_file, args.lemma_table)
    inputs = [("corpus", args.corpus), ("vocab", args.vocab)]
    if args.lemma_table:
        inputs.append(("lemma-table", args.lemma_table))
    metadata = _metadata("build", args, inputs)

    dump_fh = None
    if args.dump_matrix:
        dump_fh = _stage(
            "dump-matrix", open, args.dump_matrix, "w", encoding="utf-8", newline="\n"
        )
        _write_metadata(dump_fh, metadata)
    try:
        lex = _stage(
            "build-lexicon",
            build_lexicon,
            records,
            vocab,
            WEIGHTINGS[args.weighting],
            emotions=emotions,
            lemma_table=table,
            ambiguity=args.ambiguity,
            col_norm=args.col_norm,
            nf_length=args.nf_length,
            min_df=args.min_df,
            workers=args.workers,
            matrix_dump_sink=dump_fh,
        )
    finally:
        if dump_fh is not None:
            dump_fh.close()
    lex.provenance = metadata + lex.provenance + [("tool-version", f"{PROG} {__version__}")]
    _stage("write-lexicon", write_lexicon, lex, args.output)
    by_key = dict(lex.provenance)
    logger.info(
        "wrote %s: %s entries, scheme %s, %s zero row(s) dropped",
        args.output,
        by_key.get("entries"),
        by_key.get("scheme"),
        by_key.get("dropped-zero-rows"),
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    lex = _stage("read-lexicon", read_lexicon, args.lexicon)
    table = None
    if args.lemma_table:
        table = _stage("load-lemma-table", LemmaTable.from_file, args.lemma_table)
    gold = _stage(
        "load-gold", load_gold, args.gold, lex, lemma_table=table, ambiguity=args.ambiguity
    )
    if args.labels:
        gold = _stage("load-labels", load_labels, args.labels, gold)
    if args.mapping:
        mapping = _stage("load-mapping", EmotionMapping.from_file, args.mapping)
    else:
        mapping = EmotionMapping.identity(gold.emotions)
    report = _stage(
        "evaluate",
        evaluate_all,
        gold,
        lex,
        mapping,
        threshold=args.threshold,
        uncovered=args.uncovered,
        minmax=args.minmax,
        with_classification=bool(args.labels),
        workers=args.workers,
    )

    inputs = [("lexicon", args.lexicon), ("gold", args.gold)]
    if args.labels:
        inputs.append(("labels", args.labels))
    if args.mapping:
        inputs.append(("mapping", args.mapping))
    metadata = _metadata("eval", args, inputs)

    with _stage("write-report", _open_output, args.output) as fh:
        _write_metadata(fh, metadata)
        fh.write("section\temotion\tmetric\tvalue\n")
        for target, r in report.regression.items():
            fh.write(f"regression\t{target}\tpearson_r\t{_fmt(r)}\n")
        if report.classification is not None:
            for target, m in report.classification.items():
                fh.write(f"classification\t{target}\tprecision\t{_fmt(m.precision)}\n")
                fh.write(f"classification\t{target}\trecall\t{_fmt(m.recall)}\n")
                fh.write(f"classification\t{target}\tf1\t{_fmt(m.f1)}\n")
        cov = report.coverage
        fh.write(f"coverage\tALL\tmean_headline_coverage\t{_fmt(cov.mean_coverage)}\n")
        fh.write(f"coverage\tALL\tuncovered_headlines\t{cov.uncovered_headlines}\n")
        fh.write(
            f"coverage\tALL\tskipped_empty_headlines\t{cov.skipped_empty_headlines}\n"
        )
        for target in report.discarded_targets:
            fh.write(f"discarded\t{target}\tdiscarded_target\tno mapping\n")

    for target, r in report.regression.items():
        logger.info("regression %s: pearson_r %.4f", target, r)
    if report.classification is not None:
        for target, m in report.classification.items():
            logger.info(
                "classification %s: P %.4f R %.4f F1 %.4f",
                target,
                m.precision,
                m.recall,
                m.f1,
            )
    logger.info(
        "coverage: mean %.4f, uncovered %d, empty %d; discarded: %s",
        report.coverage.mean_coverage,
        report.coverage.uncovered_headlines,
        report.coverage.skipped_empty_headlines,
        ", ".join(report.discarded_targets) or "none",
    )
    return 0


def _read_score_input(path) -> list[tuple[str, str]]:
    lines: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise MoodlexError(
                    f"{path}:{lineno}: expected 'id<TAB>text', got {len(fields)} fields"
                )
            lines.append((fields[0], fields[1]))
    return lines


def cmd_score(args: argparse.Namespace) -> int:
    lex = _stage("read-lexicon", read_lexicon, args.lexicon)
    table = LemmaTable()
    if args.lemma_table:
        table = _stage("load-lemma-table", LemmaTable.from_file, args.lemma_table)
    entries = _stage("read-input", _read_score_input, args.input)
    tagger = CandidateTagger(vocab=VocabularyFilter(lex.words), policy=args.ambiguity)
    token_streams = [lemmatize(tokenize(text), table, tagger) for _, text in entries]
    scored = batch_score(token_streams, lex, args.workers)

    inputs = [("lexicon", args.lexicon), ("input", args.input)]
    metadata = _metadata("score", args, inputs)
    with _stage("write-scores", _open_output, args.output) as fh:
        _write_metadata(fh, metadata)
        fh.write("id\t" + "\t".join(lex.emotions) + "\tcovered\ttotal\n")
        for (line_id, _), tokens, (vec, covered) in zip(entries, token_streams, scored):
            scores = "\t".join(_fmt(v) for v in vec)
            fh.write(f"{line_id}\t{scores}\t{covered}\t{len(tokens)}\n")
    logger.info("scored %d line(s)", len(entries))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    emotions = _stage("configure", _emotion_set, args.emotions)
    records = _stage(
        "load-corpus", load_corpus, args.corpus, emotions, min_votes_sum=args.min_votes_sum
    )
    stats = _stage("corpus-stats", corpus_stats, records)
    metadata = _metadata("stats", args, [("corpus", args.corpus)])
    with _stage("write-stats", _open_output, args.output) as fh:
        _write_metadata(fh, metadata)
        fh.write(f"doc_count\t{stats.doc_count}\n")
        fh.write(f"token_count\t{stats.token_count}\n")
        fh.write(f"mean_doc_length\t{_fmt(stats.mean_doc_length)}\n")
        fh.write("emotion\tmean_votes\n")
        for label, mean in zip(emotions.labels, stats.mean_votes):
            fh.write(f"{label}\t{_fmt(mean)}\n")
    logger.info(
        "%d document(s), %d token(s), mean length %.1f",
        stats.doc_count,
        stats.token_count,
        stats.mean_doc_length,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Build word-by-emotion lexicons from vote-annotated corpora "
        "and evaluate them on headline emotion recognition.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--workers", type=int, default=1, help="worker count (never changes results)")

    build = sub.add_parser("build", help="build an emotion lexicon from a corpus")
    build.add_argument("--corpus", required=True, help="corpus file, one JSON record per line")
    build.add_argument("--vocab", required=True, help="vocabulary file, one lemma#pos per line")
    build.add_argument("--lemma-table", help="lemma table file (surface/pos/lemma + [rules])")
    build.add_argument("--output", required=True, help="lexicon output path")
    build.add_argument("--weighting", choices=sorted(WEIGHTINGS), default="nf")
    build.add_argument("--emotions", help="comma-separated emotion labels (default: the 8 builtin)")
    build.add_argument("--col-norm", choices=("sum", "max"), default="sum")
    build.add_argument("--min-df", type=int, default=1)
    build.add_argument("--min-votes-sum", type=float, default=None)
    build.add_argument("--nf-length", choices=("filtered", "raw"), default="filtered")
    build.add_argument("--ambiguity", choices=("all", "first"), default="all")
    build.add_argument("--dump-matrix", help="also dump the weighted term-document matrix")
    add_common(build)
    build.set_defaults(func=cmd_build)

    evalp = sub.add_parser("eval", help="evaluate a lexicon on gold headlines")
    evalp.add_argument("--lexicon", required=True)
    evalp.add_argument("--gold", required=True, help="gold file: id<TAB>text<TAB>emotions...")
    evalp.add_argument("--labels", help="optional gold label file: id<TAB>LABEL[,LABEL...]")
    evalp.add_argument("--mapping", help="target<TAB>source emotion mapping file")
    evalp.add_argument("--lemma-table")
    evalp.add_argument("--ambiguity", choices=("all", "first"), default="all")
    evalp.add_argument("--uncovered", choices=("zero", "skip"), default="zero")
    evalp.add_argument("--minmax", choices=("per-emotion", "joint"), default="per-emotion")
    evalp.add_argument("--threshold", type=float, default=0.5)
    evalp.add_argument("--output", help="report output path (default: stdout)")
    add_common(evalp)
    evalp.set_defaults(func=cmd_eval)

    score = sub.add_parser("score", help="score headlines with a lexicon")
    score.add_argument("--lexicon", required=True)
    score.add_argument("--input", required=True, help="input file: id<TAB>text per line")
    score.add_argument("--lemma-table")
    score.add_argument("--ambiguity", choices=("all", "first"), default="all")
    score.add_argument("--output", help="output path (default: stdout)")
    add_common(score)
    score.set_defaults(func=cmd_score)

    stats = sub.add_parser("stats", help="summarize a corpus")
    stats.add_argument("--corpus", required=True)
    stats.add_argument("--emotions")
    stats.add_argument("--min-votes-sum", type=float, default=None)
    stats.add_argument("--output", help="output path (default: stdout)")
    add_common(stats)
    stats.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except _StageError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
