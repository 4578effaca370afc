"""Corpus parsing, vote validation, and corpus statistics."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from moodlex import (
    CorpusError,
    EmotionSet,
    VoteError,
    corpus_stats,
    parse_corpus,
    validate_votes,
    vote_matrix,
)
from moodlex.corpus import VOTE_SUM_TOLERANCE


def line(doc_id, votes, tokens=("awe#n",), text=None):
    record = {"id": doc_id, "votes": votes}
    if text is not None:
        record["text"] = text
    else:
        record["tokens"] = list(tokens)
    return json.dumps(record)


class TestEmotionSet:
    def test_default_order(self, emotions):
        assert emotions.labels == (
            "AFRAID",
            "AMUSED",
            "ANGRY",
            "ANNOYED",
            "DONT_CARE",
            "HAPPY",
            "INSPIRED",
            "SAD",
        )

    def test_case_normalized_and_unique(self):
        es = EmotionSet(["joy", "Fear"])
        assert es.labels == ("JOY", "FEAR")
        with pytest.raises(CorpusError):
            EmotionSet(["JOY", "joy"])
        with pytest.raises(CorpusError):
            EmotionSet([])
        with pytest.raises(CorpusError):
            EmotionSet(["JOY", ""])

    def test_unknown_label(self, emotions):
        with pytest.raises(CorpusError, match="unknown emotion"):
            emotions.index("DISGUST")


class TestValidateVotes:
    def test_unit_sum_unchanged(self, emotions):
        # Vote row with entries 0.40/0.20/0.20/0.20 summing to exactly one.
        raw = {"AFRAID": 0.40, "ANNOYED": 0.20, "HAPPY": 0.20, "INSPIRED": 0.20}
        out = validate_votes(raw, emotions)
        np.testing.assert_allclose(
            out, [0.40, 0, 0, 0.20, 0, 0.20, 0.20, 0], atol=1e-12
        )

    def test_uniform_distribution_unchanged(self, emotions):
        out = validate_votes([0.125] * 8, emotions)
        np.testing.assert_allclose(out, [0.125] * 8, atol=1e-15)

    def test_proportional_renormalization_at_tolerance(self, emotions):
        # 0.495 + 0.495 = 0.99, exactly at the 1e-2 boundary.
        raw = {"AFRAID": 0.495, "AMUSED": 0.495}
        out = validate_votes(raw, emotions)
        np.testing.assert_allclose(out[:2], [0.5, 0.5], atol=1e-12)
        assert abs(out.sum() - 1.0) <= 1e-9

    def test_sum_outside_tolerance_rejected(self, emotions):
        with pytest.raises(VoteError, match="corrupt"):
            validate_votes({"AFRAID": 0.49, "AMUSED": 0.49}, emotions)
        with pytest.raises(VoteError, match="corrupt"):
            validate_votes({"AFRAID": 1.02}, emotions)

    def test_negative_and_zero(self, emotions):
        with pytest.raises(VoteError, match="negative"):
            validate_votes({"AFRAID": -0.1, "HAPPY": 1.1}, emotions)
        with pytest.raises(VoteError, match="no votes"):
            validate_votes({e: 0.0 for e in emotions.labels}, emotions)

    def test_non_numeric_and_non_finite_rejected(self, emotions):
        with pytest.raises(VoteError, match="non-numeric"):
            validate_votes({"AFRAID": "lots"}, emotions)
        with pytest.raises(VoteError, match="non-numeric"):
            validate_votes({"AFRAID": None}, emotions)
        # json.loads accepts NaN literals, and NaN comparisons are all false,
        # so the tolerance check alone would let NaN through.
        with pytest.raises(VoteError, match="finite"):
            validate_votes({"AFRAID": float("nan")}, emotions)
        with pytest.raises(VoteError, match="finite"):
            validate_votes({"AFRAID": float("inf")}, emotions)

    def test_sequence_input(self, emotions):
        out = validate_votes([0.5, 0.5, 0, 0, 0, 0, 0, 0], emotions)
        np.testing.assert_allclose(out[:2], [0.5, 0.5])
        with pytest.raises(VoteError):
            validate_votes([0.5, 0.5], emotions)

    def test_post_sum_exact(self, emotions):
        rng = np.random.default_rng(7)
        for _ in range(50):
            raw = rng.random(8)
            raw = raw / raw.sum() * (1 + (rng.random() - 0.5) * 2 * VOTE_SUM_TOLERANCE)
            out = validate_votes(list(raw), emotions)
            assert abs(out.sum() - 1.0) <= 1e-9
            assert np.all(out >= 0)


class TestParseCorpus:
    def test_vote_rows_from_published_excerpt(self, emotions):
        # Two document rows of the published document-by-emotion excerpt.
        stream = [
            line("doc_10002", {"AFRAID": 0.75, "INSPIRED": 0.25}),
            line(
                "doc_10003",
                {"AMUSED": 0.50, "ANNOYED": 0.16, "DONT_CARE": 0.17, "HAPPY": 0.17},
            ),
        ]
        records = parse_corpus(stream, emotions)
        assert [r.doc_id for r in records] == ["doc_10002", "doc_10003"]
        np.testing.assert_allclose(
            records[0].votes, [0.75, 0, 0, 0, 0, 0, 0.25, 0], atol=1e-9
        )
        assert abs(records[1].votes.sum() - 1.0) <= 1e-9

    def test_empty_stream(self, emotions):
        assert parse_corpus([], emotions) == []

    def test_duplicate_id_names_both_lines(self, emotions):
        stream = [line("a", {"AFRAID": 1.0}), line("a", {"HAPPY": 1.0})]
        with pytest.raises(CorpusError, match=r"lines 1 and 2"):
            parse_corpus(stream, emotions)

    def test_unknown_emotion_is_hard_error(self, emotions):
        stream = [line("a", {"DISGUST": 1.0})]
        with pytest.raises(CorpusError, match="unknown emotion"):
            parse_corpus(stream, emotions)

    def test_malformed_lines_reported_with_numbers_and_count(self, emotions):
        stream = [
            "{not json",
            line("ok", {"AFRAID": 1.0}),
            json.dumps({"id": "b", "votes": {"AFRAID": 1.0}}),  # no tokens/text
            json.dumps({"id": "c", "tokens": ["awe#n"]}),  # no votes
        ]
        with pytest.raises(CorpusError) as err:
            parse_corpus(stream, emotions)
        message = str(err.value)
        assert "3 malformed line(s)" in message
        assert "line 1" in message and "line 3" in message and "line 4" in message

    def test_tokens_and_text_mutually_exclusive(self, emotions):
        record = {"id": "a", "tokens": ["awe#n"], "text": "x", "votes": {"AFRAID": 1.0}}
        with pytest.raises(CorpusError, match="exactly one"):
            parse_corpus([json.dumps(record)], emotions)

    def test_bad_token_format_collected(self, emotions):
        stream = [line("a", {"AFRAID": 1.0}, tokens=["awe#n", "BAD#z"])]
        with pytest.raises(CorpusError, match="bad token"):
            parse_corpus(stream, emotions)

    def test_vote_error_collected_with_line_number(self, emotions):
        stream = [line("a", {"AFRAID": 0.4})]
        with pytest.raises(CorpusError, match="line 1.*corrupt"):
            parse_corpus(stream, emotions)

    def test_text_mode_and_empty_tokens_allowed(self, emotions):
        stream = [
            line("a", {"AFRAID": 1.0}, text="Some raw text"),
            line("b", {"HAPPY": 1.0}, tokens=[]),
        ]
        records = parse_corpus(stream, emotions)
        assert records[0].text == "Some raw text" and records[0].tokens is None
        assert records[1].tokens == ()

    def test_min_votes_sum_drops_before_validation(self, emotions):
        stream = [
            line("a", {"AFRAID": 0.4}),  # sum 0.4: dropped, not an error
            line("b", {"HAPPY": 1.0}),
        ]
        records = parse_corpus(stream, emotions, min_votes_sum=0.9)
        assert [r.doc_id for r in records] == ["b"]

    def test_order_preserving_and_deterministic(self, emotions):
        stream = [line(f"d{i}", {"AFRAID": 0.5, "SAD": 0.5}) for i in range(10)]
        first = parse_corpus(list(stream), emotions)
        second = parse_corpus(list(stream), emotions)
        assert [r.doc_id for r in first] == [f"d{i}" for i in range(10)]
        assert [r.doc_id for r in first] == [r.doc_id for r in second]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.votes, b.votes)


class TestCorpusStats:
    def test_two_one_hot_docs(self, emotions):
        stream = [
            line("a", {"AFRAID": 1.0}, tokens=["awe#n", "war#n"]),
            line("b", {"HAPPY": 1.0}, tokens=["game#n"]),
        ]
        stats = corpus_stats(parse_corpus(stream, emotions))
        expected = np.zeros(8)
        expected[0] = 0.5
        expected[5] = 0.5
        np.testing.assert_allclose(stats.mean_votes, expected, atol=1e-12)
        assert stats.doc_count == 2
        assert stats.token_count == 3
        assert stats.mean_doc_length == pytest.approx(1.5)

    def test_single_doc_identity(self, emotions):
        records = parse_corpus([line("a", {"AFRAID": 0.75, "INSPIRED": 0.25})], emotions)
        stats = corpus_stats(records)
        np.testing.assert_allclose(stats.mean_votes, records[0].votes, atol=1e-12)

    def test_ten_random_docs_match_resummation_oracle(self, emotions):
        rng = np.random.default_rng(11)
        stream = []
        votes_by_doc = []
        for i in range(10):
            votes = rng.random(8) + 0.01
            votes = votes / votes.sum()
            votes_by_doc.append(votes)
            stream.append(line(f"d{i}", dict(zip(emotions.labels, votes))))
        records = parse_corpus(stream, emotions)
        stats = corpus_stats(records)
        # Spreadsheet-style recount: per-emotion column sums via fsum.
        for e in range(8):
            expected = math.fsum(r.votes[e] for r in records) / 10
            assert abs(stats.mean_votes[e] - expected) < 1e-12

    def test_mean_votes_sum_to_one(self, emotions):
        rng = np.random.default_rng(3)
        stream = [
            line(f"d{i}", dict(zip(emotions.labels, rng.dirichlet(np.ones(8)))))
            for i in range(25)
        ]
        stats = corpus_stats(parse_corpus(stream, emotions))
        assert abs(stats.mean_votes.sum() - 1.0) <= 1e-9

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusError):
            corpus_stats([])

    def test_text_mode_token_count(self, emotions):
        records = parse_corpus(
            [line("a", {"AFRAID": 1.0}, text="Two words here, 42")], emotions
        )
        assert corpus_stats(records).token_count == 3


class TestVoteMatrix:
    def test_rows_follow_corpus_order(self, emotions, small_corpus):
        de = vote_matrix(small_corpus, emotions)
        assert de.doc_ids == tuple(r.doc_id for r in small_corpus)
        for i, record in enumerate(small_corpus):
            np.testing.assert_array_equal(de.values[i], record.votes)

    def test_empty_rejected(self, emotions):
        with pytest.raises(CorpusError):
            vote_matrix([], emotions)
