import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cccp.ingest import (
    Corpus,
    EmptyCorpus,
    InvalidConfig,
    MalformedRecord,
    SynthConfig,
    cap_per_platform,
    generate_synthetic,
    load_corpus,
    merge,
    reddit_like,
    twitter_like,
    write_corpus,
)
from cccp.pb import repetition_probability
from cccp.tree import validate_tree


def test_two_valid(fixtures_dir):
    corpus = load_corpus(fixtures_dir / "two_valid.tsv")
    assert len(corpus) == 2
    assert corpus.skipped == []
    assert corpus.counts() == {"reddit": (1, 3), "twitter": (1, 4)}


def test_header_optional(fixtures_dir):
    a = load_corpus(fixtures_dir / "two_valid.tsv")
    b = load_corpus(fixtures_dir / "two_valid_no_header.tsv")
    assert a.trees == b.trees


def test_missing_parent_skipped(fixtures_dir):
    corpus = load_corpus(fixtures_dir / "missing_parent.tsv")
    assert len(corpus) == 1
    assert [(s.conversation_id, s.error) for s in corpus.skipped] == [("m", "MissingParent")]


def test_oversized_skipped(fixtures_dir):
    corpus = load_corpus(fixtures_dir / "oversized.tsv")
    assert [t.conversation_id for t in corpus] == ["a"]
    assert [(s.conversation_id, s.error) for s in corpus.skipped] == [("big", "TooLarge")]


def test_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nope.tsv")


def test_malformed_record_reports_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("id\tparent_id\tauthor\ttimestamp\tconversation_id\tplatform\nr\t\tA\t0\tc\treddit\nx\tr\tB\tsoon\tc\treddit\n")
    with pytest.raises(MalformedRecord) as exc:
        load_corpus(path)
    assert exc.value.line_no == 3


def test_unknown_platform_is_malformed(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("r\t\tA\t0\tc\tmastodon\n")
    with pytest.raises(MalformedRecord):
        load_corpus(path)


def test_all_invalid_is_empty_corpus(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("r\t\tA\t0\tc\treddit\n")
    with pytest.raises(EmptyCorpus):
        load_corpus(path)


def test_round_trip(tmp_path):
    corpus = generate_synthetic(SynthConfig(n_conversations=15, seed=5))
    write_corpus(corpus, tmp_path / "c.tsv")
    again = load_corpus(tmp_path / "c.tsv")
    assert again.trees == corpus.trees
    assert again.to_tsv() == corpus.to_tsv()


class TestSynthetic:
    def test_no_revisits_means_distinct_authors(self):
        corpus = generate_synthetic(SynthConfig(n_conversations=30, revisit_rate=0.0, seed=1))
        for tree in corpus:
            assert len(tree.authors) == len(tree)
            assert repetition_probability(tree) == 0.0

    def test_same_seed_identical(self):
        cfg = SynthConfig(n_conversations=20, seed=42)
        assert generate_synthetic(cfg).to_tsv() == generate_synthetic(cfg).to_tsv()

    def test_different_seed_differs(self):
        a = generate_synthetic(SynthConfig(n_conversations=20, seed=1))
        b = generate_synthetic(SynthConfig(n_conversations=20, seed=2))
        assert a.to_tsv() != b.to_tsv()

    def test_revisit_rate_raises_repetition(self):
        def mean_rep(rate):
            corpus = generate_synthetic(SynthConfig(n_conversations=200, revisit_rate=rate, seed=9))
            reps = [repetition_probability(t) for t in corpus]
            return sum(reps) / len(reps)

        high, low = mean_rep(0.7), mean_rep(0.2)
        assert high > low
        # a post repeats an author exactly when the revisit branch fires, so the
        # means sit near the configured rates
        assert abs(high - 0.7) < 0.05 and abs(low - 0.2) < 0.05

    def test_root_bias_one_gives_stars(self):
        corpus = generate_synthetic(SynthConfig(n_conversations=10, root_attachment_bias=1.0, seed=3))
        for tree in corpus:
            assert max(tree.depth.values()) == 2

    @pytest.mark.parametrize("kw", [
        {"revisit_rate": 1.5},
        {"root_attachment_bias": -0.1},
        {"size_range": (1, 10)},
        {"size_range": (10, 101)},
        {"size_range": (20, 10)},
        {"n_conversations": 0},
    ])
    def test_invalid_config(self, kw):
        with pytest.raises(InvalidConfig):
            generate_synthetic(SynthConfig(**kw))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**63 - 1), st.floats(0, 1), st.floats(0, 1), st.integers(2, 100))
    def test_every_tree_valid(self, seed, bias, revisit, hi):
        corpus = generate_synthetic(SynthConfig(5, (2, hi), bias, revisit, seed))
        for tree in corpus:
            assert validate_tree(tree.posts) == tree
            assert 2 <= len(tree) <= hi
            stamps = [p.timestamp for p in tree.posts]
            assert stamps == sorted(set(stamps))


def test_merge_and_cap():
    corpus = merge(generate_synthetic(reddit_like(10, 1)), generate_synthetic(twitter_like(7, 2)))
    assert corpus.counts()["reddit"][0] == 10
    capped = cap_per_platform(corpus, 5, seed=0)
    assert {p: c for p, (c, _) in capped.counts().items()} == {"reddit": 5, "twitter": 5}
    assert cap_per_platform(corpus, 5, seed=0).to_tsv() == capped.to_tsv()


def test_duplicate_conversation_ids_rejected():
    corpus = generate_synthetic(SynthConfig(n_conversations=2, seed=1))
    with pytest.raises(ValueError):
        Corpus(corpus.trees + corpus.trees[:1])
