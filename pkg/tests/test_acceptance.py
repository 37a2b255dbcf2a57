"""Acceptance criteria. Each test prints one PASS/FAIL line with its measured value and tolerance."""

import math
import random
import time

import numpy as np
import pytest

from cccp import cli, nn, pb, rb, report
from cccp.baseline import baseline_scores
from cccp.centrality import centrality_scores
from cccp.ingest import Corpus, SynthConfig, generate_synthetic, load_corpus, reddit_like, twitter_like
from cccp.pb import PBConfig
from cccp.rb import RBConfig
from cccp.scores import ScoreTable
from cccp.tree import validate_tree
from oracles import baseline_oracle, centrality_oracle, random_posts


@pytest.fixture
def verdict(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
        return ok

    return emit


def random_trees(seed, count=200, max_nodes=15):
    rng = random.Random(seed)
    return [random_posts(rng, rng.randint(2, max_nodes), rng.randint(1, 5), f"c{i:03d}") for i in range(count)]


def test_1_baseline_oracle(verdict):
    raw = random_trees(1)
    start = time.perf_counter()
    table = baseline_scores(Corpus([validate_tree(p) for p in raw])).as_dict()
    worst = 0.0
    for posts in raw:
        for author, expected in baseline_oracle(posts).items():
            worst = max(worst, abs(table[("synthetic", posts[0].conversation_id, author)] - expected))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    verdict(1, "baseline oracle", ok, f"max |diff| {worst:.2e} (tol 1e-9), {elapsed:.2f}s (limit 10s)")
    assert ok


def test_2_centrality_oracle(verdict):
    raw = random_trees(2)
    start = time.perf_counter()
    table = centrality_scores(Corpus([validate_tree(p) for p in raw])).as_dict()
    mismatches = sum(
        table[("synthetic", posts[0].conversation_id, a)] != v
        for posts in raw
        for a, v in centrality_oracle(posts).items()
    )
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 5
    verdict(2, "centrality oracle", ok, f"{mismatches} mismatching rows (exact), {elapsed:.2f}s (limit 5s)")
    assert ok


def test_3_gradient_check(verdict):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n_layers = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 33)) for _ in range(n_layers)]
        head = str(rng.choice(["sigmoid", "softmax"]))
        n_out = 1 if head == "sigmoid" else int(rng.integers(2, 33))
        hidden = [str(rng.choice(["relu", "sigmoid", "identity"])) for _ in range(n_layers - 1)]
        params = nn.init_params([*sizes, n_out], [*hidden, head], seed=int(rng.integers(2**31)))
        x = rng.normal(size=sizes[0])
        if head == "sigmoid":
            y, loss = [float(rng.integers(0, 2))], "bce"
        else:
            y, loss = np.eye(n_out)[rng.integers(n_out)], "cce"
        worst = max(worst, nn.gradient_check(params, x, y, loss))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 30
    verdict(3, "gradient check", ok, f"max relative error {worst:.2e} (tol 1e-4), {elapsed:.2f}s (limit 30s)")
    assert ok


def test_4_rb_precision(verdict):
    corpus = generate_synthetic(SynthConfig(n_conversations=100, seed=4))
    start = time.perf_counter()
    model = rb.train_rb(corpus, RBConfig())
    elapsed = time.perf_counter() - start
    ok = model.precision >= 0.95 and elapsed < 120
    verdict(4, "RB precision", ok, f"precision {model.precision:.4f} (min 0.95) at threshold 0.5, {elapsed:.1f}s (limit 120s)")
    assert ok


def test_5_pb_new_fraction(verdict):
    corpus = generate_synthetic(SynthConfig(n_conversations=200, revisit_rate=0.1, seed=5))
    start = time.perf_counter()
    model = pb.train_pb(corpus, PBConfig())
    elapsed = time.perf_counter() - start
    ok = model.new_fraction >= 0.8 and elapsed < 300
    verdict(5, "PB NEW fraction", ok, f"NEW predicted for {model.new_fraction:.4f} of contexts (min 0.8), {elapsed:.1f}s (limit 300s)")
    assert ok


def test_6_platform_ordering(verdict):
    start = time.perf_counter()
    reddit = generate_synthetic(reddit_like(300, seed=61))
    twitter = generate_synthetic(twitter_like(300, seed=62))
    corpus = Corpus(reddit.trees + twitter.trees)
    rb_model = rb.train_rb(corpus, RBConfig())
    pb_model = pb.train_pb(corpus, PBConfig())
    tables = [
        baseline_scores(corpus),
        rb.rb_scores(corpus, rb_model),
        pb.pb_scores(corpus, pb_model),
        centrality_scores(corpus),
    ]
    means = report.aggregate(tables)
    elapsed = time.perf_counter() - start
    ordered = {t.metric: means[(t.metric, "reddit")] > means[(t.metric, "twitter")] for t in tables}
    ok = all(ordered.values()) and elapsed < 600
    detail = ", ".join(
        f"{t.metric} {means[(t.metric, 'reddit')]:.4f} vs {means[(t.metric, 'twitter')]:.4f}" for t in tables
    )
    verdict(6, "Reddit-like > Twitter-like", ok, f"{detail}; {elapsed:.1f}s (limit 600s)")
    assert ok


def test_7_statistics(verdict):
    x = [0.5, 1.0, 2.0, 7.0]
    cases = [
        (report.pearson(x, [2 * v + 1 for v in x]), 1.0),
        (report.pearson(x, [-v for v in x]), -1.0),
        (report.pearson([1, 2, 3, 4], [2, 1, 4, 3]), 0.6),
    ]
    worst = max(abs(got - want) for got, want in cases)
    rng = random.Random(7)
    tables = {}
    for m in report.METRICS:
        t = ScoreTable(m)
        for c in range(12):
            for a in range(rng.randint(1, 4)):
                t.add("reddit" if c % 2 else "twitter", f"c{c}", f"a{a}", rng.random())
        tables[m] = t
    _, r, _ = report.correlation_matrix(tables)
    k = len(r)
    shape_ok = all(r[i][i] == 1.0 for i in range(k)) and all(
        r[i][j] == r[j][i] and -1.0 <= r[i][j] <= 1.0 for i in range(k) for j in range(k)
    )
    ok = worst <= 1e-12 and shape_ok
    verdict(7, "statistics", ok, f"max pearson error {worst:.1e} (tol 1e-12), matrix symmetric/unit diagonal: {shape_ok}")
    assert ok


def _snapshot(out):
    names = ["scores_baseline.tsv", "scores_rb.tsv", "scores_pb.tsv", "scores_pb_raw.tsv", "scores_centrality.tsv",
             "means.tsv", "correlations.tsv", "diagnostics.tsv", "report.txt"]
    return {n: (out / n).read_bytes() for n in names}


def test_8_determinism(tmp_path, verdict):
    argv = ["run", "--synthetic", "--seed", "7", "--metrics", "all"]
    codes = [cli.main(argv + ["--out", str(tmp_path / d)]) for d in ("a", "b")]
    a, b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "b")
    differing = sorted(n for n in a if a[n] != b[n])
    ok = codes == [0, 0] and not differing
    verdict(8, "determinism", ok, f"exit codes {codes}, differing files: {differing or 'none'}")
    assert ok


def test_9_ingestion_robustness(fixtures_dir, verdict):
    corpus = load_corpus(fixtures_dir / "robustness.tsv")
    got = sorted(s.error for s in corpus.skipped)
    want = ["MissingParent", "TimestampOrderViolation", "TooLarge"]
    ok = got == want
    verdict(9, "ingestion robustness", ok, f"{len(got)} skips {got} (want exactly {want})")
    assert ok


def test_10_end_to_end(tmp_path, fixtures_dir, verdict):
    out = tmp_path / "out"
    code = cli.main(["run", "--input", str(fixtures_dir / "two_platforms.tsv"), "--metrics", "all", "--out", str(out)])
    means = [line.split("\t")[:2] for line in (out / "means.tsv").read_text().splitlines()[1:]]
    metrics_ok = sorted(means) == sorted(
        [m, p] for m in report.METRICS for p in ("reddit", "twitter")
    )
    block = (out / "correlations.tsv").read_text().split("\n\n")[0].splitlines()
    matrix_ok = len(block) == 5 and all(len(line.split("\t")) == 5 for line in block)
    diag = dict(line.split("\t") for line in (out / "diagnostics.tsv").read_text().splitlines()[1:])
    diag_ok = {"rb.precision", "pb.precision", "pb.new_fraction"} <= diag.keys()
    files = ("means.tsv", "correlations.tsv", "diagnostics.tsv", "report.txt")
    before = {n: (out / n).read_bytes() for n in files}
    regen_code = cli.main(["report", "--metrics", "all", "--out", str(out)])
    regen_ok = regen_code == 0 and before == {n: (out / n).read_bytes() for n in files}
    ok = code == 0 and metrics_ok and matrix_ok and diag_ok and regen_ok
    verdict(10, "end to end", ok,
            f"means 4x2: {metrics_ok}, correlations 4x4: {matrix_ok}, diagnostics: {diag_ok}, "
            f"byte-identical regeneration: {regen_ok}")
    assert ok
