"""Regenerate the tab-separated fixture corpora under tests/fixtures/."""

from pathlib import Path

from cccp.ingest import FIELDS, generate_synthetic, merge, reddit_like, twitter_like, write_corpus

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def rows(conv, records, platform="reddit"):
    return [f"{pid}\t{parent}\t{author}\t{ts}\t{conv}\t{platform}" for pid, parent, author, ts in records]


def chain(conv, n, platform="twitter", start=0, step=1):
    return rows(conv, [
        (f"{conv}-{i}", "" if i == 0 else f"{conv}-{i - 1}", f"u{i % 4}", start + i * step) for i in range(n)
    ], platform)


def write(name, lines, header=True):
    text = ("\t".join(FIELDS) + "\n" if header else "") + "\n".join(lines) + "\n"
    (OUT / name).write_text(text, encoding="utf-8")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    good_a = rows("a", [("a0", "", "alice", 100), ("a1", "a0", "bob", 160), ("a2", "a1", "alice", 200)])
    good_b = rows("b", [("b0", "", "carol", 50), ("b1", "b0", "dan", 70), ("b2", "b0", "erin", 90),
                        ("b3", "b1", "carol", 95)], platform="twitter")
    missing = rows("m", [("m0", "", "x", 0), ("m1", "m0", "y", 5), ("m2", "gone", "z", 9)])
    inverted = rows("t", [("t0", "", "x", 50), ("t1", "t0", "y", 40)])

    write("two_valid.tsv", good_a + good_b)
    write("two_valid_no_header.tsv", good_a + good_b, header=False)
    write("missing_parent.tsv", good_a + missing)
    write("oversized.tsv", good_a + chain("big", 150))
    write("robustness.tsv", good_a + good_b + missing + chain("huge", 101) + inverted)

    corpus = merge(generate_synthetic(reddit_like(12, seed=3)), generate_synthetic(twitter_like(12, seed=4)))
    write_corpus(corpus, OUT / "two_platforms.tsv")


if __name__ == "__main__":
    main()
