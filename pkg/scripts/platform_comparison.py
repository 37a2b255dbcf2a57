#!/usr/bin/env python3
"""Score a Reddit-like and a Twitter-like synthetic corpus with all four metrics and print the comparison.

    python3 scripts/platform_comparison.py --n 300 --seed 61 --out runs/platforms
"""

import argparse
import time
from pathlib import Path

from cccp import pb, rb
from cccp.baseline import baseline_scores
from cccp.centrality import centrality_scores
from cccp.ingest import merge, generate_synthetic, reddit_like, twitter_like
from cccp.pb import PBConfig
from cccp.rb import RBConfig
from cccp.report import build_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=300, help="conversations per platform")
    ap.add_argument("--seed", type=int, default=61)
    ap.add_argument("--out", type=Path, help="write means/correlations/diagnostics/report here")
    args = ap.parse_args()

    start = time.perf_counter()
    corpus = merge(
        generate_synthetic(reddit_like(args.n, seed=args.seed)),
        generate_synthetic(twitter_like(args.n, seed=args.seed + 1)),
    )
    rb_model = rb.train_rb(corpus, RBConfig())
    pb_model = pb.train_pb(corpus, PBConfig())
    pb_norm, pb_raw = pb.pb_tables(corpus, pb_model)
    tables = {
        "baseline": baseline_scores(corpus),
        "rb": rb.rb_scores(corpus, rb_model),
        "pb": pb_norm,
        "pb_raw": pb_raw,
        "centrality": centrality_scores(corpus),
    }
    diagnostics = {
        "rb.precision": rb_model.precision,
        "rb.recall": rb_model.recall,
        "pb.precision": pb_model.precision,
        "pb.new_fraction": pb_model.new_fraction,
    }
    rep = build_report(corpus, tables, diagnostics)
    print(rep.render(), end="")
    print("\ndistance embedding (bucket: P(reply)):")
    for bucket, weight in rb.extract_distance_embedding(rb_model):
        print(f"  {bucket:>2}: {weight:.4f}")
    if args.out:
        rep.write(args.out)
    print(f"\n{time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
