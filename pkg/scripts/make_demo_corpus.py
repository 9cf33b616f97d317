"""Write the bundled synthetic hotel-review corpus and a ready-to-run config.

Usage:
    python scripts/make_demo_corpus.py [directory] [--reviews N] [--seed S]

Then:
    ratedrivers run --config <directory>/demo.cfg
"""

import argparse
from pathlib import Path

from ratedrivers.datasets import demo_reviews, write_demo_config, write_reviews_jsonl


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", nargs="?", default="demo", help="target directory")
    parser.add_argument("--reviews", type=int, default=500)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    target = Path(args.directory)
    target.mkdir(parents=True, exist_ok=True)
    reviews = demo_reviews(args.reviews, seed=args.seed)
    write_reviews_jsonl(reviews, target / "reviews.jsonl")
    write_demo_config(target / "demo.cfg", reviews="reviews.jsonl", out="out", seed=7)
    ratings = [r.rating for r in reviews]
    print(f"wrote {len(reviews)} reviews to {target / 'reviews.jsonl'}")
    print("rating distribution:", {r: ratings.count(r) for r in sorted(set(ratings))})
    print(f"run: ratedrivers run --config {target / 'demo.cfg'}")


if __name__ == "__main__":
    main()
