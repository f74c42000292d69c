#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpora under tests/fixtures/.

The fixture files are committed; this script exists to document how they were
produced and to rebuild them after a generator change.  Regenerating rewrites
corpora, treebanks, and the mini-corpus golden files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from claudette.corpus import corpus_stats, load_corpus  # noqa: E402
from claudette.evaluation import stats_record  # noqa: E402
from claudette.modelio import canonical_json_bytes  # noqa: E402
from claudette.synthetic import generate_fixture_set  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=str(REPO / "tests" / "fixtures"))
    args = parser.parse_args()

    root = Path(args.root)
    generate_fixture_set(root)

    mini = load_corpus(root / "mini")
    golden = stats_record(corpus_stats(mini))
    (root / "mini_golden.json").write_bytes(canonical_json_bytes(golden))

    for name in ("mini", "planted", "adjacency"):
        corpus = load_corpus(root / name)
        positives = sum(1 for ls in corpus.all_sentences() if ls.detection_label)
        print(f"{name}: {corpus.M} documents, {corpus.N} sentences, {positives} positive")
    print(f"fixtures written under {root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
