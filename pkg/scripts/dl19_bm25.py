"""First-stage BM25 nDCG@10 on TREC DL19 passage judgments.

Expects a directory holding ``corpus.jsonl`` (MS MARCO passages in the
``{"_id", "title", "text"}`` layout), ``queries.tsv`` and ``qrels.txt``.
Queries without judgments are dropped, as trec_eval does with ``-c`` off.

    python scripts/dl19_bm25.py /data/dl19 --save-run out/dl19_bm25.run

The tokenizer does no stemming, so expect a few points below Anserini's
Porter-stemmed baseline; the script prints the gap rather than hiding it.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from rankfleet.bm25 import Bm25Params, InvertedIndex, build_index, retrieve
from rankfleet.corpus_io import parse_corpus, parse_qrels, parse_queries, write_run
from rankfleet.metrics import GainTable, map_at_k, mrr_at_k, ndcg_at_k

REFERENCE_NDCG10 = 0.5058


def main():
    ap = argparse.ArgumentParser(description="BM25 nDCG@10 on DL19")
    ap.add_argument("data_dir", type=Path)
    ap.add_argument("--index", type=Path, help="reuse or write an index snapshot here")
    ap.add_argument("--save-run", type=Path)
    args = ap.parse_args()

    t0 = time.perf_counter()
    if args.index and args.index.exists():
        idx = InvertedIndex.load(args.index)
    else:
        idx = build_index(parse_corpus(args.data_dir / "corpus.jsonl"))
        if args.index:
            idx.save(args.index)
    print(f"index ready: {idx.doc_count} passages in {time.perf_counter() - t0:.1f}s")

    qrels = parse_qrels(args.data_dir / "qrels.txt")
    queries = [q for q in parse_queries(args.data_dir / "queries.tsv") if qrels.has_query(q.id)]
    params = Bm25Params()
    runs, sums = [], {"ndcg@10": 0.0, "map@10": 0.0, "mrr@10": 0.0}
    for q in queries:
        rl = retrieve(idx, params, q)
        runs.append(rl)
        g = GainTable.from_qrels(qrels, q.id, max(qrels.max_grade, 1))
        sums["ndcg@10"] += ndcg_at_k(rl, g, 10)
        sums["map@10"] += map_at_k(rl, g, 10)
        sums["mrr@10"] += mrr_at_k(rl, g, 10)
    n = len(queries)
    for name, total in sums.items():
        print(f"{name}\t{total / n:.4f}")
    gap = sums["ndcg@10"] / n - REFERENCE_NDCG10
    print(f"gap to stemmed reference ({REFERENCE_NDCG10}): {gap:+.4f} over {n} queries")
    if args.save_run:
        args.save_run.parent.mkdir(parents=True, exist_ok=True)
        write_run(runs, args.save_run)


if __name__ == "__main__":
    main()
