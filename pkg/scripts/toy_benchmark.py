"""Synthetic fleet benchmark: oracle selection vs. a noisy in-process judge.

Builds random candidate rankings for a graded toy collection, then reports
per-reranker means, the selected row for each mode, winner frequency and the
positional-bias check. No network or model needed.

    python scripts/toy_benchmark.py --queries 200 --rerankers 8 --noise 0.3
"""

from __future__ import annotations

import argparse
import random
import re

from rankfleet.benchmark import analyze_bias, analyze_frequency, frequency_table, score_runsets
from rankfleet.corpus_io import Corpus, Passage, Qrels, Query, RankedList
from rankfleet.evaluator import JudgmentCache, Strategy, evaluate
from rankfleet.fleet import RunSet
from rankfleet.metrics import GainTable, oracle_select


def build(n_queries: int, n_rerankers: int, n_docs: int, seed: int):
    rng = random.Random(seed)
    corpus = Corpus(Passage(f"p{i:03d}", f"doc {i}") for i in range(n_docs))
    pids = sorted(corpus.passages)
    queries = [Query(f"q{j:03d}", f"query {j}") for j in range(n_queries)]
    grades, runsets = {}, {}
    for q in queries:
        for pid in rng.sample(pids, rng.randint(1, 10)):
            grades[(q.id, pid)] = rng.randint(0, 3)
        cands = []
        for r in range(n_rerankers):
            # reranker r leans towards relevant passages with strength r / n
            lean = r / n_rerankers
            key = {p: rng.random() - lean * grades.get((q.id, p), 0) for p in pids}
            order = sorted(pids, key=key.get)
            cands.append(RankedList(q.id, f"reranker-{r}", tuple((p, float(len(order) - i)) for i, p in enumerate(order))))
        runsets[q.id] = RunSet(q.id, cands)
    return queries, corpus, Qrels(grades), runsets


class NoisyJudge:
    """Answers with the true grade, or a random one with probability ``noise``."""

    profile = None

    def __init__(self, qrels: Qrels, noise: float, seed: int):
        self.qrels, self.noise, self.rng = qrels, noise, random.Random(seed)
        self.calls = 0

    def complete(self, prompt) -> str:
        self.calls += 1
        qid = "q%03d" % int(re.search(r"Query: query (\d+)", prompt).group(1))
        pid = "p%03d" % int(re.search(r"Passage: doc (\d+)", prompt).group(1))
        if self.rng.random() < self.noise:
            return str(self.rng.randint(0, 5))
        return str(self.qrels.grade(qid, pid))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--rerankers", type=int, default=8)
    ap.add_argument("--docs", type=int, default=40)
    ap.add_argument("--noise", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    queries, corpus, qrels, runsets = build(args.queries, args.rerankers, args.docs, args.seed)
    scale = max(qrels.max_grade, 1)

    def oracle(q, rs):
        return oracle_select(rs, GainTable.from_qrels(qrels, q.id, scale), "ndcg", 10)

    judge = NoisyJudge(qrels, args.noise, args.seed)
    strategy = Strategy("passage-pointwise-simple", "ndcg", 10)
    cache = JudgmentCache()

    def llm(q, rs):
        return evaluate(judge, strategy, q, rs, corpus, cache=cache, concurrency=1)

    for mode, select in (("oracle", oracle), ("llm", llm)):
        rep = score_runsets(queries, runsets, qrels, select, mode=mode)
        print(f"== mode {mode}")
        print(rep.table())
    print(f"judge calls: {judge.calls}")

    print("== winner frequency (ndcg@10)")
    print(frequency_table(analyze_frequency(rep.records, "ndcg", 10)))

    cases = [(q, runsets[q.id]) for q in queries[:20]]
    bias = analyze_bias(llm, cases, permutations=5, seed=args.seed)
    print("== presentation-order check (cached judge, 5 shuffles)")
    print(bias.table())


if __name__ == "__main__":
    main()
