"""Benchmark runs, winner-frequency analysis and positional-bias analysis."""

from __future__ import annotations

import itertools
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from rankfleet.corpus_io import Qrels, Query, RankedList
from rankfleet.errors import ValidationError
from rankfleet.fleet import RunSet
from rankfleet.metrics import (
    FrequencyReport,
    GainTable,
    SelectionOutcome,
    argmax_source,
    frequency_from_scores,
    map_at_k,
    mrr_at_k,
    ndcg_at_k,
)

Selector = Callable[[Query, RunSet], SelectionOutcome]
BEST_ROW = "best-oracle"


@dataclass
class QueryRecord:
    query_id: str
    scores: dict[str, dict[str, float]]  # source -> metric -> value
    winner: str | None
    oracle_winner: str | None
    selection: dict | None = None
    flags: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def metric(self, name: str) -> dict[str, float]:
        return {s: m[name] for s, m in self.scores.items()}


@dataclass
class BenchmarkReport:
    k: int
    mode: str
    rows: dict[str, dict[str, float]]
    records: list[QueryRecord]

    @property
    def metric_names(self) -> list[str]:
        return [f"ndcg@{self.k}", f"map@{self.k}", f"mrr@{self.k}"]

    def to_dict(self) -> dict:
        return {"k": self.k, "mode": self.mode, "rows": self.rows}

    def table(self) -> str:
        names = self.metric_names
        width = max(len(r) for r in self.rows) if self.rows else 6
        lines = ["source".ljust(width) + "".join(f"  {n:>9}" for n in names)]
        for src, vals in self.rows.items():
            lines.append(src.ljust(width) + "".join(f"  {vals[n]:9.4f}" for n in names))
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "benchmark.txt").write_text(self.table(), encoding="utf-8")
        (out / "benchmark.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        write_records(self.records, out / "details.jsonl")


def write_records(records: Iterable[QueryRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(asdict(r), sort_keys=True) + "\n")


def read_records(path: str | Path) -> list[QueryRecord]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                d["failures"] = [tuple(f) for f in d.get("failures", [])]
                out.append(QueryRecord(**d))
    return out


def _true_metrics(ranking: RankedList, gains: GainTable, k: int) -> dict[str, float]:
    return {
        f"ndcg@{k}": ndcg_at_k(ranking, gains, k),
        f"map@{k}": map_at_k(ranking, gains, k),
        f"mrr@{k}": mrr_at_k(ranking, gains, k),
    }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def score_runsets(
    queries: Sequence[Query],
    runsets: Mapping[str, RunSet | None],
    qrels: Qrels,
    select: Selector | None = None,
    k: int = 10,
    mode: str = "oracle",
    fleet: Sequence[str] | None = None,
    outcomes: Mapping[str, SelectionOutcome] | None = None,
) -> BenchmarkReport:
    """Score every candidate against qrels and assemble the report rows.

    ``runsets`` maps query id to its RunSet, or None when the first stage
    found nothing. Missing scores (failed reranker, empty first stage) count
    as 0 so every row averages over the same queries. Selections come from
    ``outcomes`` when given, otherwise ``select`` is called per query.
    """
    if select is None and outcomes is None:
        raise ValidationError("need a selector or precomputed outcomes")
    if not queries:
        raise ValidationError("no queries to benchmark")
    scale = max(qrels.max_grade, 1)
    ndcg = f"ndcg@{k}"
    zero = {f"ndcg@{k}": 0.0, f"map@{k}": 0.0, f"mrr@{k}": 0.0}
    records = []
    for q in queries:
        rs = runsets.get(q.id)
        flags = [] if qrels.has_query(q.id) else ["no_qrels"]
        if rs is None or not rs.candidates:
            records.append(QueryRecord(q.id, {}, None, None, None, flags + ["no_candidates"]))
            continue
        gains = GainTable.from_qrels(qrels, q.id, scale)
        scores = {c.source_id: _true_metrics(c, gains, k) for c in rs.candidates}
        outcome = outcomes[q.id] if outcomes is not None else select(q, rs)
        oracle = argmax_source({s: m[ndcg] for s, m in scores.items()})
        if rs.failures:
            flags.append("reranker_failures")
        records.append(
            QueryRecord(q.id, scores, outcome.winner_source, oracle, outcome.to_dict(), flags, list(rs.failures))
        )

    sources = list(fleet) if fleet else sorted({s for r in records for s in r.scores})
    names = list(zero)
    rows: dict[str, dict[str, float]] = {}
    for s in sources:
        rows[s] = {n: _mean([r.scores.get(s, zero)[n] for r in records]) for n in names}
    rows[f"selected-{mode}"] = {
        n: _mean([r.scores[r.winner][n] if r.winner else 0.0 for r in records]) for n in names
    }
    rows[BEST_ROW] = {
        n: _mean([r.scores[r.oracle_winner][n] if r.oracle_winner else 0.0 for r in records]) for n in names
    }
    return BenchmarkReport(k, mode, rows, records)


def run_benchmark(pipeline, queries: Sequence[Query], qrels: Qrels | None = None, k: int = 10) -> BenchmarkReport:
    qrels = qrels if qrels is not None else pipeline.qrels
    if qrels is None:
        raise ValidationError("benchmarking needs qrels")
    workers = max(1, pipeline.config.concurrency)

    with ThreadPoolExecutor(max_workers=workers) as ex:
        results = list(ex.map(pipeline.search_with_runset, queries))
    runsets = {q.id: rs for q, (_, rs) in zip(queries, results)}
    outcomes = {q.id: res.outcome for q, (res, _) in zip(queries, results) if res.outcome is not None}
    fleet = [r.source_id for r in pipeline.rerankers]
    return score_runsets(
        queries, runsets, qrels, k=k, mode=pipeline.config.mode, fleet=fleet, outcomes=outcomes
    )


def analyze_frequency(records: Sequence[QueryRecord], metric: str = "ndcg", k: int | None = None) -> FrequencyReport:
    """Winner frequency from benchmark detail records.

    Queries without any candidate are skipped; they have no winner to count.
    """
    per_query = []
    for r in records:
        if not r.scores:
            continue
        key = next((n for n in next(iter(r.scores.values())) if n.startswith(f"{metric}@")), None)
        if key is None or (k is not None and key != f"{metric}@{k}"):
            raise ValidationError(f"records carry no {metric} values")
        per_query.append(r.metric(key))
    return frequency_from_scores(per_query)


def frequency_table(report: FrequencyReport) -> str:
    lines = ["source_id\tproportion"]
    lines += [f"{s}\t{p:.6f}" for s, p in report.to_rows()]
    return "\n".join(lines) + "\n"


@dataclass
class BiasReport:
    selection_counts: dict[str, int]
    permutation_trials: int
    max_rate_delta: float
    query_count: int
    per_trial_counts: list[dict[str, int]]
    orders: list[list[str]]

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        total = self.query_count * self.permutation_trials
        lines = ["source_id\tselections\trate"]
        for s, c in sorted(self.selection_counts.items()):
            lines.append(f"{s}\t{c}\t{c / total:.6f}")
        lines.append(f"# trials={self.permutation_trials} queries={self.query_count} max_rate_delta={self.max_rate_delta:.6f}")
        return "\n".join(lines) + "\n"


def analyze_bias(
    select: Selector,
    cases: Sequence[tuple[Query, RunSet]],
    permutations: int,
    seed: int = 0,
    exhaustive: bool = False,
) -> BiasReport:
    """Re-run selection with the candidates presented in shuffled orders.

    Each trial fixes one presentation order over source ids and applies it to
    every query. ``max_rate_delta`` is the largest deviation of any source's
    per-trial selection rate from its rate averaged over all trials; an
    evaluator without positional preference scores exactly 0.

    With ``exhaustive`` every ordering of the fleet is tried once and
    ``permutations`` is ignored.
    """
    if not cases:
        raise ValidationError("no queries to analyse")
    sources = sorted({c.source_id for _, rs in cases for c in rs.candidates})
    if exhaustive:
        orders = [list(p) for p in itertools.permutations(sources)]
    else:
        if permutations < 1:
            raise ValidationError("permutations must be >= 1")
        rng = random.Random(seed)
        orders = []
        for _ in range(permutations):
            o = list(sources)
            rng.shuffle(o)
            orders.append(o)

    per_trial = []
    for order in orders:
        pos = {s: i for i, s in enumerate(order)}
        counts = {s: 0 for s in sources}
        for q, rs in cases:
            shown = RunSet(rs.query_id, sorted(rs.candidates, key=lambda c: pos[c.source_id]), list(rs.failures))
            counts[select(q, shown).winner_source] += 1
        per_trial.append(counts)

    trials, n = len(orders), len(cases)
    totals = {s: sum(t[s] for t in per_trial) for s in sources}
    delta = max(
        (Fraction(abs(t[s] * trials - totals[s]), trials * n) for t in per_trial for s in sources),
        default=Fraction(0),
    )
    return BiasReport(totals, trials, float(delta), n, per_trial, orders)
