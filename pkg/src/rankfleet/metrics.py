"""Supervised ranking metrics, oracle selection and winner frequency.

Conventions (trec_eval style):

* NDCG uses gain ``2**g - 1`` and discount ``log2(rank + 1)``; the ideal
  ordering is built from every passage with positive gain for the query,
  retrieved or not.
* MAP and MRR binarize: a passage is relevant iff its gain is positive.
* A query without relevant passages scores 0 under every metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from rankfleet.corpus_io import Qrels, RankedList
from rankfleet.errors import ValidationError

METRICS = ("ndcg", "map", "mrr")


@dataclass(frozen=True)
class GainTable:
    gains: Mapping[str, float]
    scale_max: int = 5

    def __post_init__(self):
        if self.scale_max < 1:
            raise ValidationError("scale_max must be a positive integer")
        for pid, g in self.gains.items():
            if g < 0:
                raise ValidationError(f"negative gain {g} for {pid!r}")

    def __getitem__(self, pid: str) -> float:
        return self.gains.get(pid, 0)

    @property
    def relevant_count(self) -> int:
        return sum(1 for g in self.gains.values() if g > 0)

    @classmethod
    def from_qrels(cls, qrels: Qrels, query_id: str, scale_max: int | None = None) -> "GainTable":
        if scale_max is None:
            scale_max = max(qrels.max_grade, 1)
        return cls(dict(qrels.for_query(query_id)), scale_max)


@dataclass
class SelectionOutcome:
    query_id: str
    strategy: str
    per_candidate_scores: dict[str, float]
    winner_source: str
    llm_calls: int = 0
    parse_failures: int = 0

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "strategy": self.strategy,
            "per_candidate_scores": dict(sorted(self.per_candidate_scores.items())),
            "winner_source": self.winner_source,
            "llm_calls": self.llm_calls,
            "parse_failures": self.parse_failures,
        }


@dataclass
class FrequencyReport:
    proportions: dict[str, float]
    query_count: int
    credits: dict[str, float] = field(default_factory=dict)

    def to_rows(self) -> list[tuple[str, float]]:
        return sorted(self.proportions.items())


def _check_k(k: int) -> None:
    if k < 1:
        raise ValidationError(f"cutoff k must be >= 1, got {k}")


def _dcg(gains: Iterable[float]) -> float:
    return sum((2.0**g - 1.0) / math.log2(i + 2) for i, g in enumerate(gains))


def ndcg_at_k(ranking: RankedList | Sequence[str], gains: GainTable, k: int) -> float:
    _check_k(k)
    ids = ranking.passage_ids if isinstance(ranking, RankedList) else list(ranking)
    ideal = sorted((g for g in gains.gains.values() if g > 0), reverse=True)[:k]
    idcg = _dcg(ideal)
    if idcg == 0:
        return 0.0
    return _dcg(gains[pid] for pid in ids[:k]) / idcg


def map_at_k(ranking: RankedList | Sequence[str], gains: GainTable, k: int) -> float:
    _check_k(k)
    ids = ranking.passage_ids if isinstance(ranking, RankedList) else list(ranking)
    total_relevant = gains.relevant_count
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for i, pid in enumerate(ids[:k], 1):
        if gains[pid] > 0:
            hits += 1
            precision_sum += hits / i
    return precision_sum / min(total_relevant, k)


def mrr_at_k(ranking: RankedList | Sequence[str], gains: GainTable, k: int) -> float:
    _check_k(k)
    ids = ranking.passage_ids if isinstance(ranking, RankedList) else list(ranking)
    for i, pid in enumerate(ids[:k], 1):
        if gains[pid] > 0:
            return 1.0 / i
    return 0.0


_METRIC_FNS = {"ndcg": ndcg_at_k, "map": map_at_k, "mrr": mrr_at_k}


def metric_fn(name: str):
    try:
        return _METRIC_FNS[name]
    except KeyError:
        raise ValidationError(f"unknown metric {name!r}; expected one of {METRICS}") from None


def argmax_source(scores: Mapping[str, float]) -> str:
    """Highest score wins; ties go to the lexicographically smallest source."""
    if not scores:
        raise ValidationError("nothing to select from")
    return min(scores, key=lambda sid: (-scores[sid], sid))


def oracle_select(runset, gains: GainTable, metric: str = "ndcg", k: int = 10) -> SelectionOutcome:
    fn = metric_fn(metric)
    _check_k(k)
    if not runset.candidates:
        raise ValidationError(f"run set for {runset.query_id!r} has no candidates")
    scores = {c.source_id: fn(c, gains, k) for c in runset.candidates}
    return SelectionOutcome(
        query_id=runset.query_id,
        strategy=f"oracle-{metric}@{k}",
        per_candidate_scores=scores,
        winner_source=argmax_source(scores),
    )


def frequency_from_scores(per_query_scores: Sequence[Mapping[str, float]]) -> FrequencyReport:
    """Fraction of queries on which each source achieves the best value.

    Sources tied for the maximum on a query split that query's credit evenly.
    """
    if not per_query_scores:
        raise ValidationError("no queries to count")
    sources = sorted({s for scores in per_query_scores for s in scores})
    credits = {s: 0.0 for s in sources}
    for scores in per_query_scores:
        if not scores:
            raise ValidationError("query with no candidate scores")
        best = max(scores.values())
        tied = [s for s, v in scores.items() if v == best]
        for s in tied:
            credits[s] += 1.0 / len(tied)
    n = len(per_query_scores)
    return FrequencyReport({s: c / n for s, c in credits.items()}, n, credits)


def frequency(per_query_runsets, qrels: Qrels, metric: str = "ndcg", k: int = 10) -> FrequencyReport:
    fn = metric_fn(metric)
    _check_k(k)
    runsets = list(per_query_runsets)
    if not runsets:
        raise ValidationError("no run sets given")
    fleets = {frozenset(c.source_id for c in rs.candidates) for rs in runsets}
    if len(fleets) > 1:
        raise ValidationError("run sets do not share the same fleet")
    scale = max(qrels.max_grade, 1)
    per_query = []
    for rs in runsets:
        gains = GainTable.from_qrels(qrels, rs.query_id, scale)
        per_query.append({c.source_id: fn(c, gains, k) for c in rs.candidates})
    return frequency_from_scores(per_query)
