"""Zero-shot selection of the best candidate ranking with an LLM judge.

Passage-based strategies grade every distinct passage in the candidates'
top-k once, then score each candidate with an IR metric over those grades.
Rank-based strategies show the judge whole rankings: ``rank-pointwise`` rates
each distinct ranking on 0-100, ``rank-pairwise`` runs a knockout in which the
current champion (Assistant 1) meets each challenger (Assistant 2) in
ascending source-id order.

Candidates are always visited in ascending source-id order, so results never
depend on the order rerankers finished in.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

from rankfleet.corpus_io import Corpus, Query
from rankfleet.errors import ValidationError
from rankfleet.evaluator.cache import JudgmentCache, RelevanceJudgment
from rankfleet.evaluator.parsing import parse_graded_reply, parse_pairwise_reply, parse_yesno_reply
from rankfleet.evaluator.prompts import KINDS, PASSAGE_KINDS, render_prompt
from rankfleet.fleet import RunSet
from rankfleet.metrics import METRICS, GainTable, SelectionOutcome, argmax_source, metric_fn

RANK_SCALE_MAX = 100


class Completer(Protocol):
    def complete(self, prompt) -> str: ...


@dataclass(frozen=True)
class Strategy:
    kind: str
    aggregation_metric: str | None = None
    eval_depth: int = 10
    max_passage_tokens: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown strategy kind {self.kind!r}; expected one of {KINDS}")
        if self.is_passage_based:
            if self.aggregation_metric is None:
                object.__setattr__(self, "aggregation_metric", "ndcg")
            if self.aggregation_metric not in METRICS:
                raise ValidationError(f"unknown aggregation metric {self.aggregation_metric!r}")
        elif self.aggregation_metric is not None:
            raise ValidationError(f"{self.kind} does not take an aggregation metric")
        if self.eval_depth < 1:
            raise ValidationError("eval_depth must be >= 1")
        if self.max_passage_tokens is not None and self.max_passage_tokens < 1:
            raise ValidationError("max_passage_tokens must be >= 1 when set")

    @property
    def is_passage_based(self) -> bool:
        return self.kind in PASSAGE_KINDS

    @property
    def scale_max(self) -> int:
        if self.kind == "passage-relwise":
            return 1
        return 5 if self.is_passage_based else RANK_SCALE_MAX

    def describe(self) -> str:
        if self.is_passage_based:
            return f"{self.kind}/{self.aggregation_metric}@{self.eval_depth}"
        return f"{self.kind}@{self.eval_depth}"


def _model_name(client) -> str:
    profile = getattr(client, "profile", None)
    return getattr(profile, "model_name", type(client).__name__)


def _check(runset: RunSet, strategy: Strategy, passage_based: bool):
    if strategy.is_passage_based != passage_based:
        raise ValidationError(f"strategy {strategy.kind} cannot be used here")
    if not runset.candidates:
        raise ValidationError(f"run set for {runset.query_id!r} has no candidates")


def judge_passage(client: Completer, strategy: Strategy, query: Query, corpus: Corpus, pid: str) -> RelevanceJudgment:
    prompt = render_prompt(
        strategy.kind, query, [corpus[pid]], max_passage_tokens=strategy.max_passage_tokens
    )
    reply = client.complete(prompt)
    if strategy.kind == "passage-relwise":
        grade = parse_yesno_reply(reply)
    else:
        grade = parse_graded_reply(reply, strategy.scale_max)
    return RelevanceJudgment(
        query_id=query.id,
        passage_id=pid,
        grade=0 if grade is None else grade,
        scale_max=strategy.scale_max,
        raw_reply=reply,
        parsed=grade is not None,
    )


def evaluate_passage_based(
    client: Completer,
    strategy: Strategy,
    query: Query,
    runset: RunSet,
    corpus: Corpus,
    cache: JudgmentCache | None = None,
    concurrency: int = 4,
) -> SelectionOutcome:
    _check(runset, strategy, passage_based=True)
    k = strategy.eval_depth
    candidates = runset.sorted_candidates()
    pool_ids = list(dict.fromkeys(pid for c in candidates for pid in c.top(k)))
    cache = cache if cache is not None else JudgmentCache()
    model = _model_name(client)

    def one(pid):
        key = (model, strategy.kind, query.id, pid)
        return cache.get_or_compute(key, lambda: judge_passage(client, strategy, query, corpus, pid))

    if concurrency > 1 and len(pool_ids) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as ex:
            results = list(ex.map(one, pool_ids))
    else:
        results = [one(pid) for pid in pool_ids]

    gains = GainTable({j.passage_id: j.grade for j, _ in results}, strategy.scale_max)
    fn = metric_fn(strategy.aggregation_metric)
    scores = {c.source_id: fn(c, gains, k) for c in candidates}
    return SelectionOutcome(
        query_id=query.id,
        strategy=strategy.describe(),
        per_candidate_scores=scores,
        winner_source=argmax_source(scores),
        llm_calls=sum(1 for _, fresh in results if fresh),
        parse_failures=sum(1 for j, _ in results if not j.parsed),
    )


def evaluate_rank_pointwise(
    client: Completer,
    strategy: Strategy,
    query: Query,
    runset: RunSet,
    corpus: Corpus,
    concurrency: int = 4,
) -> SelectionOutcome:
    if strategy.kind != "rank-pointwise":
        raise ValidationError(f"strategy {strategy.kind} is not rank-pointwise")
    _check(runset, strategy, passage_based=False)
    k = strategy.eval_depth
    candidates = runset.sorted_candidates()
    groups: dict[tuple[str, ...], list[str]] = {}
    for c in candidates:
        groups.setdefault(tuple(c.top(k)), []).append(c.source_id)
    ranks = list(groups)

    def rate(rank):
        prompt = render_prompt(
            strategy.kind,
            query,
            [corpus[pid] for pid in rank],
            eval_depth=k,
            max_passage_tokens=strategy.max_passage_tokens,
        )
        return parse_graded_reply(client.complete(prompt), RANK_SCALE_MAX)

    if concurrency > 1 and len(ranks) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as ex:
            ratings = list(ex.map(rate, ranks))
    else:
        ratings = [rate(r) for r in ranks]

    scores = {}
    for rank, rating in zip(ranks, ratings):
        for sid in groups[rank]:
            scores[sid] = float(rating or 0)
    return SelectionOutcome(
        query_id=query.id,
        strategy=strategy.describe(),
        per_candidate_scores=scores,
        winner_source=argmax_source(scores),
        llm_calls=len(ranks),
        parse_failures=sum(1 for r in ratings if r is None),
    )


def evaluate_rank_pairwise(
    client: Completer,
    strategy: Strategy,
    query: Query,
    runset: RunSet,
    corpus: Corpus,
) -> SelectionOutcome:
    if strategy.kind != "rank-pairwise":
        raise ValidationError(f"strategy {strategy.kind} is not rank-pairwise")
    _check(runset, strategy, passage_based=False)
    k = strategy.eval_depth
    candidates = runset.sorted_candidates()
    wins = {c.source_id: 0.0 for c in candidates}
    champion = candidates[0]
    calls = failures = 0
    for challenger in candidates[1:]:
        prompt = render_prompt(
            strategy.kind,
            query,
            [corpus[pid] for pid in champion.top(k)],
            pair=[corpus[pid] for pid in challenger.top(k)],
            eval_depth=k,
            max_passage_tokens=strategy.max_passage_tokens,
        )
        verdict = parse_pairwise_reply(client.complete(prompt))
        calls += 1
        if verdict is None:
            # unreadable verdict: champion stays, nobody scores the round
            failures += 1
            continue
        if verdict == 2:
            champion = challenger
        wins[champion.source_id] += 1
    return SelectionOutcome(
        query_id=query.id,
        strategy=strategy.describe(),
        per_candidate_scores=wins,
        winner_source=champion.source_id,
        llm_calls=calls,
        parse_failures=failures,
    )


def evaluate(
    client: Completer,
    strategy: Strategy,
    query: Query,
    runset: RunSet,
    corpus: Corpus,
    cache: JudgmentCache | None = None,
    concurrency: int = 4,
) -> SelectionOutcome:
    if strategy.is_passage_based:
        return evaluate_passage_based(client, strategy, query, runset, corpus, cache, concurrency)
    if strategy.kind == "rank-pointwise":
        return evaluate_rank_pointwise(client, strategy, query, runset, corpus, concurrency)
    return evaluate_rank_pairwise(client, strategy, query, runset, corpus)
