"""End-to-end retrieve -> rerank -> evaluate pipeline."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from rankfleet.bm25 import InvertedIndex, build_index, retrieve
from rankfleet.config import PipelineConfig
from rankfleet.corpus_io import Corpus, Qrels, Query, RankedList, parse_corpus, parse_qrels
from rankfleet.errors import PipelineError, RankFleetError, ValidationError
from rankfleet.evaluator.cache import JudgmentCache
from rankfleet.evaluator.client import LlmClient
from rankfleet.evaluator.strategies import Completer, evaluate
from rankfleet.fleet import Reranker, RunSet, build_reranker, fan_out
from rankfleet.metrics import GainTable, SelectionOutcome, oracle_select


@dataclass
class SearchResult:
    query_id: str
    ranking: RankedList
    outcome: SelectionOutcome | None
    no_candidates: bool = False
    failures: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        o = self.outcome
        return {
            "query_id": self.query_id,
            "winner_source": o.winner_source if o else None,
            "strategy": o.strategy if o else None,
            "ranking": [{"id": pid, "score": score} for pid, score in self.ranking.entries],
            "per_candidate_scores": dict(sorted(o.per_candidate_scores.items())) if o else {},
            "llm_calls": o.llm_calls if o else 0,
            "no_candidates": self.no_candidates,
            "failures": [{"source_id": s, "error": e} for s, e in self.failures],
        }


def query_id_for_text(text: str) -> str:
    """Stable id for ad-hoc queries, so the judgment cache can be reused."""
    return "adhoc-" + hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]


class Pipeline:
    def __init__(
        self,
        config: PipelineConfig,
        corpus: Corpus,
        index: InvertedIndex | None = None,
        qrels: Qrels | None = None,
        rerankers: Sequence[Reranker] | None = None,
        client: Completer | None = None,
        cache: JudgmentCache | None = None,
    ):
        self.config = config
        self.corpus = corpus
        self.index = index if index is not None else build_index(corpus)
        self.qrels = qrels
        if config.mode == "oracle" and qrels is None:
            raise ValidationError("oracle mode requires qrels")
        if rerankers is None:
            rerankers = [build_reranker(s, self.index, config.bm25) for s in config.fleet]
        if not rerankers:
            raise ValidationError("fleet is empty")
        self.rerankers = list(rerankers)
        if client is None and config.mode == "llm":
            client = LlmClient(config.llm)
        self.client = client
        self.cache = cache if cache is not None else JudgmentCache(config.cache_path)

    @classmethod
    def from_config(cls, config: PipelineConfig, **kw) -> "Pipeline":
        if config.corpus_path is None:
            raise ValidationError("config has no corpus path")
        corpus = parse_corpus(config.corpus_path)
        qrels = parse_qrels(config.qrels_path) if config.qrels_path else None
        index = kw.pop("index", None)
        if index is None:
            snapshot = Path(config.output_dir) / "index.json"
            index = InvertedIndex.load(snapshot) if snapshot.exists() else None
        return cls(config, corpus, index=index, qrels=qrels, **kw)

    # stages -------------------------------------------------------------

    def first_stage(self, query: Query) -> RankedList:
        return retrieve(self.index, self.config.bm25, query)

    def rerank(self, query: Query, candidates: RankedList) -> RunSet:
        return fan_out(self.rerankers, query, candidates, self.corpus)

    def select(self, query: Query, runset: RunSet) -> SelectionOutcome:
        if self.config.mode == "oracle":
            gains = GainTable.from_qrels(self.qrels, query.id, max(self.qrels.max_grade, 1))
            return oracle_select(runset, gains, self.config.oracle_metric, self.config.oracle_k)
        return evaluate(
            self.client,
            self.config.strategy,
            query,
            runset,
            self.corpus,
            cache=self.cache,
            concurrency=self.config.concurrency,
        )

    def search_with_runset(self, query: Query) -> tuple[SearchResult, RunSet | None]:
        try:
            first = self.first_stage(query)
        except RankFleetError as exc:
            raise PipelineError("retrieve", exc) from exc
        if len(first) == 0:
            empty = RankedList(query.id, "none", ())
            return SearchResult(query.id, empty, None, no_candidates=True), None
        try:
            runset = self.rerank(query, first)
        except RankFleetError as exc:
            raise PipelineError("rerank", exc) from exc
        try:
            outcome = self.select(query, runset)
        except RankFleetError as exc:
            raise PipelineError("evaluate", exc) from exc
        winner = runset.by_source()[outcome.winner_source]
        return SearchResult(query.id, winner, outcome, failures=list(runset.failures)), runset

    def search(self, query: Query) -> SearchResult:
        return self.search_with_runset(query)[0]
