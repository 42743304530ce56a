"""Collaborative reranking: BM25 recall, a parallel reranker fleet, and
per-query selection of the best candidate ranking (supervised oracle or
zero-shot LLM judge)."""

from rankfleet.bm25 import Bm25Params, InvertedIndex, bm25_score, build_index, retrieve
from rankfleet.corpus_io import (
    Corpus,
    Passage,
    Qrels,
    Query,
    RankedList,
    parse_corpus,
    parse_qrels,
    parse_queries,
    parse_run,
    write_run,
)
from rankfleet.fleet import RerankerSpec, RunSet, fan_out, rerank
from rankfleet.metrics import GainTable, SelectionOutcome, map_at_k, mrr_at_k, ndcg_at_k, oracle_select

__version__ = "0.1.0"

__all__ = [
    "Bm25Params",
    "Corpus",
    "GainTable",
    "InvertedIndex",
    "Passage",
    "Qrels",
    "Query",
    "RankedList",
    "RerankerSpec",
    "RunSet",
    "SelectionOutcome",
    "bm25_score",
    "build_index",
    "fan_out",
    "map_at_k",
    "mrr_at_k",
    "ndcg_at_k",
    "oracle_select",
    "parse_corpus",
    "parse_qrels",
    "parse_queries",
    "parse_run",
    "rerank",
    "retrieve",
    "write_run",
]
