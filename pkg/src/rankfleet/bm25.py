"""First-stage BM25 recall over an in-memory inverted index.

Scoring follows the Lucene variant::

    idf(t)   = ln(1 + (N - df + 0.5) / (df + 0.5))
    score    = sum over unique query terms of
               idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))

The idf is never negative, so neither is any score.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from rankfleet.corpus_io import Corpus, Query, RankedList, tokenize
from rankfleet.errors import IndexFormatError, NotFoundError, ValidationError

FIRST_STAGE_SOURCE = "bm25-first-stage"
INDEX_FORMAT = "rankfleet-bm25-index"
INDEX_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4
    top_k: int = 100

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValidationError(f"k1 must be > 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValidationError(f"b must be in [0, 1], got {self.b}")
        if int(self.top_k) != self.top_k or self.top_k < 1:
            raise ValidationError(f"top_k must be a positive integer, got {self.top_k}")


class InvertedIndex:
    def __init__(
        self,
        postings: Mapping[str, list[tuple[str, int]]],
        doc_lengths: Mapping[str, int],
    ):
        self.postings = MappingProxyType({t: tuple(p) for t, p in postings.items()})
        self.doc_lengths = MappingProxyType(dict(doc_lengths))
        self.doc_count = len(self.doc_lengths)
        self.avgdl = sum(self.doc_lengths.values()) / self.doc_count if self.doc_count else 0.0
        # tf lookup for single-document scoring
        self._tf: dict[str, dict[str, int]] = {}
        for term, plist in self.postings.items():
            for pid, tf in plist:
                if pid not in self.doc_lengths:
                    raise IndexFormatError(f"posting for unknown passage {pid!r}")
                self._tf.setdefault(pid, {})[term] = tf

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def tf(self, term: str, passage_id: str) -> int:
        return self._tf.get(passage_id, {}).get(term, 0)

    def idf(self, term: str) -> float:
        df = self.df(term)
        return math.log(1 + (self.doc_count - df + 0.5) / (df + 0.5))

    def save(self, path: str | Path) -> None:
        doc = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "doc_lengths": dict(self.doc_lengths),
            "postings": {t: [list(e) for e in p] for t, p in self.postings.items()},
        }
        Path(path).write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IndexFormatError(f"{path}: not an index snapshot ({exc})") from exc
        if not isinstance(doc, dict) or doc.get("format") != INDEX_FORMAT:
            raise IndexFormatError(f"{path}: not an index snapshot")
        if doc.get("version") != INDEX_VERSION:
            raise IndexFormatError(
                f"{path}: index format version {doc.get('version')!r}, expected {INDEX_VERSION}"
            )
        postings = {t: [(pid, int(tf)) for pid, tf in p] for t, p in doc["postings"].items()}
        return cls(postings, doc["doc_lengths"])


def build_index(corpus: Corpus) -> InvertedIndex:
    if len(corpus) == 0:
        raise ValidationError("cannot index an empty corpus")
    postings: dict[str, list[tuple[str, int]]] = {}
    lengths = {}
    for passage in corpus:
        tokens = tokenize(passage.indexed_text)
        lengths[passage.id] = len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((passage.id, tf))
    return InvertedIndex(postings, lengths)


def _query_terms(query: Query | str) -> list[str]:
    text = query.text if isinstance(query, Query) else query
    return list(dict.fromkeys(tokenize(text)))


def _term_weight(idf: float, tf: int, dl: int, avgdl: float, params: Bm25Params) -> float:
    norm = params.k1 * (1 - params.b + params.b * dl / avgdl)
    return idf * tf * (params.k1 + 1) / (tf + norm)


def bm25_score(index: InvertedIndex, params: Bm25Params, query: Query | str, passage_id: str) -> float:
    if passage_id not in index.doc_lengths:
        raise NotFoundError(f"passage {passage_id!r} not in index")
    dl = index.doc_lengths[passage_id]
    score = 0.0
    for term in _query_terms(query):
        tf = index.tf(term, passage_id)
        if tf:
            score += _term_weight(index.idf(term), tf, dl, index.avgdl, params)
    return score


def retrieve(index: InvertedIndex, params: Bm25Params, query: Query) -> RankedList:
    """Top-``params.top_k`` passages with positive score, ties by passage id."""
    acc: dict[str, float] = {}
    for term in _query_terms(query):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        for pid, tf in plist:
            w = _term_weight(idf, tf, index.doc_lengths[pid], index.avgdl, params)
            acc[pid] = acc.get(pid, 0.0) + w
    ranked = sorted(((pid, s) for pid, s in acc.items() if s > 0), key=lambda e: (-e[1], e[0]))
    return RankedList(query.id, FIRST_STAGE_SOURCE, tuple(ranked[: params.top_k]))
