"""Uniform reranker contract and concurrent fan-out over a fleet.

Three kinds of reranker are supported:

* ``in-process-bm25`` rescores the candidates with the local BM25 index.
* ``static-run`` replays a precomputed TREC run file.
* ``remote`` posts the candidates to an HTTP service (JSON, see
  :func:`RemoteReranker.rerank` for the wire format).

Every reranker returns a permutation of its input candidates.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx

from rankfleet.bm25 import Bm25Params, InvertedIndex, bm25_score
from rankfleet.corpus_io import Corpus, Query, RankedList, parse_run
from rankfleet.errors import (
    FleetExhaustedError,
    NotFoundError,
    ProtocolError,
    RerankTimeoutError,
    ValidationError,
)

logger = logging.getLogger(__name__)

KINDS = ("in-process-bm25", "static-run", "remote")


@dataclass(frozen=True)
class RerankerSpec:
    source_id: str
    kind: str
    endpoint: str | None = None
    run_path: str | None = None
    run_tag: str | None = None
    timeout: float = 30.0
    depth: int = 100

    def __post_init__(self):
        if not self.source_id:
            raise ValidationError("reranker source_id must be non-empty")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown reranker kind {self.kind!r}")
        if (self.kind == "remote") != (self.endpoint is not None):
            raise ValidationError(f"{self.source_id}: endpoint is required for, and only for, remote rerankers")
        if (self.kind == "static-run") != (self.run_path is not None):
            raise ValidationError(f"{self.source_id}: run_path is required for, and only for, static-run rerankers")
        if self.timeout <= 0:
            raise ValidationError(f"{self.source_id}: timeout must be positive")
        if self.depth < 1:
            raise ValidationError(f"{self.source_id}: depth must be >= 1")


@dataclass
class RunSet:
    """Candidate rankings for one query, one per surviving reranker."""

    query_id: str
    candidates: list[RankedList] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        ids = [c.source_id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate candidate sources in run set for {self.query_id!r}")
        for c in self.candidates:
            if c.query_id != self.query_id:
                raise ValidationError(f"candidate {c.source_id} is for query {c.query_id!r}, not {self.query_id!r}")

    @property
    def n_ranks(self) -> int:
        return len(self.candidates)

    def by_source(self) -> dict[str, RankedList]:
        return {c.source_id: c for c in self.candidates}

    def sorted_candidates(self) -> list[RankedList]:
        return sorted(self.candidates, key=lambda c: c.source_id)


class Reranker(Protocol):
    source_id: str
    timeout: float

    def rerank(self, query: Query, candidates: RankedList, corpus: Corpus) -> RankedList: ...


def _with_tail(query_id: str, source_id: str, head: list[tuple[str, float]], tail: list[str]) -> RankedList:
    # Candidates the reranker did not order go last, one below the lowest score.
    if tail:
        floor = (min(s for _, s in head) if head else 0.0) - 1.0
        head = head + [(pid, floor) for pid in tail]
    return RankedList(query_id, source_id, tuple(head))


def _split_depth(candidates: RankedList, depth: int) -> tuple[list[str], list[str]]:
    ids = candidates.passage_ids
    return ids[:depth], ids[depth:]


class Bm25Reranker:
    def __init__(self, spec: RerankerSpec, index: InvertedIndex, params: Bm25Params):
        self.spec = spec
        self.source_id = spec.source_id
        self.timeout = spec.timeout
        self.index = index
        self.params = params

    def rerank(self, query, candidates, corpus):
        head, tail = _split_depth(candidates, self.spec.depth)
        scored = [(pid, bm25_score(self.index, self.params, query, pid)) for pid in head]
        scored.sort(key=lambda e: (-e[1], e[0]))
        return _with_tail(query.id, self.source_id, scored, tail)


class StaticRunReranker:
    def __init__(self, spec: RerankerSpec):
        self.spec = spec
        self.source_id = spec.source_id
        self.timeout = spec.timeout
        self._runs: dict[str, RankedList] | None = None
        self._lock = threading.Lock()

    def _load(self) -> dict[str, RankedList]:
        with self._lock:
            if self._runs is None:
                runs = {}
                for rl in parse_run(self.spec.run_path):
                    if self.spec.run_tag is not None and rl.source_id != self.spec.run_tag:
                        continue
                    runs.setdefault(rl.query_id, rl)
                self._runs = runs
            return self._runs

    def rerank(self, query, candidates, corpus):
        stored = self._load().get(query.id)
        if stored is None:
            raise NotFoundError(f"{self.spec.run_path} has no ranking for query {query.id!r}")
        head, tail = _split_depth(candidates, self.spec.depth)
        wanted = set(head)
        ordered = [(pid, s) for pid, s in stored.entries if pid in wanted]
        covered = {pid for pid, _ in ordered}
        missing = [pid for pid in head if pid not in covered]
        return _with_tail(query.id, self.source_id, ordered, missing + tail)


class RemoteReranker:
    """HTTP reranker.

    Request body::

        {"query_id": str, "query": str, "candidates": [{"id": str, "text": str}, ...]}

    Expected reply (status 200)::

        {"ranking": [{"id": str, "score": number}, ...]}

    The ranking must be a permutation of the request candidates with
    non-increasing scores.
    """

    def __init__(self, spec: RerankerSpec, client: httpx.Client | None = None):
        self.spec = spec
        self.source_id = spec.source_id
        self.timeout = spec.timeout
        self._client = client

    def rerank(self, query, candidates, corpus):
        head, tail = _split_depth(candidates, self.spec.depth)
        payload = {
            "query_id": query.id,
            "query": query.text,
            "candidates": [{"id": pid, "text": corpus.text_of(pid)} for pid in head],
        }
        try:
            if self._client is not None:
                resp = self._client.post(self.spec.endpoint, json=payload, timeout=self.timeout)
            else:
                resp = httpx.post(self.spec.endpoint, json=payload, timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise RerankTimeoutError(f"{self.source_id}: no reply within {self.timeout}s") from exc
        except httpx.TransportError as exc:
            raise ProtocolError(f"{self.source_id}: transport failure ({exc})") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"{self.source_id}: HTTP {resp.status_code}")
        ranking = self._validate(resp, head)
        return _with_tail(query.id, self.source_id, ranking, tail)

    def _validate(self, resp: httpx.Response, head: list[str]) -> list[tuple[str, float]]:
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"{self.source_id}: reply is not JSON") from exc
        items = body.get("ranking") if isinstance(body, dict) else None
        if not isinstance(items, list):
            raise ProtocolError(f"{self.source_id}: reply lacks a 'ranking' list")
        out = []
        for item in items:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("id"), str)
                or not isinstance(item.get("score"), (int, float))
                or isinstance(item.get("score"), bool)
            ):
                raise ProtocolError(f"{self.source_id}: malformed ranking entry {item!r}")
            out.append((item["id"], float(item["score"])))
        ids = [pid for pid, _ in out]
        if len(ids) != len(head) or set(ids) != set(head):
            raise ProtocolError(f"{self.source_id}: ranking is not a permutation of the candidates")
        if any(b > a for (_, a), (_, b) in zip(out, out[1:])):
            raise ProtocolError(f"{self.source_id}: ranking scores increase")
        return out


def build_reranker(
    spec: RerankerSpec,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
) -> Reranker:
    if spec.kind == "in-process-bm25":
        if index is None:
            raise ValidationError(f"{spec.source_id}: in-process-bm25 needs an index")
        return Bm25Reranker(spec, index, params or Bm25Params())
    if spec.kind == "static-run":
        return StaticRunReranker(spec)
    return RemoteReranker(spec)


def rerank(
    spec: RerankerSpec | Reranker,
    query: Query,
    candidates: RankedList,
    corpus: Corpus,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
) -> RankedList:
    if len(candidates) == 0:
        raise ValidationError("cannot rerank an empty candidate list")
    r = build_reranker(spec, index, params) if isinstance(spec, RerankerSpec) else spec
    return r.rerank(query, candidates, corpus)


def fan_out(
    fleet: Sequence[RerankerSpec | Reranker],
    query: Query,
    candidates: RankedList,
    corpus: Corpus,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
) -> RunSet:
    """Run every reranker concurrently; failures are recorded, not raised.

    Each reranker gets its own deadline (``timeout`` seconds from submission).
    Raises FleetExhaustedError only when no reranker succeeds.
    """
    if not fleet:
        raise ValidationError("fleet is empty")
    if len(candidates) == 0:
        raise ValidationError("cannot rerank an empty candidate list")
    rerankers = [build_reranker(r, index, params) if isinstance(r, RerankerSpec) else r for r in fleet]
    ids = [r.source_id for r in rerankers]
    if len(set(ids)) != len(ids):
        raise ValidationError("reranker source_ids must be unique across the fleet")

    pool = ThreadPoolExecutor(max_workers=len(rerankers), thread_name_prefix="rerank")
    started = time.monotonic()
    futures = [(r, pool.submit(r.rerank, query, candidates, corpus)) for r in rerankers]
    results: list[RankedList] = []
    failures: list[tuple[str, str]] = []
    try:
        for r, fut in futures:
            remaining = max(0.0, started + r.timeout - time.monotonic())
            try:
                out = fut.result(timeout=remaining)
            except FutureTimeout:
                fut.cancel()
                failures.append((r.source_id, f"RerankTimeoutError: no result within {r.timeout}s"))
                continue
            except Exception as exc:
                failures.append((r.source_id, f"{type(exc).__name__}: {exc}"))
                continue
            problem = _check_permutation(out, candidates, r.source_id)
            if problem:
                failures.append((r.source_id, f"ProtocolError: {problem}"))
            else:
                results.append(out)
    finally:
        # Stalled workers are abandoned, not joined.
        pool.shutdown(wait=False, cancel_futures=True)

    for sid, err in failures:
        logger.warning("query %s: reranker %s failed: %s", query.id, sid, err)
    if not results:
        raise FleetExhaustedError(failures)
    results.sort(key=lambda c: c.source_id)
    failures.sort()
    return RunSet(query.id, results, failures)


def _check_permutation(out: RankedList, candidates: RankedList, source_id: str) -> str | None:
    if out.source_id != source_id:
        return f"output labelled {out.source_id!r}"
    if out.query_id != candidates.query_id:
        return f"output is for query {out.query_id!r}"
    if len(out) != len(candidates) or set(out.passage_ids) != set(candidates.passage_ids):
        return "output is not a permutation of the candidates"
    return None
