"""Thread-safe judgment cache with optional append-only JSONL persistence."""

from __future__ import annotations

import json
import threading
from concurrent.futures import Future
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

CacheKey = tuple[str, str, str, str]  # model, strategy kind, query id, passage id


@dataclass(frozen=True)
class RelevanceJudgment:
    query_id: str
    passage_id: str
    grade: int
    scale_max: int
    raw_reply: str
    parsed: bool = True

    def __post_init__(self):
        if not 0 <= self.grade <= self.scale_max:
            raise ValueError(f"grade {self.grade} outside 0..{self.scale_max}")


class JudgmentCache:
    """Each key is written at most once.

    Concurrent requests for the same missing key are coalesced: one caller
    computes, the others wait for its result.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[CacheKey, RelevanceJudgment] = {}
        self._inflight: dict[CacheKey, Future] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                key = (rec.pop("model"), rec.pop("kind"), rec["query_id"], rec["passage_id"])
                # first write wins, matching the write-once rule
                self._entries.setdefault(key, RelevanceJudgment(**rec))

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: CacheKey) -> bool:
        return key in self._entries

    def get(self, key: CacheKey) -> RelevanceJudgment | None:
        return self._entries.get(key)

    def get_or_compute(
        self, key: CacheKey, compute: Callable[[], RelevanceJudgment]
    ) -> tuple[RelevanceJudgment, bool]:
        """Return ``(judgment, fresh)``; ``fresh`` is True only for the caller that computed it."""
        with self._lock:
            hit = self._entries.get(key)
            if hit is not None:
                return hit, False
            fut = self._inflight.get(key)
            owner = fut is None
            if owner:
                fut = Future()
                self._inflight[key] = fut
        if not owner:
            return fut.result(), False
        try:
            judgment = compute()
        except BaseException as exc:
            with self._lock:
                del self._inflight[key]
            fut.set_exception(exc)
            raise
        with self._lock:
            self._entries[key] = judgment
            del self._inflight[key]
            self._append(key, judgment)
        fut.set_result(judgment)
        return judgment, True

    def _append(self, key: CacheKey, judgment: RelevanceJudgment):
        if self.path is None:
            return
        rec = {"model": key[0], "kind": key[1], **asdict(judgment)}
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
