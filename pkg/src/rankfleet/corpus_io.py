"""Readers and writers for queries, corpora, qrels and TREC run files.

Everything returned here is immutable once loaded, so parsed objects can be
shared freely between threads.
"""

from __future__ import annotations

import json
import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from rankfleet.errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


def _read_lines(path: str | Path) -> list[str]:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        # Report the line holding the bad byte.
        line = data[: exc.start].count(b"\n") + 1
        raise ParseError(f"invalid UTF-8 ({exc.reason})", str(path), line) from exc
    return text.splitlines()


@dataclass(frozen=True)
class Query:
    id: str
    text: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("query id must be non-empty")
        if not self.text:
            raise ValidationError(f"query {self.id!r} has empty text")


@dataclass(frozen=True)
class Passage:
    id: str
    text: str
    title: str | None = None

    @property
    def indexed_text(self) -> str:
        if self.title:
            return f"{self.title} {self.text}"
        return self.text


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    doc_lengths: Mapping[str, int]
    avgdl: float

    @classmethod
    def from_passages(cls, passages: Iterable[Passage]) -> "CorpusStats":
        lengths = {p.id: len(tokenize(p.indexed_text)) for p in passages}
        n = len(lengths)
        avgdl = sum(lengths.values()) / n if n else 0.0
        return cls(n, MappingProxyType(lengths), avgdl)


class Corpus:
    """Id-keyed passage collection with its length statistics."""

    def __init__(self, passages: Iterable[Passage]):
        table: dict[str, Passage] = {}
        for p in passages:
            if not p.id:
                raise ValidationError("passage id must be non-empty")
            if p.id in table:
                raise ValidationError(f"duplicate passage id {p.id!r}")
            table[p.id] = p
        self._passages = MappingProxyType(table)
        self.stats = CorpusStats.from_passages(table.values())

    @property
    def passages(self) -> Mapping[str, Passage]:
        return self._passages

    def __len__(self) -> int:
        return len(self._passages)

    def __iter__(self):
        return iter(self._passages.values())

    def __contains__(self, pid: str) -> bool:
        return pid in self._passages

    def __getitem__(self, pid: str) -> Passage:
        return self._passages[pid]

    def text_of(self, pid: str) -> str:
        return self._passages[pid].indexed_text


class Qrels:
    """Graded relevance judgments; any unlisted pair has grade 0."""

    def __init__(self, grades: Mapping[tuple[str, str], int] | None = None):
        by_query: dict[str, dict[str, int]] = {}
        for (qid, pid), g in (grades or {}).items():
            if not isinstance(g, int) or isinstance(g, bool):
                raise ValidationError(f"grade for ({qid}, {pid}) must be an integer")
            if g < 0:
                raise ValidationError(f"negative grade {g} for ({qid}, {pid})")
            by_query.setdefault(qid, {})[pid] = g
        self._by_query = {q: MappingProxyType(d) for q, d in by_query.items()}

    def grade(self, query_id: str, passage_id: str) -> int:
        return self._by_query.get(query_id, {}).get(passage_id, 0)

    def for_query(self, query_id: str) -> Mapping[str, int]:
        return self._by_query.get(query_id, MappingProxyType({}))

    def has_query(self, query_id: str) -> bool:
        return query_id in self._by_query

    @property
    def query_ids(self) -> list[str]:
        return list(self._by_query)

    @property
    def max_grade(self) -> int:
        return max((g for d in self._by_query.values() for g in d.values()), default=0)

    def __len__(self) -> int:
        return sum(len(d) for d in self._by_query.values())


@dataclass(frozen=True)
class RankedList:
    """One source's ordered ranking for one query.

    Entries are ``(passage_id, score)`` pairs with non-increasing scores and
    unique passage ids.
    """

    query_id: str
    source_id: str
    entries: tuple[tuple[str, float], ...] = field(default=())

    def __post_init__(self):
        entries = tuple((str(pid), float(score)) for pid, score in self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        prev = None
        for pid, score in entries:
            if pid in seen:
                raise ValidationError(
                    f"passage {pid!r} repeated in ranking {self.source_id}/{self.query_id}"
                )
            seen.add(pid)
            if prev is not None and score > prev:
                raise ValidationError(
                    f"scores increase at {pid!r} in ranking {self.source_id}/{self.query_id}"
                )
            prev = score

    @property
    def passage_ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def top(self, k: int) -> list[str]:
        return [pid for pid, _ in self.entries[:k]]

    def __len__(self) -> int:
        return len(self.entries)

    def with_source(self, source_id: str) -> "RankedList":
        return RankedList(self.query_id, source_id, self.entries)


# --------------------------------------------------------------------------
# parsers


def parse_queries(path: str | Path, format: str = "tsv") -> list[Query]:
    if format == "tsv":
        queries = _parse_tsv_queries(path)
    elif format == "trec-topics":
        queries = _parse_trec_topics(path)
    else:
        raise ValueError(f"unknown query format {format!r}")
    seen = set()
    for q in queries:
        if q.id in seen:
            raise ValidationError(f"duplicate query id {q.id!r} in {path}")
        seen.add(q.id)
    return queries


def _parse_tsv_queries(path) -> list[Query]:
    out = []
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 tab-separated fields, got {len(parts)}", str(path), lineno)
        qid, text = parts[0].strip(), parts[1].strip()
        if not qid or not text:
            raise ParseError("empty query id or text", str(path), lineno)
        out.append(Query(qid, text))
    return out


_TOPIC_TAG = re.compile(r"^<(num|title|desc|narr)>\s*(.*)$", re.IGNORECASE)


def _parse_trec_topics(path) -> list[Query]:
    # Classic <top>/<num>/<title> layout; title text may continue on the next lines.
    out = []
    qid = title = None
    current = None
    start = 0
    for lineno, raw in enumerate(_read_lines(path), 1):
        line = raw.strip()
        low = line.lower()
        if low == "<top>":
            if qid is not None or current is not None:
                raise ParseError("nested <top>", str(path), lineno)
            qid, title, current, start = None, None, "top", lineno
            continue
        if low == "</top>":
            if current is None:
                raise ParseError("</top> without <top>", str(path), lineno)
            if not qid or not title:
                raise ParseError("topic missing <num> or <title>", str(path), start)
            out.append(Query(qid, " ".join(title.split())))
            qid = title = current = None
            continue
        m = _TOPIC_TAG.match(line)
        if m:
            if current is None:
                raise ParseError(f"<{m.group(1)}> outside <top>", str(path), lineno)
            tag, rest = m.group(1).lower(), m.group(2)
            current = tag
            if tag == "num":
                qid = re.sub(r"^number:\s*", "", rest, flags=re.IGNORECASE).strip()
            elif tag == "title":
                title = rest.strip()
            continue
        if current == "title" and line:
            title = f"{title} {line}".strip()
    if current is not None:
        raise ParseError("unterminated <top>", str(path), start)
    return out


def parse_corpus(path: str | Path) -> Corpus:
    """Read a JSON-lines corpus with ``_id``, optional ``title`` and ``text``."""
    passages = []
    seen = set()
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed record ({exc.msg})", str(path), lineno) from exc
        if not isinstance(rec, dict):
            raise ParseError("record is not an object", str(path), lineno)
        pid, text, title = rec.get("_id"), rec.get("text"), rec.get("title")
        if not isinstance(pid, str) or not pid:
            raise ParseError("missing or non-string _id", str(path), lineno)
        if not isinstance(text, str):
            raise ParseError("missing or non-string text", str(path), lineno)
        if title is not None and not isinstance(title, str):
            raise ParseError("non-string title", str(path), lineno)
        if pid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate _id {pid!r}")
        seen.add(pid)
        passages.append(Passage(pid, text, title or None))
    return Corpus(passages)


def parse_qrels(path: str | Path) -> Qrels:
    grades: dict[tuple[str, str], int] = {}
    for lineno, line in enumerate(_read_lines(path), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ParseError(f"expected 4 columns, got {len(parts)}", str(path), lineno)
        qid, _iteration, pid, raw = parts
        try:
            grade = int(raw)
        except ValueError as exc:
            raise ParseError(f"non-integer grade {raw!r}", str(path), lineno) from exc
        if grade < 0:
            raise ValidationError(f"{path}:{lineno}: negative grade {grade}")
        grades[(qid, pid)] = grade
    return Qrels(grades)


class RunRepairWarning(UserWarning):
    """Emitted when run-file scores disagree with the rank column."""

    def __init__(self, count: int, path: str):
        self.count = count
        super().__init__(f"{path}: re-sorted {count} ranking(s) whose scores disagreed with ranks")


def parse_run(path: str | Path) -> list[RankedList]:
    """Parse a 6-column TREC run file into one RankedList per (query, tag).

    Lists whose scores are not non-increasing in rank order are re-sorted by
    score (rank breaks ties) and counted in a single ``RunRepairWarning``.
    """
    rows: dict[tuple[str, str], list[tuple[int, str, float]]] = {}
    seen: set[tuple[str, str, str]] = set()
    for lineno, line in enumerate(_read_lines(path), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise ParseError(f"expected 6 columns, got {len(parts)}", str(path), lineno)
        qid, _q0, pid, raw_rank, raw_score, tag = parts
        try:
            rank = int(raw_rank)
            score = float(raw_score)
        except ValueError as exc:
            raise ParseError(f"bad rank or score ({exc})", str(path), lineno) from exc
        if (qid, tag, pid) in seen:
            raise ValidationError(f"{path}:{lineno}: passage {pid!r} repeated for query {qid!r} tag {tag!r}")
        seen.add((qid, tag, pid))
        rows.setdefault((qid, tag), []).append((rank, pid, score))

    lists = []
    repaired = 0
    for (qid, tag), items in rows.items():
        items.sort(key=lambda r: r[0])
        ranks = [r for r, _, _ in items]
        if ranks != list(range(1, len(items) + 1)):
            raise ValidationError(f"{path}: ranks for query {qid!r} tag {tag!r} are not 1..{len(items)}")
        scores = [s for _, _, s in items]
        if any(b > a for a, b in zip(scores, scores[1:])):
            repaired += 1
            items.sort(key=lambda r: (-r[2], r[0]))
        lists.append(RankedList(qid, tag, tuple((pid, s) for _, pid, s in items)))
    if repaired:
        logger.warning("%s: repaired %d ranking(s)", path, repaired)
        warnings.warn(RunRepairWarning(repaired, str(path)), stacklevel=2)
    return lists


def format_run(lists: Sequence[RankedList]) -> str:
    lines = []
    for rl in lists:
        for rank, (pid, score) in enumerate(rl.entries, 1):
            lines.append(f"{rl.query_id} Q0 {pid} {rank} {score:.6f} {rl.source_id}\n")
    return "".join(lines)


def write_run(lists: Sequence[RankedList], path: str | Path) -> None:
    Path(path).write_text(format_run(lists), encoding="utf-8")
