"""Pipeline configuration loaded from a single YAML (or JSON) file.

String values may reference environment variables as ``${NAME}``; relative
paths resolve against the config file's directory. Example::

    corpus: data/corpus.jsonl
    queries: data/queries.tsv
    qrels: data/qrels.txt
    mode: llm
    bm25: {k1: 0.9, b: 0.4, top_k: 100}
    fleet:
      - {source_id: bm25, kind: in-process-bm25}
      - {source_id: monot5, kind: static-run, run_path: runs/monot5.run}
      - {source_id: gtr, kind: remote, endpoint: "${GTR_URL}", timeout: 30}
    strategy: {kind: passage-pointwise-complex, aggregation_metric: ndcg, eval_depth: 10}
    llm:
      endpoint: http://localhost:8000/v1/chat/completions
      model_name: llama3-70b
      credentials_env: LLM_API_KEY
    output_dir: out
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from rankfleet.bm25 import Bm25Params
from rankfleet.errors import ValidationError
from rankfleet.evaluator.client import LlmProfile
from rankfleet.evaluator.strategies import Strategy
from rankfleet.fleet import RerankerSpec

MODES = ("oracle", "llm")
_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class PipelineConfig:
    corpus_path: str | None = None
    queries_path: str | None = None
    qrels_path: str | None = None
    queries_format: str = "tsv"
    bm25: Bm25Params = field(default_factory=Bm25Params)
    fleet: tuple[RerankerSpec, ...] = ()
    strategy: Strategy = field(default_factory=lambda: Strategy("passage-pointwise-complex"))
    llm: LlmProfile | None = None
    mode: str = "oracle"
    output_dir: str = "out"
    oracle_metric: str = "ndcg"
    oracle_k: int = 10
    cache_path: str | None = None
    concurrency: int = 4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "oracle" and self.qrels_path is None:
            raise ValidationError("oracle mode requires qrels")
        if self.mode == "llm" and self.llm is None:
            raise ValidationError("llm mode requires an llm profile")
        ids = [s.source_id for s in self.fleet]
        if len(set(ids)) != len(ids):
            raise ValidationError("reranker source_ids must be unique")

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _interpolate(value):
    if isinstance(value, str):
        def sub(m):
            name = m.group(1)
            if name not in os.environ:
                raise ValidationError(f"environment variable {name} is not set")
            return os.environ[name]

        return _ENV_RE.sub(sub, value)
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    return value


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> PipelineConfig:
    raw = _interpolate(dict(raw))
    base = Path(base_dir)

    def path(key):
        v = raw.get(key)
        if v is None:
            return None
        p = Path(v)
        return str(p if p.is_absolute() else base / p)

    fleet = []
    for item in raw.get("fleet", []):
        item = dict(item)
        if item.get("run_path"):
            p = Path(item["run_path"])
            item["run_path"] = str(p if p.is_absolute() else base / p)
        fleet.append(RerankerSpec(**item))
    llm = raw.get("llm")
    cache = raw.get("cache_path")
    return PipelineConfig(
        corpus_path=path("corpus"),
        queries_path=path("queries"),
        qrels_path=path("qrels"),
        queries_format=raw.get("queries_format", "tsv"),
        bm25=Bm25Params(**raw.get("bm25", {})),
        fleet=tuple(fleet),
        strategy=Strategy(**raw["strategy"]) if "strategy" in raw else Strategy("passage-pointwise-complex"),
        llm=LlmProfile(**llm) if llm else None,
        mode=raw.get("mode", "oracle"),
        output_dir=path("output_dir") or "out",
        oracle_metric=raw.get("oracle_metric", "ndcg"),
        oracle_k=int(raw.get("oracle_k", 10)),
        cache_path=path("cache_path") if cache else None,
        concurrency=int(raw.get("concurrency", 4)),
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    return config_from_dict(raw, path.parent)
