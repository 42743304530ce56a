"""Command line interface.

Report files written by the analysis commands:

* ``benchmark.txt``: columns ``source  ndcg@k  map@k  mrr@k``, one row per
  reranker, then ``selected-<mode>`` and ``best-oracle``.
* ``frequency.tsv``: columns ``source_id<TAB>proportion``.
* ``bias.tsv``: columns ``source_id<TAB>selections<TAB>rate``.
* ``cost.tsv``: columns ``method<TAB>units<TAB>seconds``.

Each has a ``.json`` twin for plotting.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import click

from rankfleet.benchmark import (
    analyze_bias,
    analyze_frequency,
    frequency_table,
    read_records,
    run_benchmark,
)
from rankfleet.bm25 import build_index, retrieve
from rankfleet.config import MODES, PipelineConfig, load_config
from rankfleet.corpus_io import Query, parse_corpus, parse_queries, write_run
from rankfleet.cost import METHODS, CostParams, estimate_cost
from rankfleet.evaluator.prompts import KINDS
from rankfleet.evaluator.strategies import Strategy
from rankfleet.metrics import METRICS
from rankfleet.pipeline import Pipeline, query_id_for_text


def _apply_overrides(cfg: PipelineConfig, output_dir, mode, strategy, metric, k) -> PipelineConfig:
    changes = {}
    if output_dir:
        changes["output_dir"] = output_dir
    if mode:
        changes["mode"] = mode
    if strategy or metric or k:
        kind = strategy or cfg.strategy.kind
        passage = not kind.startswith("rank-")
        agg = (metric or cfg.strategy.aggregation_metric) if passage else None
        changes["strategy"] = Strategy(
            kind, agg, k or cfg.strategy.eval_depth, cfg.strategy.max_passage_tokens
        )
    if metric:
        changes["oracle_metric"] = metric
    if k:
        changes["oracle_k"] = k
    return dataclasses.replace(cfg, **changes)


def common_options(f):
    f = click.option("--k", type=int, default=None, help="Evaluation cutoff (eval depth / metric @k).")(f)
    f = click.option("--metric", type=click.Choice(METRICS), default=None, help="Aggregation / oracle metric.")(f)
    f = click.option("--strategy", type=click.Choice(KINDS), default=None, help="LLM prompting strategy.")(f)
    f = click.option("--mode", type=click.Choice(MODES), default=None, help="Selection mode.")(f)
    f = click.option("--output-dir", type=click.Path(file_okay=False), default=None)(f)
    f = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)(f)
    return f


def _load(config_path, output_dir=None, mode=None, strategy=None, metric=None, k=None) -> PipelineConfig:
    return _apply_overrides(load_config(config_path), output_dir, mode, strategy, metric, k)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Retrieve with BM25, rerank with a fleet, keep the best ranking per query."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@common_options
def index(config_path, output_dir, mode, strategy, metric, k):
    """Build the BM25 index and save it to OUTPUT_DIR/index.json."""
    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    idx = build_index(parse_corpus(cfg.corpus_path))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    idx.save(out / "index.json")
    click.echo(f"indexed {idx.doc_count} passages, {len(idx.postings)} terms -> {out / 'index.json'}")


@main.command("retrieve")
@common_options
def retrieve_cmd(config_path, output_dir, mode, strategy, metric, k):
    """Write first-stage BM25 results for every query to OUTPUT_DIR/first_stage.run."""
    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    corpus = parse_corpus(cfg.corpus_path)
    idx = build_index(corpus)
    queries = parse_queries(cfg.queries_path, cfg.queries_format)
    lists = [rl for rl in (retrieve(idx, cfg.bm25, q) for q in queries) if len(rl)]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_run(lists, out / "first_stage.run")
    click.echo(f"wrote {len(lists)} rankings -> {out / 'first_stage.run'}")


@main.command("search")
@common_options
@click.option("--query", "query_text", required=True)
@click.option("--query-id", default=None)
def search_cmd(config_path, output_dir, mode, strategy, metric, k, query_text, query_id):
    """Run one query end to end and print the JSON result."""
    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    pipe = Pipeline.from_config(cfg)
    result = pipe.search(Query(query_id or query_id_for_text(query_text), query_text))
    click.echo(json.dumps(result.to_dict(), indent=2))


@main.command()
@common_options
def benchmark(config_path, output_dir, mode, strategy, metric, k):
    """Score every reranker, the configured selector and the oracle."""
    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    pipe = Pipeline.from_config(cfg)
    queries = parse_queries(cfg.queries_path, cfg.queries_format)
    report = run_benchmark(pipe, queries, k=cfg.oracle_k)
    report.write(cfg.output_dir)
    click.echo(report.table(), nl=False)


@main.group()
def analyze():
    """Offline analyses over benchmark output."""


@analyze.command("frequency")
@click.option("--details", type=click.Path(exists=True, dir_okay=False), required=True, help="details.jsonl from `benchmark`.")
@click.option("--metric", type=click.Choice(METRICS), default="ndcg")
@click.option("--k", type=int, default=None)
@click.option("--output-dir", type=click.Path(file_okay=False), default=None)
def analyze_frequency_cmd(details, metric, k, output_dir):
    """Share of queries on which each reranker is best."""
    report = analyze_frequency(read_records(details), metric, k)
    table = frequency_table(report)
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "frequency.tsv").write_text(table, encoding="utf-8")
        _write_json(out / "frequency.json", {"query_count": report.query_count, "proportions": report.proportions})
    click.echo(table, nl=False)


@analyze.command("bias")
@common_options
@click.option("--permutations", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--exhaustive", is_flag=True, help="Try every presentation order once.")
def analyze_bias_cmd(config_path, output_dir, mode, strategy, metric, k, permutations, seed, exhaustive):
    """Selection rates under shuffled candidate presentation orders."""
    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    pipe = Pipeline.from_config(cfg)
    cases = []
    for q in parse_queries(cfg.queries_path, cfg.queries_format):
        first = pipe.first_stage(q)
        if len(first):
            cases.append((q, pipe.rerank(q, first)))
    report = analyze_bias(pipe.select, cases, permutations, seed, exhaustive)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bias.tsv").write_text(report.table(), encoding="utf-8")
    _write_json(out / "bias.json", report.to_dict())
    click.echo(report.table(), nl=False)


@main.command()
@click.option("--method", type=click.Choice(METHODS + ("all",)), default="all", show_default=True)
@click.option("--lp", "avg_passage_len", type=float, default=100.0, show_default=True, help="Average passage length (tokens).")
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--n-ranks", type=int, default=8, show_default=True)
@click.option("--n-step", type=int, default=10, show_default=True)
@click.option("--s-windows", type=int, default=20, show_default=True)
@click.option("--n", "n_candidates", type=int, default=100, show_default=True)
@click.option("--t-llm", type=float, default=1.0, show_default=True, help="Seconds per token-unit.")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None)
def cost(method, output_dir, **params):
    """Inference cost per selection method (token-units and seconds)."""
    p = CostParams(**params)
    methods = METHODS if method == "all" else (method,)
    rows = [estimate_cost(p, m) for m in methods]
    table = "method\tunits\tseconds\n" + "".join(f"{r.method}\t{r.units:g}\t{r.seconds:g}\n" for r in rows)
    if output_dir:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "cost.tsv").write_text(table, encoding="utf-8")
        _write_json(out / "cost.json", {"params": dataclasses.asdict(p), "rows": [dataclasses.asdict(r) for r in rows]})
    click.echo(table, nl=False)


@main.command("serve")
@common_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
def serve_cmd(config_path, output_dir, mode, strategy, metric, k, host, port):
    """Serve POST /search and GET /healthz."""
    from rankfleet.service import serve

    cfg = _load(config_path, output_dir, mode, strategy, metric, k)
    serve(Pipeline.from_config(cfg), host, port)


if __name__ == "__main__":
    main()
