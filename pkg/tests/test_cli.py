import json

import pytest
from click.testing import CliRunner

from helpers import write_toy_project
from rankfleet.bm25 import InvertedIndex
from rankfleet.cli import main
from rankfleet.corpus_io import parse_run


@pytest.fixture
def project(tmp_path):
    return write_toy_project(tmp_path)


def run(*args):
    result = CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


def test_index_writes_versioned_snapshot(project, tmp_path):
    out = run("index", "--config", project)
    assert "indexed 12 passages" in out
    raw = json.loads((tmp_path / "out" / "index.json").read_text())
    assert raw["format"] == "rankfleet-bm25-index" and raw["version"] == 1
    assert InvertedIndex.load(tmp_path / "out" / "index.json").doc_count == 12


def test_retrieve_writes_run(project, tmp_path):
    run("retrieve", "--config", project, "--output-dir", tmp_path / "r")
    lists = parse_run(tmp_path / "r" / "first_stage.run")
    assert [rl.query_id for rl in lists] == ["t1", "t2", "t3"]
    assert lists[0].source_id == "bm25-first-stage"


def test_search_json(project):
    out = json.loads(run("search", "--config", project, "--query", "bicycle history", "--query-id", "t2"))
    assert out["winner_source"] == "perfect"
    assert out["strategy"] == "oracle-ndcg@10"


def test_search_metric_override(project):
    out = json.loads(run("search", "--config", project, "--query", "bicycle history", "--query-id", "t2", "--metric", "mrr", "--k", "5"))
    assert out["strategy"] == "oracle-mrr@5"


def test_benchmark_files(project, tmp_path):
    out = run("benchmark", "--config", project)
    assert "selected-oracle" in out and "best-oracle" in out
    d = tmp_path / "out"
    report = json.loads((d / "benchmark.json").read_text())
    assert report["rows"]["selected-oracle"] == report["rows"]["best-oracle"]
    assert len((d / "details.jsonl").read_text().splitlines()) == 4


def test_analyze_frequency(project, tmp_path):
    run("benchmark", "--config", project)
    out = run("analyze", "frequency", "--details", tmp_path / "out" / "details.jsonl", "--output-dir", tmp_path / "f")
    assert out.startswith("source_id\tproportion\n")
    freq = json.loads((tmp_path / "f" / "frequency.json").read_text())
    assert freq["query_count"] == 3
    assert abs(sum(freq["proportions"].values()) - 1) < 1e-9


def test_analyze_bias_exhaustive(project, tmp_path):
    run("analyze", "bias", "--config", project, "--exhaustive")
    bias = json.loads((tmp_path / "out" / "bias.json").read_text())
    assert bias["permutation_trials"] == 6
    assert bias["max_rate_delta"] == 0.0  # oracle selection ignores presentation order
    assert (tmp_path / "out" / "bias.tsv").exists()


def test_cost_table(tmp_path):
    out = run("cost", "--output-dir", tmp_path)
    rows = dict(line.split("\t")[:2] for line in out.splitlines()[1:])
    assert rows == {"passage-based": "100", "rank-pointwise": "1000", "rank-pairwise": "8000", "rankgpt": "20000", "listt5": "16643.9"}
    assert json.loads((tmp_path / "cost.json").read_text())["params"]["n_ranks"] == 8


def test_cost_single_method():
    assert run("cost", "--method", "rank-pairwise", "--n-ranks", "4").splitlines()[1] == "rank-pairwise\t4000\t4000"


def test_llm_mode_requires_profile(tmp_path):
    cfg = write_toy_project(tmp_path, mode="llm", extra={"llm": None})
    result = CliRunner().invoke(main, ["search", "--config", str(cfg), "--query", "x"])
    assert result.exit_code != 0


def test_help_lists_commands():
    out = run("--help")
    for cmd in ("index", "retrieve", "search", "benchmark", "analyze", "cost", "serve"):
        assert cmd in out
