"""Fixture builders and mock endpoints shared across the test suite."""

from __future__ import annotations

import json
import random
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import httpx
import yaml

from rankfleet.corpus_io import Corpus, Passage, Qrels, Query, RankedList, write_run
from rankfleet.fleet import RunSet

WORDS = "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu nu xi omicron pi rho sigma tau".split()


def make_corpus(texts: dict[str, str]) -> Corpus:
    return Corpus(Passage(pid, text) for pid, text in texts.items())


def random_corpus(rng: random.Random, n_docs: int, vocab=WORDS, max_len: int = 12) -> Corpus:
    texts = {}
    for i in range(n_docs):
        n = rng.randint(0, max_len)
        texts[f"d{i:03d}"] = " ".join(rng.choice(vocab) for _ in range(n))
    return make_corpus(texts)


def ranked(query_id: str, source_id: str, pids) -> RankedList:
    n = len(pids)
    return RankedList(query_id, source_id, tuple((pid, float(n - i)) for i, pid in enumerate(pids)))


def synthetic_fleet(n_queries=100, n_rerankers=8, n_docs=30, seed=7):
    """Queries, a corpus with unique texts, graded qrels and one RunSet per query.

    Every reranker returns a random permutation of the same 30 candidates.
    """
    rng = random.Random(seed)
    corpus = make_corpus({f"p{i:03d}": f"passage number {i} text" for i in range(n_docs)})
    pids = sorted(corpus.passages)
    queries = [Query(f"q{j:03d}", f"query {j}") for j in range(n_queries)]
    grades = {}
    for q in queries:
        for pid in rng.sample(pids, rng.randint(0, 8)):
            grades[(q.id, pid)] = rng.randint(0, 5)
    runsets = {}
    for q in queries:
        cands = []
        for r in range(n_rerankers):
            order = pids[:]
            rng.shuffle(order)
            cands.append(ranked(q.id, f"r{r}", order))
        runsets[q.id] = RunSet(q.id, cands)
    return queries, corpus, Qrels(grades), runsets


_PASSAGE_RE = re.compile(r"Passage: (.*?)\n+Query:", re.DOTALL)


def prompt_text(request: httpx.Request) -> str:
    body = json.loads(request.content)
    return body["messages"][-1]["content"]


class EchoGradesLLM:
    """Chat-completions mock answering with the qrels grade of the passage shown."""

    def __init__(self, corpus: Corpus, qrels: Qrels, query_by_text: dict[str, str]):
        self.by_text = {corpus.text_of(pid): pid for pid in corpus.passages}
        self.qrels = qrels
        self.query_by_text = query_by_text
        self.calls = 0
        self.lock = threading.Lock()

    def __call__(self, request: httpx.Request) -> httpx.Response:
        with self.lock:
            self.calls += 1
        text = prompt_text(request)
        passage = _PASSAGE_RE.search(text).group(1)
        query = re.search(r"Query: (.*?)\n", text).group(1)
        grade = self.qrels.grade(self.query_by_text[query], self.by_text[passage])
        return chat_reply(f"{grade} - graded by mock")

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self)


def chat_reply(content: str, status: int = 200) -> httpx.Response:
    return httpx.Response(status, json={"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]})


class ScriptedCompleter:
    """In-process completer: maps a prompt to a reply with a function."""

    def __init__(self, fn):
        self.fn = fn
        self.prompts = []
        self.lock = threading.Lock()

    def complete(self, prompt):
        with self.lock:
            self.prompts.append(prompt)
        return self.fn(prompt)


class _RerankHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        path = self.path.strip("/")
        if path == "slow":
            time.sleep(self.server.stall_seconds)
        if path == "error":
            self.send_response(500)
            self.end_headers()
            return
        ids = [c["id"] for c in body["candidates"]]
        if path == "reverse":
            ids = ids[::-1]
        if path == "bogus":
            ids = ids[:-1]
        ranking = [{"id": pid, "score": float(len(ids) - i)} for i, pid in enumerate(ids)]
        data = json.dumps({"ranking": ranking}).encode()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass


class RerankServer:
    """Local HTTP reranker with /identity, /reverse, /slow, /error and /bogus routes."""

    def __init__(self, stall_seconds: float = 2.0):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _RerankHandler)
        self.httpd.daemon_threads = True
        self.httpd.stall_seconds = stall_seconds
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def url(self, route: str) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/{route}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


TOY_PASSAGES = {
    "d01": "solar panels convert sunlight into electricity",
    "d02": "wind turbines generate electricity from moving air",
    "d03": "sunlight is the energy source for solar power plants",
    "d04": "electricity prices rise in winter",
    "d05": "the history of the bicycle begins in the nineteenth century",
    "d06": "bicycle tyres need regular pressure checks",
    "d07": "mountain bicycle trails in the alps",
    "d08": "coffee beans are roasted before brewing",
    "d09": "brewing coffee with a french press",
    "d10": "tea and coffee both contain caffeine",
    "d11": "panels of experts discuss energy policy",
    "d12": "a quiet lake at dawn",
}
TOY_QUERIES = {"t1": "solar electricity sunlight", "t2": "bicycle history", "t3": "brewing coffee", "t4": "zzz unknown"}
TOY_QRELS = {
    ("t1", "d01"): 3, ("t1", "d03"): 2, ("t1", "d04"): 0,
    ("t2", "d05"): 3, ("t2", "d07"): 1,
    ("t3", "d09"): 3, ("t3", "d08"): 2, ("t3", "d10"): 1,
}


def write_toy_project(root, mode="oracle", extra=None):
    """Corpus, queries, qrels, two static runs and a config under ``root``.

    Reranker ``perfect`` orders candidates by qrels grade; ``worst`` does the
    reverse. Query t4 matches nothing in the first stage.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / "corpus.jsonl").write_text("".join(json.dumps({"_id": k, "text": v}) + "\n" for k, v in TOY_PASSAGES.items()))
    (root / "queries.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in TOY_QUERIES.items()))
    (root / "qrels.txt").write_text("".join(f"{q} 0 {p} {g}\n" for (q, p), g in TOY_QRELS.items()))
    perfect, worst = [], []
    for q in ("t1", "t2", "t3"):
        order = sorted(TOY_PASSAGES, key=lambda p: (-TOY_QRELS.get((q, p), -1), p))
        perfect.append(ranked(q, "perfect", order))
        worst.append(ranked(q, "worst", order[::-1]))
    write_run(perfect, root / "perfect.run")
    write_run(worst, root / "worst.run")
    cfg = {
        "corpus": "corpus.jsonl",
        "queries": "queries.tsv",
        "qrels": "qrels.txt",
        "mode": mode,
        "fleet": [
            {"source_id": "bm25", "kind": "in-process-bm25"},
            {"source_id": "perfect", "kind": "static-run", "run_path": "perfect.run"},
            {"source_id": "worst", "kind": "static-run", "run_path": "worst.run"},
        ],
        "strategy": {"kind": "passage-pointwise-simple", "aggregation_metric": "ndcg", "eval_depth": 10},
        "llm": {"endpoint": "http://llm.test/v1/chat/completions", "model_name": "echo", "backoff_base": 0.0},
        "output_dir": "out",
        "concurrency": 2,
    }
    cfg.update(extra or {})
    (root / "config.yaml").write_text(yaml.safe_dump(cfg, sort_keys=False))
    return root / "config.yaml"


def toy_echo_llm():
    corpus = make_corpus(TOY_PASSAGES)
    return EchoGradesLLM(corpus, Qrels(TOY_QRELS), {v: k for k, v in TOY_QUERIES.items()})
