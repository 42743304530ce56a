"""HTTP front end.

``POST /search`` with ``{"query_text": str, "query_id": str (optional)}``
returns::

    {"query_id", "winner_source", "strategy", "ranking": [{"id", "score"}],
     "per_candidate_scores", "llm_calls", "no_candidates", "failures"}

``GET /healthz`` answers ``{"status": "ok"}``. Errors use the body
``{"error": {"code": str, "message": str}}``.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from rankfleet.corpus_io import Query
from rankfleet.errors import PipelineError, ValidationError
from rankfleet.pipeline import Pipeline, query_id_for_text


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


def create_app(pipeline: Pipeline) -> FastAPI:
    app = FastAPI(title="rankfleet")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/search")
    async def search(request: Request):
        try:
            body = json.loads(await request.body())
        except ValueError:
            return _error(400, "invalid_json", "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "invalid_body", "request body must be a JSON object")
        text = body.get("query_text")
        if text is None:
            return _error(400, "missing_field", "query_text is required")
        if not isinstance(text, str) or not text.strip():
            return _error(400, "invalid_field", "query_text must be a non-empty string")
        qid = body.get("query_id") or query_id_for_text(text)
        if not isinstance(qid, str):
            return _error(400, "invalid_field", "query_id must be a string")
        try:
            # pipeline work is blocking; keep the event loop free
            result = await run_in_threadpool(pipeline.search, Query(qid, text))
        except PipelineError as exc:
            return _error(502, f"{exc.stage}_failed", str(exc))
        except ValidationError as exc:
            return _error(400, "invalid_request", str(exc))
        return result.to_dict()

    return app


def serve(pipeline: Pipeline, host: str = "127.0.0.1", port: int = 8080) -> None:
    import uvicorn

    # uvicorn drains in-flight requests on SIGINT/SIGTERM before exiting.
    uvicorn.run(create_app(pipeline), host=host, port=port, timeout_graceful_shutdown=30)
