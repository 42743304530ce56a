"""Prompt templates for the six evaluation instructions.

Template text is kept verbatim, including its original spelling and grammar,
because evaluator behaviour was measured with exactly these strings. Only the
``{query}``/``{passage}``/``{count}`` slots and the numbered passage blocks
vary between renders.
"""

from __future__ import annotations

import re
from typing import Sequence

from rankfleet.corpus_io import Passage, Query
from rankfleet.errors import ValidationError

PASSAGE_POINTWISE_SIMPLE = """\
Given a passage and a query, rate the relevancy level between the passage and the query from 0 to 5, where a higher score indicates larger relevancy.

Passage: {passage}

Query: {query}

Please rate the relevancy level between the passage and the query from 0 to 5.

Answer:"""

PASSAGE_POINTWISE_COMPLEX = """\
This is the automatic relevancy evaluator of a retriever:
- Consider an input query and a corresponding passage
- Evaluate the passage according to one important quality:
1. Relevancy (0-5): a desired passage quality that requires the passage to include the answer of the query.
- All ratings are between 0-5 where 0 is very poor and 5 is very good.
- The evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
1. Query Understanding - Read the query carefully and understand the request of the query.
2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
3. Assign a score for Relevancy on a scale of 0 to 5, where 0 is the lowest (hardest to find the answer of the query) and 5 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria.

Given the passage and query, and prompt you to provide an evaluation. Respond with your integer 0-5 score first, then a rationale.

Passage: {passage}
Query: {query}
Relevancy Score:"""

CHAT_SYSTEM = """\
You are the automatic relevancy evaluator of a retriever:
- You consider an input query and a corresponding passage
- You evaluate the passage according to one important quality:
1. Relevancy (0-5): a desired passage quality that requires the passage to include the answer of the query.
- All ratings are between 0-5 where 0 is very poor and 5 is very good.
- Your evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
1. Query Understanding - Read the query carefully and understand the request of the query.
2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
3. Assign a score for Relevancy on a scale of 0 to 5, where 0 is the lowest (hardest to find the answer of the query) and 5 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria."""

CHAT_USER_INTRO = (
    "I will provide you with both the passage and query, and prompt you to provide an evaluation. "
    "Response with your integer 0-5 score first, then a rationale."
)

CHAT_ASSISTANT_ACK = "Okay, please provide the passage and query."

CHAT_USER_PAYLOAD = """\
Passage: {passage}
Query: {query}
Relevancy Score:"""

PASSAGE_RELWISE = """\
Given a passage and a query, predict whether the passage includes an answer to the query by producing either 'Yes' or 'No'.

Passage: {passage}
Query: {query}
Does the passage answer the query?
Answer:"""

RANK_POINTWISE = """\
This is the automatic relevancy evaluator of a retriever:
- Consider an input query and a rank of corresponding passages retrieved by the retriever
- Evaluate the rank of passages according to one important quality:
1. Passage Relevancy: a desired passage quality that requires the passage to include the answer of the query.
2. Rank Validity: a rank quality that increases the gain of passages ranked higher and reduce the loss of passages ranked lower
- All ratings are between 0-100 where 0 is very poor and 100 is very good.
- The evaluation should be critical and careful, and should closely match the ratings of experts. This evaluation is very important.
- Consider these aspects when evaluating:
1. Query Understanding - Read the query carefully and understand the request of the query.
2. Answer Finding - Read the passage and try finding the answer of the query from the passage.
3. Assign a overall score for Passage Relevancy and Rank Validity on a scale of 0 to 100, where 0 is the lowest (hardest to find the answer of the query) and 100 is the highest (easiest to find the answer of the query) based on the Evaluation Criteria.

The following is the rank of {count} passages, each indicated by number identifier <>. The passages are listed in descending order using identifiers, and the most relevant passages should be listed first.

{rank}

The search query is: {query}

Prompt you to provide an evaluation. Respond with your integer 0-100 score first, then a rationale.

The score of the rank is:"""

RANK_PAIRWISE = """\
This is RankEvaluator, an automatic evaluator that can evaluate the relevancy and quality of the assistants' ranked responses based on the query.

The following are two assistants' ranked responses, contained in the start and end identifier of respective assistant. In each ranked response, passages are listed in descending order using number identifiers <>, and the most relevant passages considered by respective assistant are listed first. I can evaluate the two ranked responsed based on their relevancy and quality to the query: {query}

[The Start of Assistant 1's Ranked Response]

{rank_1}

[The End of Assistant 1's Ranked Response]

[The Start of Assistant 2's Ranked Response]

{rank_2}

[The End of Assistant 2's Ranked Response]

The search query is: {query}

I will critically and carefully compare the quality of the above two assistants' ranked responses based on their relevancy to the search query. Select one assistant whose ranked response is more relevant and effective.

The more effective assistant is:"""

PASSAGE_KINDS = ("passage-pointwise-simple", "passage-pointwise-complex", "passage-pointwise-chat", "passage-relwise")
RANK_KINDS = ("rank-pointwise", "rank-pairwise")
KINDS = PASSAGE_KINDS + RANK_KINDS

_SLOT_RE = re.compile(r"\{(\w+)\}")


def _clip(text: str, max_tokens: int | None) -> str:
    if max_tokens is None:
        return text
    words = text.split()
    return text if len(words) <= max_tokens else " ".join(words[:max_tokens])


def _numbered(passages: Sequence[Passage], max_tokens: int | None) -> str:
    return "\n".join(f"<{i}> {_clip(p.indexed_text, max_tokens)}" for i, p in enumerate(passages, 1))


def _fill(template: str, **slots: str) -> str:
    return _SLOT_RE.sub(lambda m: slots[m.group(1)], template)


def render_prompt(
    kind: str,
    query: Query,
    passages: Sequence[Passage],
    pair: Sequence[Passage] | None = None,
    eval_depth: int = 10,
    max_passage_tokens: int | None = None,
):
    """Render the instruction for ``kind``.

    Passage-based kinds take exactly one passage. ``rank-pointwise`` takes one
    ranked list of between 1 and ``eval_depth`` passages, ``rank-pairwise``
    takes two (``passages`` is Assistant 1, ``pair`` is Assistant 2).
    ``passage-pointwise-chat`` returns a message list; everything else a string.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown strategy kind {kind!r}")
    q = query.text
    if kind in PASSAGE_KINDS:
        if len(passages) != 1 or pair is not None:
            raise ValidationError(f"{kind} renders exactly one passage, got {len(passages)}")
        p = _clip(passages[0].indexed_text, max_passage_tokens)
        if kind == "passage-pointwise-simple":
            return _fill(PASSAGE_POINTWISE_SIMPLE, passage=p, query=q)
        if kind == "passage-pointwise-complex":
            return _fill(PASSAGE_POINTWISE_COMPLEX, passage=p, query=q)
        if kind == "passage-relwise":
            return _fill(PASSAGE_RELWISE, passage=p, query=q)
        return [
            {"role": "system", "content": CHAT_SYSTEM},
            {"role": "user", "content": CHAT_USER_INTRO},
            {"role": "assistant", "content": CHAT_ASSISTANT_ACK},
            {"role": "user", "content": _fill(CHAT_USER_PAYLOAD, passage=p, query=q)},
        ]

    def check(ps, label):
        if ps is None or not 1 <= len(ps) <= eval_depth:
            n = 0 if ps is None else len(ps)
            raise ValidationError(f"{kind} needs 1..{eval_depth} passages for {label}, got {n}")

    check(passages, "the rank")
    if kind == "rank-pointwise":
        if pair is not None:
            raise ValidationError("rank-pointwise takes a single rank")
        return _fill(RANK_POINTWISE, count=str(len(passages)), rank=_numbered(passages, max_passage_tokens), query=q)
    check(pair, "the second rank")
    return _fill(
        RANK_PAIRWISE,
        query=q,
        rank_1=_numbered(passages, max_passage_tokens),
        rank_2=_numbered(pair, max_passage_tokens),
    )
