import json
from pathlib import Path

import pytest

from rankfleet.corpus_io import Passage, Query
from rankfleet.errors import ValidationError
from rankfleet.evaluator.prompts import KINDS, render_prompt

GOLDEN = Path(__file__).parent / "golden"
Q = Query("q", "{{query}}")
P = Passage("p", "{{passage}}")


def numbered(n):
    return [Passage(f"p{i}", f"{{{{passage_{i}}}}}") for i in range(1, n + 1)]


@pytest.mark.parametrize(
    "kind, name",
    [
        ("passage-pointwise-simple", "passage_pointwise_simple.txt"),
        ("passage-pointwise-complex", "passage_pointwise_complex.txt"),
        ("passage-relwise", "passage_relwise.txt"),
    ],
)
def test_passage_templates_byte_exact(kind, name):
    assert render_prompt(kind, Q, [P]).encode() == (GOLDEN / name).read_bytes()


def test_chat_template_messages():
    expected = json.loads((GOLDEN / "passage_pointwise_chat.json").read_text())
    assert render_prompt("passage-pointwise-chat", Q, [P]) == expected


def test_rank_pointwise_byte_exact():
    out = render_prompt("rank-pointwise", Q, numbered(10))
    assert out.encode() == (GOLDEN / "rank_pointwise.txt").read_bytes()
    assert out.endswith("The score of the rank is:")


def test_rank_pairwise_byte_exact():
    out = render_prompt("rank-pairwise", Q, numbered(2), pair=numbered(2))
    assert out.encode() == (GOLDEN / "rank_pairwise.txt").read_bytes()


def test_relwise_ending():
    assert render_prompt("passage-relwise", Query("q", "x"), [Passage("p", "y")]).endswith(
        "Does the passage answer the query?\nAnswer:"
    )


def test_short_rank_states_its_length():
    out = render_prompt("rank-pointwise", Q, numbered(3))
    assert "the rank of 3 passages" in out
    assert "<3> {{passage_3}}\n\nThe search query" in out


def test_empty_passage_renders():
    out = render_prompt("passage-pointwise-simple", Query("q", "what"), [Passage("p", "")])
    assert "Passage: \n" in out


def test_title_is_included():
    out = render_prompt("passage-relwise", Q, [Passage("p", "body", title="Head")])
    assert "Passage: Head body\n" in out


def test_rendering_is_deterministic():
    for kind in KINDS:
        pair = numbered(2) if kind == "rank-pairwise" else None
        ps = numbered(2) if kind.startswith("rank") else [P]
        assert render_prompt(kind, Q, ps, pair=pair) == render_prompt(kind, Q, ps, pair=pair)


def test_braces_in_text_survive():
    out = render_prompt("passage-relwise", Query("q", "{passage}"), [Passage("p", "{query}")])
    assert "Passage: {query}\nQuery: {passage}\n" in out


def test_passage_clipping():
    out = render_prompt("passage-relwise", Q, [Passage("p", "a b c d e")], max_passage_tokens=2)
    assert "Passage: a b\n" in out


@pytest.mark.parametrize(
    "kind, passages, pair",
    [
        ("passage-relwise", [], None),
        ("passage-relwise", [P, P], None),
        ("passage-pointwise-simple", [P], [P]),
        ("rank-pointwise", [], None),
        ("rank-pointwise", numbered(11), None),
        ("rank-pointwise", numbered(2), numbered(2)),
        ("rank-pairwise", numbered(2), None),
        ("rank-pairwise", numbered(2), []),
        ("nonsense", [P], None),
    ],
)
def test_arity_errors(kind, passages, pair):
    with pytest.raises(ValidationError):
        render_prompt(kind, Q, passages, pair=pair)
