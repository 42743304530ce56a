import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankfleet.evaluator.parsing import parse_graded_reply, parse_pairwise_reply, parse_yesno_reply


@pytest.mark.parametrize(
    "reply, scale, expected",
    [
        ("4", 5, 4),
        ("Relevancy Score: 3. The passage mentions it.", 5, 3),
        ("  0 - nothing relevant", 5, 0),
        ("7 is too high, so 5", 5, 5),
        ("score 2.5", 5, None),
        ("no digits here", 5, None),
        ("", 5, None),
        ("85/100", 100, 85),
        ("rated v2 then 1", 5, 1),
        ("101", 100, None),
    ],
)
def test_graded(reply, scale, expected):
    assert parse_graded_reply(reply, scale) == expected


@pytest.mark.parametrize(
    "reply, expected",
    [("Yes", 1), ("no.", 0), (" YES, it does", 1), ("Answer: No", 0), ("yesterday", None), ("nothing", None), ("", None)],
)
def test_yesno(reply, expected):
    assert parse_yesno_reply(reply) == expected


@pytest.mark.parametrize(
    "reply, expected",
    [
        ("Assistant 2", 2),
        ("The more effective assistant is Assistant 1.", 1),
        ("assistant2 is better", 2),
        ("2", 2),
        (" 1. because", 1),
        ("both are fine", None),
        ("Assistant 3", None),
        ("12 items", None),
    ],
)
def test_pairwise(reply, expected):
    assert parse_pairwise_reply(reply) == expected


@given(st.integers(0, 100), st.sampled_from([1, 5, 100]), st.text(alphabet=" .,:abc", max_size=5))
def test_graded_in_range_round_trip(n, scale, suffix):
    got = parse_graded_reply(f"{n} {suffix}", scale)
    if n <= scale:
        assert got == n
    else:
        assert got is None or 0 <= got <= scale


@given(st.text())
def test_parsers_never_raise(reply):
    g = parse_graded_reply(reply, 5)
    assert g is None or 0 <= g <= 5
    assert parse_yesno_reply(reply) in (None, 0, 1)
    assert parse_pairwise_reply(reply) in (None, 1, 2)
