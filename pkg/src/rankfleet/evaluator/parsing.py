"""Turn free-text LLM replies into grades and verdicts.

Each parser returns ``None`` when the reply carries no usable answer; callers
count that as a parse failure and fall back to a neutral value.
"""

from __future__ import annotations

import re

# An integer not glued to letters, digits, underscores or a decimal point.
_INT_RE = re.compile(r"(?<![\w.])(\d+)(?![\w]|\.\d)")
_YESNO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_ASSISTANT_RE = re.compile(r"assistant\s*([12])\b", re.IGNORECASE)
_LEADING_CHOICE_RE = re.compile(r"^\s*([12])\b")


def parse_graded_reply(reply: str, scale_max: int) -> int | None:
    for m in _INT_RE.finditer(reply):
        value = int(m.group(1))
        if 0 <= value <= scale_max:
            return value
    return None


def parse_yesno_reply(reply: str) -> int | None:
    m = _YESNO_RE.search(reply)
    if m is None:
        return None
    return 1 if m.group(1).lower() == "yes" else 0


def parse_pairwise_reply(reply: str) -> int | None:
    """1 or 2 for the preferred assistant."""
    m = _ASSISTANT_RE.search(reply)
    if m is None:
        m = _LEADING_CHOICE_RE.match(reply)
    return int(m.group(1)) if m else None
