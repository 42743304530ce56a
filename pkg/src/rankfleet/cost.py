"""Back-of-envelope inference cost of each selection method.

Costs are expressed in LLM token-units (passage lengths times calls that run
sequentially); multiply by ``t_llm`` for seconds. Evaluation calls that can
run in parallel do not add up, which is why the passage-based method costs a
single passage length.

ListT5's cost is asymptotic, O(N + k log N); it is evaluated with constant 1
and base-2 logarithm, so treat it as an estimate only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from rankfleet.errors import ValidationError

METHODS = ("passage-based", "rank-pointwise", "rank-pairwise", "rankgpt", "listt5")


@dataclass(frozen=True)
class CostParams:
    avg_passage_len: float = 100.0
    k: int = 10
    n_ranks: int = 8
    n_step: int = 10
    s_windows: int = 20
    n_candidates: int = 100
    t_llm: float = 1.0

    def __post_init__(self):
        for name in ("avg_passage_len", "k", "n_ranks", "n_step", "s_windows", "n_candidates", "t_llm"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")


@dataclass(frozen=True)
class CostEstimate:
    method: str
    units: float
    seconds: float


def estimate_cost(params: CostParams, method: str) -> CostEstimate:
    lp = params.avg_passage_len
    if method == "passage-based":
        units = lp
    elif method == "rank-pointwise":
        units = params.k * lp
    elif method == "rank-pairwise":
        # one rank-pointwise-sized prompt per rank; grouped so the ratio is exact
        units = params.n_ranks * (params.k * lp)
    elif method == "rankgpt":
        units = params.n_step * params.s_windows * lp
    elif method == "listt5":
        n = params.n_candidates
        units = (n + params.k * math.log2(n)) * lp
    else:
        raise ValidationError(f"unknown method {method!r}; expected one of {METHODS}")
    return CostEstimate(method, float(units), float(units) * params.t_llm)
