from rankfleet.evaluator.cache import JudgmentCache, RelevanceJudgment
from rankfleet.evaluator.client import LlmClient, LlmProfile
from rankfleet.evaluator.parsing import parse_graded_reply, parse_pairwise_reply, parse_yesno_reply
from rankfleet.evaluator.prompts import KINDS, PASSAGE_KINDS, RANK_KINDS, render_prompt
from rankfleet.evaluator.strategies import (
    Strategy,
    evaluate,
    evaluate_passage_based,
    evaluate_rank_pairwise,
    evaluate_rank_pointwise,
)

__all__ = [
    "JudgmentCache",
    "KINDS",
    "LlmClient",
    "LlmProfile",
    "PASSAGE_KINDS",
    "RANK_KINDS",
    "RelevanceJudgment",
    "Strategy",
    "evaluate",
    "evaluate_passage_based",
    "evaluate_rank_pairwise",
    "evaluate_rank_pointwise",
    "parse_graded_reply",
    "parse_pairwise_reply",
    "parse_yesno_reply",
    "render_prompt",
]
