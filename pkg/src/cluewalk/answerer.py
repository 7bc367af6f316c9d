"""Branch-adaptive answering.

When at least one branch mapped every clue, its knowledge path grounds the
answering prompt. When no branch got there, the retrieved triples are
suspect and none of them are shown to the model: the question is answered
from the model's own knowledge instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .explorer import COMPLETE, Branch
from .gateway import BudgetExceededError, Gateway
from .kg import Graph, Triple
from .prompts import PromptSet, format_triple_list

KG_AUGMENTED = "kg_augmented"
COT_FALLBACK = "cot_fallback"

# Returned when the call budget ran out before the answering call was made.
UNANSWERED = "unanswered"


class AnswerError(Exception):
    pass


@dataclass(frozen=True)
class AnswerContext:
    """What the answering prompt will be grounded on."""

    mode: str
    triples: tuple[Triple, ...]
    question: str

    def __post_init__(self) -> None:
        if self.mode not in (KG_AUGMENTED, COT_FALLBACK):
            raise AnswerError(f"unknown answer mode {self.mode!r}")
        if (self.mode == KG_AUGMENTED) != bool(self.triples):
            raise AnswerError("kg_augmented requires triples; cot_fallback forbids them")


def build_context(
    branches: Sequence[Branch],
    question: str,
    include_failed: bool = False,
) -> AnswerContext:
    """Fuse branch outcomes into one answering context.

    The deduplicated union of all complete branches' paths is used, in hop
    order per branch and branch-id order across branches. With no complete
    branch the context is an empty chain-of-thought fallback.
    ``include_failed`` is the answering ablation: every branch's triples are
    passed along regardless of completion.
    """
    chosen = sorted(
        (b for b in branches if include_failed or b.status == COMPLETE),
        key=lambda b: b.id,
    )
    triples: list[Triple] = []
    seen: set[Triple] = set()
    for branch in chosen:
        for triple in branch.path():
            if triple not in seen:
                seen.add(triple)
                triples.append(triple)
    if triples:
        return AnswerContext(mode=KG_AUGMENTED, triples=tuple(triples), question=question)
    return AnswerContext(mode=COT_FALLBACK, triples=(), question=question)


def render_answer_request(ctx: AnswerContext, g: Graph, prompts: PromptSet):
    """Build the answering request; fallback mode renders an empty triple list."""
    label_triples = [g.triple_labels(t) for t in ctx.triples]
    return prompts.render(
        "answering",
        slots={"question": ctx.question, "triplets": format_triple_list(label_triples)},
        meta={"question": ctx.question, "triples": label_triples},
    )


def answer(ctx: AnswerContext, g: Graph, gateway: Gateway, prompts: PromptSet) -> str:
    """Ask for the final answer; the model's text is returned verbatim.

    If the call budget is already exhausted the sentinel ``UNANSWERED`` is
    returned instead of raising, so a run always produces a row per question.
    """
    if not ctx.question.strip():
        raise AnswerError("cannot answer an empty question")
    request = render_answer_request(ctx, g, prompts)
    try:
        response = gateway.complete(request)
    except BudgetExceededError:
        return UNANSWERED
    return response.text
