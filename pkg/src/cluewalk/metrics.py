"""Match metrics over free-text model responses."""

from __future__ import annotations

import re
import string
from typing import Sequence

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_WHITESPACE = re.compile(r"\s+")

# Default yes/no lexicons; configurable per language.
AFFIRMATIVE = frozenset({"yes", "true", "correct"})
NEGATIVE = frozenset({"no", "false", "incorrect"})


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    return _WHITESPACE.sub(" ", text.lower().translate(_PUNCT_TABLE)).strip()


def score_match(response: str, gold: Sequence[str]) -> tuple[bool, bool]:
    """(partial, complete) gold containment after normalization.

    Partial: at least one gold answer occurs in the response. Complete: all
    of them do. Containment is substring on normalized text; no answer
    extraction is attempted.
    """
    if not gold:
        raise ValueError("gold answers must be non-empty")
    normalized = normalize_text(response)
    hits = [normalize_text(g) in normalized for g in gold]
    return any(hits), all(hits)


def score_boolean(
    response: str,
    gold: str,
    affirmative: frozenset[str] = AFFIRMATIVE,
    negative: frozenset[str] = NEGATIVE,
) -> bool:
    """Whether the first yes/no token in the response matches the gold label.

    A response containing no token from either lexicon counts as incorrect.
    """
    gold_label = gold.strip().lower()
    if gold_label not in ("yes", "no"):
        raise ValueError(f"boolean gold must be yes or no, got {gold!r}")
    for word in normalize_text(response).split():
        if word in affirmative:
            return gold_label == "yes"
        if word in negative:
            return gold_label == "no"
    return False
