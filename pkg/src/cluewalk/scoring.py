"""Deterministic token-overlap scoring and keyword extraction.

Backs the oracle backend so end-to-end runs are reproducible without a
live model: a clue is scored against a graph label by the fraction of the
clue's tokens that the label shares.
"""

from __future__ import annotations

import math
import string

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_SPLIT_TABLE = str.maketrans({".": " ", "_": " "})

# Function words ignored by the keyword extractor. Deliberately small: the
# extractor only has to recover content-word runs from plainly-worded
# questions, everything subtler is a job for a real model.
STOPWORDS = frozenset(
    """
    a an the this that these those what which who whom whose when where why how
    is are was were be been being do does did has have had can could will would
    shall should may might must name give tell me show list find
    of in on at by for from to with about into over under between through
    and or not no nor as if than then it its it's their his her
    located lies
    """.split()
)


def tokenize(text: str) -> frozenset[str]:
    """Lowercased token set; dots and underscores split, punctuation dropped."""
    cleaned = text.lower().translate(_SPLIT_TABLE).translate(_PUNCT_TABLE)
    return frozenset(cleaned.split())


def overlap_score(clue_text: str, element_text: str) -> int:
    """Score 0-10: ten times the shared-token fraction of the clue, rounded.

    Rounding is half-up so the result is platform-stable.
    """
    clue_tokens = tokenize(clue_text)
    if not clue_tokens:
        return 0
    shared = clue_tokens & tokenize(element_text)
    return int(math.floor(10 * len(shared) / len(clue_tokens) + 0.5))


def best_clue(clue_texts, element_text: str) -> tuple[int, int]:
    """(clue position, score) of the best-scoring clue for one graph element.

    Ties break toward the earliest clue. ``clue_texts`` must be non-empty.
    """
    best_pos, best_score = 0, -1
    for pos, text in enumerate(clue_texts):
        score = overlap_score(text, element_text)
        if score > best_score:
            best_pos, best_score = pos, score
    return best_pos, best_score


def extract_keyword_runs(question: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Maximal runs of consecutive non-stopwords, as multi-word keywords.

    Word case is preserved so extracted keywords can lexically match graph
    labels; punctuation is stripped only at word edges.
    """
    runs: list[str] = []
    current: list[str] = []
    for raw in question.split():
        word = raw.strip(string.punctuation)
        if not word or word.lower() in stopwords:
            if current:
                runs.append(" ".join(current))
                current = []
            continue
        current.append(word)
    if current:
        runs.append(" ".join(current))
    return runs
