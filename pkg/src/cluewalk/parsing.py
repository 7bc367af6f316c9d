"""Parsers recovering structured data from model response text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

from .clues import Clue
from .scoring import tokenize

MIN_SCORE, MAX_SCORE = 0, 10


class ClueParseError(Exception):
    """No clue list could be recovered from the response."""


@dataclass(frozen=True)
class MappingVerdict:
    """A scored association between a clue and one graph element's label.

    ``clue`` is None when no candidate clue could be attributed to the
    assessment line (typical for zero-score rejections).
    """

    clue: Clue | None
    element_label: str
    score: int

    def __post_init__(self) -> None:
        if not (MIN_SCORE <= self.score <= MAX_SCORE):
            raise ValueError(f"verdict score {self.score} outside 0..10")


_ENTITIES_BLOCK = re.compile(r"entities\s*:\s*\[", re.IGNORECASE)
_QUOTED_ITEM = re.compile(r"'([^']*)'|\"([^\"]*)\"")
_SCORE = re.compile(r"\((-?\d+)\)")


def parse_clues(text: str) -> list[str]:
    """Extract the quoted list following ``entities:``.

    Items are trimmed, empties dropped, order preserved. A response with no
    recoverable list raises :class:`ClueParseError`; an explicitly empty
    list is a valid parse (the question then takes the fallback route).
    """
    match = _ENTITIES_BLOCK.search(text)
    if match is None:
        raise ClueParseError("response contains no 'entities:' list")
    rest = text[match.end():]
    end = rest.find("]")
    if end < 0:
        raise ClueParseError("entities list is never closed")
    body = rest[:end]
    items = [a or b for a, b in _QUOTED_ITEM.findall(body)]
    if not items and body.strip():
        # Tolerate an unquoted list: split on commas.
        items = body.split(",")
    return [item.strip() for item in items if item.strip()]


def _attribute_clue(line: str, clue_candidates: Sequence[Clue]) -> Clue | None:
    lowered = line.lower()
    named = [c for c in clue_candidates if c.text.lower() in lowered]
    if named:
        return max(named, key=lambda c: (len(c.text), -c.index))
    line_tokens = tokenize(line)
    best, best_overlap = None, 0
    for clue in clue_candidates:
        overlap = len(tokenize(clue.text) & line_tokens)
        if overlap > best_overlap:
            best, best_overlap = clue, overlap
    return best


def parse_verdicts(
    text: str,
    clue_candidates: Sequence[Clue],
    element_labels: Sequence[str],
) -> tuple[list[MappingVerdict], int]:
    """Parse assessment lines into verdicts.

    Each line naming a known element label and carrying a parenthesized
    integer score yields one verdict; lines naming no known element are
    dropped. The attributed clue is the candidate whose text appears in the
    line, falling back to the highest token overlap. Returns the verdicts
    plus the count of out-of-range scores that had to be clamped. Zero
    parseable lines is a valid outcome (an empty mapping).
    """
    ordered_labels = sorted(set(element_labels), key=len, reverse=True)
    verdicts: list[MappingVerdict] = []
    clamped = 0
    for line in text.splitlines():
        scores = _SCORE.findall(line)
        if not scores:
            continue
        lowered = line.lower()
        element = next((lbl for lbl in ordered_labels if lbl.lower() in lowered), None)
        if element is None:
            continue
        score = int(scores[-1])
        if score < MIN_SCORE or score > MAX_SCORE:
            score = max(MIN_SCORE, min(MAX_SCORE, score))
            clamped += 1
        verdicts.append(
            MappingVerdict(
                clue=_attribute_clue(line, clue_candidates),
                element_label=element,
                score=score,
            )
        )
    return verdicts, clamped


def dedupe_verdicts(verdicts: Sequence[MappingVerdict]) -> list[MappingVerdict]:
    """Keep the highest-scoring verdict per element label (first wins ties)."""
    best: dict[str, MappingVerdict] = {}
    order: list[str] = []
    for verdict in verdicts:
        if verdict.element_label not in best:
            best[verdict.element_label] = verdict
            order.append(verdict.element_label)
        elif verdict.score > best[verdict.element_label].score:
            best[verdict.element_label] = verdict
    return [best[label] for label in order]
