"""Fine-grained clues and per-branch exploration state.

A question is decomposed into an ordered set of atomic clues. Each
exploration branch carries an immutable :class:`ExplorationState` recording
which clues it has already mapped onto the graph, so sibling branches can
never observe (or corrupt) each other's progress.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Iterator, Sequence

from .kg import Triple, normalize_label

VARIANTS = ("none", "sp_matched", "clue_trunc", "clue_ext", "noise_add")


class ClueError(Exception):
    """Base error for clue handling."""


class VariantError(ClueError):
    """Raised when a clue perturbation variant cannot be applied."""


@dataclass(frozen=True)
class Clue:
    """One atomic keyword, identified by its position in the full clue set."""

    text: str
    index: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ClueError("clue text must be non-empty")
        if self.text != self.text.strip():
            raise ClueError("clue text must be trimmed")


@dataclass(frozen=True)
class ClueSet:
    """The ordered full clue set extracted from one question."""

    clues: tuple[Clue, ...]
    question: str

    @classmethod
    def from_texts(cls, question: str, texts: Iterable[str]) -> "ClueSet":
        """Build a clue set, trimming entries and merging duplicates.

        Duplicates are detected on normalized text (case/whitespace) and the
        first occurrence wins; indexes are assigned after merging.
        """
        seen: set[str] = set()
        kept: list[str] = []
        for text in texts:
            text = text.strip()
            if not text:
                continue
            key = normalize_label(text)
            if key in seen:
                continue
            seen.add(key)
            kept.append(text)
        return cls(tuple(Clue(t, i) for i, t in enumerate(kept)), question)

    def texts(self) -> list[str]:
        return [c.text for c in self.clues]

    def __len__(self) -> int:
        return len(self.clues)

    def __iter__(self) -> Iterator[Clue]:
        return iter(self.clues)


@dataclass(frozen=True)
class ExplorationState:
    """Immutable per-branch record of explored clues and the accumulated path.

    ``explored`` holds clue indexes already mapped (the stateful record);
    ``candidates()`` derives the remainder. States are values: ``consume``
    returns a new state and never mutates, so branch workers can share and
    fork them freely.
    """

    clue_all: ClueSet
    explored: frozenset[int] = frozenset()
    path: tuple[Triple, ...] = ()

    def __post_init__(self) -> None:
        valid = {c.index for c in self.clue_all}
        if not self.explored <= valid:
            raise ClueError("explored set references unknown clue indexes")

    def candidates(self) -> tuple[Clue, ...]:
        """Clues not yet explored, in original clue order."""
        return tuple(c for c in self.clue_all if c.index not in self.explored)

    def is_complete(self) -> bool:
        return len(self.explored) == len(self.clue_all)

    def consume(self, clue_indexes: Iterable[int], triple: Triple) -> "ExplorationState":
        """Mark clues as explored and extend the path by one triple.

        Consuming an already-explored clue raises: that is exactly the
        redundant re-processing the stateful record exists to forbid.
        """
        indexes = frozenset(clue_indexes)
        if not indexes:
            raise ClueError("consume requires at least one clue index")
        candidate_indexes = {c.index for c in self.candidates()}
        stale = indexes - candidate_indexes
        if stale:
            raise ClueError(
                f"clue indexes {sorted(stale)} are not candidates (already explored or unknown)"
            )
        return ExplorationState(
            clue_all=self.clue_all,
            explored=self.explored | indexes,
            path=self.path + (triple,),
        )

    def extend_path(self, triple: Triple) -> "ExplorationState":
        """Extend the path without recording any clue (stateless ablation only)."""
        return ExplorationState(
            clue_all=self.clue_all,
            explored=self.explored,
            path=self.path + (triple,),
        )

    def extend_answers(self, triples: Sequence[Triple]) -> "ExplorationState":
        """Append extra answer triples after the final hop consumed its clue.

        Used only by the last-clue shortcut when one relation fans out to
        several tails; all of them belong to the answer path.
        """
        return ExplorationState(
            clue_all=self.clue_all,
            explored=self.explored,
            path=self.path + tuple(triples),
        )


def truncate_clue(text: str) -> str:
    """Degrade a clue: keep the first word, or double a single-word clue."""
    words = text.split()
    if len(words) > 1:
        return words[0]
    return f"{text} {text}"


def default_distractors() -> tuple[str, ...]:
    """The shipped distractor vocabulary for the noise variant."""
    data = resources.files("cluewalk").joinpath("data/distractors.txt").read_text("utf-8")
    return tuple(line.strip() for line in data.splitlines() if line.strip())


def apply_variant(
    cs: ClueSet,
    variant: str,
    rng_seed: int,
    sp_hits: Sequence[Clue] = (),
    distractors: Sequence[str] | None = None,
    noise_count: int = 2,
) -> ClueSet:
    """Apply one clue-quality perturbation, deterministically under ``rng_seed``.

    * ``sp_matched``   keep only clues that matched a starting point
    * ``clue_trunc``   replace one random non-starting-point clue with its
      truncated form
    * ``clue_ext``     keep everything and append one truncated duplicate
    * ``noise_add``    append clues sampled from the distractor vocabulary
    """
    if variant not in VARIANTS:
        raise VariantError(f"unknown clue variant {variant!r}")
    if variant == "none":
        return cs

    rng = random.Random(rng_seed)
    sp_indexes = {c.index for c in sp_hits}
    texts = cs.texts()

    if variant == "sp_matched":
        kept = [c.text for c in cs if c.index in sp_indexes]
        return ClueSet.from_texts(cs.question, kept)

    if variant in ("clue_trunc", "clue_ext"):
        modifiable = [c for c in cs if c.index not in sp_indexes]
        if not modifiable:
            raise VariantError(f"{variant}: no non-starting-point clue to modify")
        target = rng.choice(modifiable)
        if variant == "clue_trunc":
            texts[target.index] = truncate_clue(target.text)
        else:
            texts.append(truncate_clue(target.text))
        return ClueSet.from_texts(cs.question, texts)

    vocab = tuple(distractors) if distractors is not None else default_distractors()
    if not vocab:
        raise VariantError("noise_add: distractor vocabulary is empty")
    picked = rng.sample(vocab, k=min(noise_count, len(vocab)))
    return ClueSet.from_texts(cs.question, texts + list(picked))
