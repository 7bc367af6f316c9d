"""Prompt template loading and rendering.

Templates are plain UTF-8 data files with positional ``{}`` placeholders,
one file per prompt kind, grouped by language directory so translated
prompt sets drop in without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .gateway import PROMPT_KINDS, ChatRequest

# Positional placeholder meaning, per prompt kind, in template order.
SLOT_ORDER: dict[str, tuple[str, ...]] = {
    "clue_extraction": ("sentence",),
    "relation_mapping": ("sentence", "target_information", "relations"),
    "entity_mapping": ("sentence", "information", "candidate_entity"),
    "answering": ("question", "triplets"),
}


class TemplateError(Exception):
    """Raised for unloadable templates or bad slot sets."""


def format_string_list(items: Iterable[str]) -> str:
    """Render a quoted list the way the prompt exemplars spell it."""
    return "[" + ", ".join(f"'{item}'" for item in items) + "]"


def format_pair_list(pairs: Iterable[tuple[str, str]]) -> str:
    return "[" + ", ".join(f"('{a}', '{b}')" for a, b in pairs) + "]"


def format_triple_list(triples: Iterable[tuple[str, str, str]]) -> str:
    return "[" + ", ".join(f"('{h}', '{r}', '{t}')" for h, r, t in triples) + "]"


@dataclass(frozen=True)
class PromptSet:
    """The loaded templates for one language."""

    language: str
    templates: Mapping[str, str]

    @classmethod
    def load(cls, language: str = "en", root: str | Path | None = None) -> "PromptSet":
        """Load all four templates for ``language``.

        ``root`` overrides the packaged template directory with a custom one
        laid out the same way (``<root>/<language>/<kind>.txt``).
        """
        templates: dict[str, str] = {}
        for kind in PROMPT_KINDS:
            if root is not None:
                path = Path(root) / language / f"{kind}.txt"
                if not path.is_file():
                    raise TemplateError(f"missing template file {path}")
                text = path.read_text(encoding="utf-8")
            else:
                ref = resources.files("cluewalk").joinpath(f"templates/{language}/{kind}.txt")
                try:
                    text = ref.read_text(encoding="utf-8")
                except FileNotFoundError:
                    raise TemplateError(
                        f"no packaged templates for language {language!r} ({kind})"
                    ) from None
            text = text.rstrip("\n")
            placeholders = text.count("{}")
            expected = len(SLOT_ORDER[kind])
            if placeholders != expected:
                raise TemplateError(
                    f"template {kind} ({language}) has {placeholders} placeholders, "
                    f"expected {expected}"
                )
            templates[kind] = text
        return cls(language=language, templates=dict(templates))

    def render(
        self,
        kind: str,
        slots: Mapping[str, str],
        meta: Mapping[str, Any] | None = None,
        max_tokens: int = 1024,
    ) -> ChatRequest:
        """Instantiate the template for ``kind`` with named slot values.

        Rendering is pure: identical inputs produce a byte-identical
        request. Missing or unexpected slot names raise, listing them.
        """
        if kind not in SLOT_ORDER:
            raise TemplateError(f"unknown prompt kind {kind!r}")
        order = SLOT_ORDER[kind]
        missing = [name for name in order if name not in slots]
        if missing:
            raise TemplateError(f"missing slots for {kind}: {', '.join(missing)}")
        extra = [name for name in slots if name not in order]
        if extra:
            raise TemplateError(f"unexpected slots for {kind}: {', '.join(sorted(extra))}")
        parts = self.templates[kind].split("{}")
        values = [str(slots[name]) for name in order]
        rendered = parts[0]
        for value, part in zip(values, parts[1:]):
            rendered += value + part
        return ChatRequest(
            messages=(("user", rendered),),
            temperature=0.0,
            max_tokens=max_tokens,
            tag=kind,
            meta=dict(meta or {}),
        )
