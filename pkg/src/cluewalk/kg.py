"""In-memory triple store with label and adjacency indexes.

The store is immutable after load: every exploration step reads the same
indexes, so graphs are safe to share between any number of concurrent
workers. Entity and relation labels are interned into dense integer ids;
all lookups return label-sorted tuples so downstream prompt contents are
reproducible.
"""

from __future__ import annotations

import re
from typing import IO, Iterable, Iterator, NamedTuple, Sequence, Union

EntityId = int
RelationId = int


class GraphError(Exception):
    """Base error for triple-store failures."""


class GraphLoadError(GraphError):
    """Raised for malformed or empty triple files."""


class UnknownEntityError(GraphError):
    """Raised when an entity id or label does not resolve in the graph."""


class UnknownRelationError(GraphError):
    """Raised when a relation id does not resolve in the graph."""


_WHITESPACE = re.compile(r"\s+")
_NTRIPLE_LINE = re.compile(
    r"^<([^>]+)>\s+<([^>]+)>\s+(?:<([^>]+)>|\"([^\"]*)\")\s*\.\s*$"
)

INVERSE_PREFIX = "inv:"


def normalize_label(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WHITESPACE.sub(" ", text.strip()).lower()


class Triple(NamedTuple):
    """One directed labeled edge, in dense-id form."""

    head: EntityId
    relation: RelationId
    tail: EntityId


class Graph:
    """Immutable indexed triple store.

    Indexes are derived from the triple set at construction:

    * ``out_index``: head -> relation ids with at least one edge
    * ``adj_index``: (head, relation) -> tail ids
    * ``label_index``: normalized entity label -> entity ids
    """

    def __init__(
        self,
        entity_labels: Sequence[str],
        relation_labels: Sequence[str],
        triples: Iterable[Triple],
    ) -> None:
        self._entity_labels = tuple(entity_labels)
        self._relation_labels = tuple(relation_labels)
        self._triples = frozenset(Triple(*t) for t in triples)
        for t in self._triples:
            if not (0 <= t.head < len(self._entity_labels)):
                raise GraphError(f"triple head id {t.head} does not resolve")
            if not (0 <= t.tail < len(self._entity_labels)):
                raise GraphError(f"triple tail id {t.tail} does not resolve")
            if not (0 <= t.relation < len(self._relation_labels)):
                raise GraphError(f"triple relation id {t.relation} does not resolve")
        self._out_index, self._adj_index, self._label_index = self._build_indexes()

    def _build_indexes(self):
        out_index: dict[EntityId, set[RelationId]] = {}
        adj_index: dict[tuple[EntityId, RelationId], set[EntityId]] = {}
        for head, rel, tail in self._triples:
            out_index.setdefault(head, set()).add(rel)
            adj_index.setdefault((head, rel), set()).add(tail)
        label_index: dict[str, set[EntityId]] = {}
        for eid, label in enumerate(self._entity_labels):
            label_index.setdefault(normalize_label(label), set()).add(eid)
        return out_index, adj_index, label_index

    # -- introspection -------------------------------------------------

    @property
    def num_triples(self) -> int:
        return len(self._triples)

    @property
    def num_entities(self) -> int:
        return len(self._entity_labels)

    @property
    def num_relations(self) -> int:
        return len(self._relation_labels)

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def entity_label(self, e: EntityId) -> str:
        try:
            return self._entity_labels[e]
        except IndexError:
            raise UnknownEntityError(f"unknown entity id {e}") from None

    def relation_label(self, r: RelationId) -> str:
        try:
            return self._relation_labels[r]
        except IndexError:
            raise UnknownRelationError(f"unknown relation id {r}") from None

    def triple_labels(self, t: Triple) -> tuple[str, str, str]:
        return (
            self.entity_label(t.head),
            self.relation_label(t.relation),
            self.entity_label(t.tail),
        )

    def has_triple(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._entity_labels == other._entity_labels
            and self._relation_labels == other._relation_labels
            and self._triples == other._triples
        )

    def __hash__(self) -> int:  # pragma: no cover - graphs are not dict keys
        return hash((self._entity_labels, self._relation_labels))

    def __repr__(self) -> str:
        return (
            f"Graph(entities={self.num_entities}, relations={self.num_relations}, "
            f"triples={self.num_triples})"
        )

    # -- queries -------------------------------------------------------

    def _check_entity(self, e: EntityId) -> None:
        if not (0 <= e < len(self._entity_labels)):
            raise UnknownEntityError(f"unknown entity id {e}")

    def get_relations(self, e: EntityId) -> tuple[RelationId, ...]:
        """Relations with at least one outgoing edge from ``e``, label-sorted.

        An entity with no outgoing edges yields an empty tuple; an id that
        does not resolve raises :class:`UnknownEntityError`.
        """
        self._check_entity(e)
        rels = self._out_index.get(e, ())
        return tuple(sorted(rels, key=lambda r: self._relation_labels[r]))

    def get_entities(self, e: EntityId, r: RelationId) -> tuple[EntityId, ...]:
        """All tails t with (e, r, t) in the graph, label-sorted."""
        self._check_entity(e)
        if not (0 <= r < len(self._relation_labels)):
            raise UnknownRelationError(f"unknown relation id {r}")
        tails = self._adj_index.get((e, r), ())
        return tuple(sorted(tails, key=lambda t: self._entity_labels[t]))

    def lookup_label(self, label: str) -> tuple[EntityId, ...]:
        """Entity ids whose normalized label equals ``normalize_label(label)``."""
        hits = self._label_index.get(normalize_label(label), ())
        return tuple(sorted(hits, key=lambda e: self._entity_labels[e]))

    # -- starting points -------------------------------------------------

    def find_starting_points(self, clues: Sequence, normalization: str = "casefold"):
        """Anchor exploration by exact lexical match of clue text to entity labels.

        ``clues`` is any sequence of objects with a ``text`` attribute.
        Returns one ``(clue, entity_id)`` pair per matching entity, ordered by
        clue position then entity label. ``normalization`` is ``"casefold"``
        (lowercase, trim, collapse whitespace) or ``"exact"`` (trim only).
        No fuzzy matching of any kind is performed; an empty result is a
        valid outcome handled downstream by the chain-of-thought fallback.
        """
        if normalization not in ("casefold", "exact"):
            raise GraphError(f"unknown normalization level {normalization!r}")
        pairs = []
        for clue in clues:
            hits = self.lookup_label(clue.text)
            if normalization == "exact":
                wanted = clue.text.strip()
                hits = tuple(e for e in hits if self._entity_labels[e].strip() == wanted)
            pairs.extend((clue, e) for e in hits)
        return pairs

    # -- integrity -----------------------------------------------------

    def check_indexes(self) -> None:
        """Rebuild all indexes from the triple set and compare to the stored ones."""
        out_index, adj_index, label_index = self._build_indexes()
        if out_index != self._out_index:
            raise GraphError("out_index does not match its rebuild from triples")
        if adj_index != self._adj_index:
            raise GraphError("adj_index does not match its rebuild from triples")
        if label_index != self._label_index:
            raise GraphError("label_index does not cover the entity set")


def parse_tsv(lines: Iterable[str]) -> Iterator[tuple[str, str, str]]:
    """Parse tab-separated triple lines; '#' comments and blank lines skipped."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise GraphLoadError(
                f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
            )
        head, rel, tail = (f.strip() for f in fields)
        if not head or not rel or not tail:
            raise GraphLoadError(f"line {lineno}: empty field in triple")
        yield head, rel, tail


def parse_ntriples(lines: Iterable[str]) -> Iterator[tuple[str, str, str]]:
    """Parse N-Triples-like lines ``<h> <r> <t> .`` (tail may be a quoted literal)."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _NTRIPLE_LINE.match(line)
        if m is None:
            raise GraphLoadError(f"line {lineno}: not a well-formed triple statement")
        head, rel = m.group(1).strip(), m.group(2).strip()
        tail = (m.group(3) if m.group(3) is not None else m.group(4)).strip()
        if not head or not rel or not tail:
            raise GraphLoadError(f"line {lineno}: empty term in triple")
        yield head, rel, tail


def build_graph(
    label_triples: Iterable[tuple[str, str, str]],
    include_inverse: bool = False,
) -> Graph:
    """Intern labels and construct a :class:`Graph` from label triples."""
    entity_ids: dict[str, EntityId] = {}
    relation_ids: dict[str, RelationId] = {}
    entity_labels: list[str] = []
    relation_labels: list[str] = []
    triples: set[Triple] = set()

    def entity(label: str) -> EntityId:
        eid = entity_ids.get(label)
        if eid is None:
            eid = len(entity_labels)
            entity_ids[label] = eid
            entity_labels.append(label)
        return eid

    def relation(label: str) -> RelationId:
        rid = relation_ids.get(label)
        if rid is None:
            rid = len(relation_labels)
            relation_ids[label] = rid
            relation_labels.append(label)
        return rid

    for head, rel, tail in label_triples:
        triples.add(Triple(entity(head), relation(rel), entity(tail)))
        if include_inverse:
            triples.add(Triple(entity(tail), relation(INVERSE_PREFIX + rel), entity(head)))

    if not triples:
        raise GraphLoadError("no triples found in source")
    return Graph(entity_labels, relation_labels, triples)


def load_graph(
    source: Union[str, IO[str]],
    fmt: str = "tsv",
    include_inverse: bool = False,
) -> Graph:
    """Load a graph from a triple file path or open text handle.

    ``fmt`` selects the line syntax: ``tsv`` (head TAB relation TAB tail)
    or ``ntriples`` (``<h> <r> <t> .``, for Freebase-style exports).
    """
    parsers = {"tsv": parse_tsv, "ntriples": parse_ntriples}
    try:
        parser = parsers[fmt]
    except KeyError:
        raise GraphLoadError(f"unknown triple file format {fmt!r}") from None
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            return build_graph(parser(handle), include_inverse=include_inverse)
    return build_graph(parser(source), include_inverse=include_inverse)
