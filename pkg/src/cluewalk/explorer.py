"""Adaptive, stateful knowledge exploration.

Each branch walks the graph one hop per round: candidate clues are mapped
onto the frontier's relations, then onto the entities those relations
reach. A hop consumes one clue when relation and entity map the same clue,
two when they map different ones, and spawns one child branch per accepted
combination. A branch completes when every clue has been consumed and
fails as soon as either mapping step comes back empty.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

from .clues import Clue, ClueSet, ExplorationState
from .gateway import BudgetExceededError, Gateway
from .kg import EntityId, Graph, RelationId, Triple
from .parsing import MappingVerdict, dedupe_verdicts, parse_verdicts
from .prompts import PromptSet, format_pair_list, format_string_list

ACTIVE = "active"
COMPLETE = "complete"
FAILED = "failed"

FAIL_R_EMPTY = "r_mapping_empty"
FAIL_E_EMPTY = "e_mapping_empty"
FAIL_BUDGET = "budget"
FAIL_CYCLE = "cycle"
FAIL_CAPPED = "capped"

POLICIES = ("all", "top1")


class ExplorerError(Exception):
    pass


@dataclass(frozen=True)
class ExploreConfig:
    """Knobs for one exploration run.

    ``theta`` is the minimum verdict score counted as a match. ``policy``
    accepts every verdict above threshold ("all", the default: branches are
    never filtered by quantity) or only the best one ("top1"). ``no_sr``
    and ``no_ams`` are the ablation switches: the former stops recording
    consumed clues (candidates never shrink), the latter only spawns when
    relation and entity mapped the same clue.
    """

    theta: int = 5
    policy: str = "all"
    branch_cap: int | None = None
    no_sr: bool = False
    no_ams: bool = False

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ExplorerError(f"unknown mapping policy {self.policy!r}")
        if not (0 <= self.theta <= 10):
            raise ExplorerError("theta must be within 0..10")
        if self.branch_cap is not None and self.branch_cap < 1:
            raise ExplorerError("branch_cap must be >= 1")


@dataclass(frozen=True)
class SpawnEvent:
    """How one hop extended a branch: which clues it consumed, on whose word."""

    hop: int
    consumed: tuple[int, ...]
    relation_verdict: MappingVerdict
    entity_verdict: MappingVerdict | None  # None for last-clue shortcut hops


@dataclass(frozen=True)
class Branch:
    """One exploration trajectory."""

    id: int
    state: ExplorationState
    frontier: EntityId
    status: str = ACTIVE
    failure_reason: str | None = None
    spawn_trace: tuple[SpawnEvent, ...] = ()
    depth: int = 0
    last_score: int = 0

    def path(self) -> tuple[Triple, ...]:
        return self.state.path


@dataclass(frozen=True)
class HopOutcome:
    """Everything one hop produced for one branch."""

    r_mapping: tuple[tuple[Clue, RelationId, int], ...]
    e_mapping: tuple[tuple[Clue, EntityId, int], ...]
    spawned: tuple[Branch, ...]
    shortcut: bool
    calls: int


@dataclass(frozen=True)
class HopRecord:
    """Audit trace of one hop, JSON-friendly."""

    branch_id: int
    hop: int
    frontier: str
    tags: tuple[str, ...]
    relation_verdicts: tuple[tuple[str | None, str, int], ...]
    entity_verdicts: tuple[tuple[str | None, str, int], ...]
    spawned: tuple[int, ...]
    cases: tuple[int, ...]
    shortcut: bool
    failure: str | None


@dataclass(frozen=True)
class ExplorationResult:
    branches: tuple[Branch, ...]
    records: tuple[HopRecord, ...]
    rounds: int
    budget_exhausted: bool

    def complete_branches(self) -> tuple[Branch, ...]:
        return tuple(b for b in self.branches if b.status == COMPLETE)


def branch_candidates(branch: Branch, cfg: ExploreConfig) -> tuple[Clue, ...]:
    """Candidate clues for the next hop; the full clue set when stateless."""
    if cfg.no_sr:
        return tuple(branch.state.clue_all)
    return branch.state.candidates()


def _accept(verdicts: Sequence[MappingVerdict], cfg: ExploreConfig) -> list[MappingVerdict]:
    accepted = [v for v in verdicts if v.score >= cfg.theta and v.clue is not None]
    if cfg.policy == "top1" and accepted:
        accepted = [max(accepted, key=lambda v: v.score)]
    return accepted


def _branch_is_complete(state: ExplorationState, depth: int, cfg: ExploreConfig) -> bool:
    if cfg.no_sr:
        # Stateless stop-gap: without a record of consumed clues there is no
        # completion signal, so a branch counts as done after one hop per clue.
        return depth >= len(state.clue_all)
    return state.is_complete()


def final_hop_shortcut(
    g: Graph,
    branch: Branch,
    accepted_relation: tuple[Clue, RelationId],
    child_id: int,
    relation_verdict: MappingVerdict | None = None,
) -> Branch:
    """Complete a branch whose accepted relation consumes the last clue.

    With no candidate clue left for the entity-mapping step, every tail
    under the accepted relation is an answer: all of them are appended to
    the path and the branch is complete, saving the entity-mapping call.
    """
    clue, relation = accepted_relation
    tails = g.get_entities(branch.frontier, relation)
    if not tails:
        raise ExplorerError("shortcut relation has no tails")
    triples = [Triple(branch.frontier, relation, t) for t in tails]
    state = branch.state.consume({clue.index}, triples[0])
    if len(triples) > 1:
        state = state.extend_answers(triples[1:])
    if not state.is_complete():
        raise ExplorerError("shortcut taken while candidate clues remained")
    if relation_verdict is None:
        relation_verdict = MappingVerdict(clue, g.relation_label(relation), 10)
    event = SpawnEvent(branch.depth + 1, (clue.index,), relation_verdict, None)
    return Branch(
        id=child_id,
        state=state,
        frontier=triples[-1].tail,
        status=COMPLETE,
        spawn_trace=branch.spawn_trace + (event,),
        depth=branch.depth + 1,
        last_score=relation_verdict.score,
    )


def _spawn_child(
    branch: Branch,
    consumed: frozenset[int],
    triple: Triple,
    r_verdict: MappingVerdict,
    e_verdict: MappingVerdict,
    cfg: ExploreConfig,
    child_id: int,
) -> Branch:
    if cfg.no_sr:
        state = branch.state.extend_path(triple)
    else:
        state = branch.state.consume(consumed, triple)
    depth = branch.depth + 1
    event = SpawnEvent(depth, tuple(sorted(consumed)), r_verdict, e_verdict)
    if _branch_is_complete(state, depth, cfg):
        status, reason = COMPLETE, None
    elif any(t.head == triple.tail for t in state.path):
        # Frontier already expanded earlier on this very path: a loop.
        status, reason = FAILED, FAIL_CYCLE
    else:
        status, reason = ACTIVE, None
    return Branch(
        id=child_id,
        state=state,
        frontier=triple.tail,
        status=status,
        failure_reason=reason,
        spawn_trace=branch.spawn_trace + (event,),
        depth=depth,
        last_score=e_verdict.score,
    )


def hop(
    g: Graph,
    branch: Branch,
    gateway: Gateway,
    prompts: PromptSet,
    cfg: ExploreConfig,
    id_counter: Iterator[int],
) -> HopOutcome:
    """Run one relation-then-entity mapping step for an active branch."""
    if branch.status != ACTIVE:
        raise ExplorerError(f"cannot hop branch {branch.id} with status {branch.status}")
    cs = branch.state.clue_all
    candidates = branch_candidates(branch, cfg)
    cand_texts = [c.text for c in candidates]

    relations = g.get_relations(branch.frontier)
    if not relations:
        # Dead end: nothing to offer the relation-mapping prompt, so the
        # branch fails without spending a call.
        return HopOutcome((), (), (), shortcut=False, calls=0)
    rel_labels = [g.relation_label(r) for r in relations]
    rel_by_label = dict(zip(rel_labels, relations))

    request = prompts.render(
        "relation_mapping",
        slots={
            "sentence": cs.question,
            "target_information": format_string_list(cand_texts),
            "relations": format_string_list(rel_labels),
        },
        meta={"question": cs.question, "candidates": cand_texts, "relations": rel_labels},
    )
    response = gateway.complete(request)
    verdicts, clamped = parse_verdicts(response.text, candidates, rel_labels)
    gateway.ledger.flag_clamped(clamped)
    r_verdicts = dedupe_verdicts(verdicts)
    accepted_r = _accept(r_verdicts, cfg)
    r_mapping = tuple(
        (v.clue, rel_by_label[v.element_label], v.score) for v in accepted_r
    )
    if not accepted_r:
        return HopOutcome((), (), (), shortcut=False, calls=1)

    if not cfg.no_sr and len(candidates) == 1:
        children = []
        seen: set[tuple[int, RelationId]] = set()
        for v in accepted_r:
            relation = rel_by_label[v.element_label]
            key = (v.clue.index, relation)
            if key in seen:
                continue
            seen.add(key)
            children.append(
                final_hop_shortcut(g, branch, (v.clue, relation), next(id_counter), v)
            )
        return HopOutcome(r_mapping, (), tuple(children), shortcut=True, calls=1)

    accepted_rel_ids: list[RelationId] = []
    for v in accepted_r:
        rid = rel_by_label[v.element_label]
        if rid not in accepted_rel_ids:
            accepted_rel_ids.append(rid)
    pairs: list[tuple[str, str]] = []
    pair_ids: list[tuple[RelationId, EntityId]] = []
    for rid in accepted_rel_ids:
        for tail in g.get_entities(branch.frontier, rid):
            pairs.append((g.relation_label(rid), g.entity_label(tail)))
            pair_ids.append((rid, tail))
    ent_labels: list[str] = []
    ent_by_label: dict[str, EntityId] = {}
    for (_, tail), (_, label) in zip(pair_ids, pairs):
        if label not in ent_by_label:
            ent_by_label[label] = tail
            ent_labels.append(label)

    request = prompts.render(
        "entity_mapping",
        slots={
            "sentence": cs.question,
            "information": format_string_list(cand_texts),
            "candidate_entity": format_pair_list(pairs),
        },
        meta={"question": cs.question, "candidates": cand_texts, "pairs": pairs},
    )
    response = gateway.complete(request)
    verdicts, clamped = parse_verdicts(response.text, candidates, ent_labels)
    gateway.ledger.flag_clamped(clamped)
    e_verdicts = dedupe_verdicts(verdicts)
    accepted_e = _accept(e_verdicts, cfg)
    e_mapping = tuple(
        (v.clue, ent_by_label[v.element_label], v.score) for v in accepted_e
    )
    if not accepted_e:
        return HopOutcome(r_mapping, (), (), shortcut=False, calls=2)

    children = []
    seen_children: set[tuple[frozenset[int], Triple]] = set()
    for ev in accepted_e:
        tail = ent_by_label[ev.element_label]
        for rv in accepted_r:
            relation = rel_by_label[rv.element_label]
            triple = Triple(branch.frontier, relation, tail)
            if not g.has_triple(triple):
                continue
            same_clue = rv.clue.index == ev.clue.index
            if cfg.no_ams and not same_clue:
                continue
            consumed = frozenset(
                {rv.clue.index} if same_clue else {rv.clue.index, ev.clue.index}
            )
            key = (consumed, triple)
            if key in seen_children:
                continue
            seen_children.add(key)
            children.append(
                _spawn_child(branch, consumed, triple, rv, ev, cfg, next(id_counter))
            )
    return HopOutcome(r_mapping, e_mapping, tuple(children), shortcut=False, calls=2)


def prune(branches: Sequence[Branch], cfg: ExploreConfig) -> list[Branch]:
    """Cap the active branch population; the default is no pruning at all.

    When ``branch_cap`` is set, the cap-many branches with the highest
    last-hop scores survive (earlier branch wins ties) and the rest are
    returned as failed("capped").
    """
    if cfg.branch_cap is None or len(branches) <= cfg.branch_cap:
        return list(branches)
    ranked = sorted(branches, key=lambda b: (-b.last_score, b.id))
    kept = {b.id for b in ranked[: cfg.branch_cap]}
    result = []
    for b in branches:
        if b.id in kept:
            result.append(b)
        else:
            result.append(replace(b, status=FAILED, failure_reason=FAIL_CAPPED))
    return result


def _failed(branch: Branch, reason: str) -> Branch:
    return replace(branch, status=FAILED, failure_reason=reason)


def _hop_record(branch: Branch, outcome: HopOutcome, g: Graph, failure: str | None) -> HopRecord:
    tags: tuple[str, ...]
    if outcome.calls == 0:
        tags = ()
    elif outcome.calls == 1:
        tags = ("relation_mapping",)
    else:
        tags = ("relation_mapping", "entity_mapping")
    return HopRecord(
        branch_id=branch.id,
        hop=branch.depth + 1,
        frontier=g.entity_label(branch.frontier),
        tags=tags,
        relation_verdicts=tuple(
            (clue.text, g.relation_label(rid), score) for clue, rid, score in outcome.r_mapping
        ),
        entity_verdicts=tuple(
            (clue.text, g.entity_label(eid), score) for clue, eid, score in outcome.e_mapping
        ),
        spawned=tuple(child.id for child in outcome.spawned),
        cases=tuple(len(child.spawn_trace[-1].consumed) for child in outcome.spawned),
        shortcut=outcome.shortcut,
        failure=failure,
    )


def explore_question(
    g: Graph,
    cs: ClueSet,
    starts: Sequence[tuple[Clue, EntityId]],
    gateway: Gateway,
    prompts: PromptSet,
    cfg: ExploreConfig | None = None,
) -> ExplorationResult:
    """Explore from every starting point until completion or exhaustion.

    Each start spawns one branch with its start clue consumed immediately.
    Rounds advance all active branches by one hop; once any branch
    completes, the round in which that happened is finished for the other
    active branches and no further rounds run. Exhausting the call budget
    fails every branch that is still active.
    """
    cfg = cfg or ExploreConfig()
    id_counter = itertools.count()
    done: list[Branch] = []
    active: list[Branch] = []
    for clue, entity in starts:
        explored = frozenset() if cfg.no_sr else frozenset({clue.index})
        state = ExplorationState(clue_all=cs, explored=explored)
        branch = Branch(id=next(id_counter), state=state, frontier=entity)
        if not cfg.no_sr and state.is_complete():
            done.append(replace(branch, status=COMPLETE))
        else:
            active.append(branch)

    records: list[HopRecord] = []
    rounds = 0
    budget_exhausted = False
    completed = any(b.status == COMPLETE for b in done)

    while active and not completed:
        rounds += 1
        next_active: list[Branch] = []
        for position, branch in enumerate(active):
            try:
                outcome = hop(g, branch, gateway, prompts, cfg, id_counter)
            except BudgetExceededError:
                budget_exhausted = True
                for abandoned in active[position:] + next_active:
                    done.append(_failed(abandoned, FAIL_BUDGET))
                next_active = []
                break
            if outcome.calls == 0 or not outcome.r_mapping:
                failure = FAIL_R_EMPTY
                done.append(_failed(branch, failure))
            elif not outcome.spawned:
                failure = FAIL_E_EMPTY
                done.append(_failed(branch, failure))
            else:
                failure = None
                for child in outcome.spawned:
                    if child.status == ACTIVE:
                        next_active.append(child)
                    else:
                        done.append(child)
                        if child.status == COMPLETE:
                            completed = True
            records.append(_hop_record(branch, outcome, g, failure))
        if budget_exhausted:
            break
        active = prune(next_active, cfg)
        still_active = [b for b in active if b.status == ACTIVE]
        done.extend(b for b in active if b.status != ACTIVE)
        active = still_active

    # Branches abandoned by the stop-after-completing-round rule stay active.
    branches = tuple(sorted(done + active, key=lambda b: b.id))
    return ExplorationResult(
        branches=branches,
        records=tuple(records),
        rounds=rounds,
        budget_exhausted=budget_exhausted,
    )
