"""End-to-end evaluation harness.

Runs the full pipeline per question (clue extraction, optional clue
perturbation, starting-point lookup, exploration, answering, metrics) and
assembles a machine-readable report with per-question rows plus recomputed
aggregates.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .answerer import COT_FALLBACK, answer, build_context
from .clues import VARIANTS, ClueSet, apply_variant
from .explorer import ACTIVE, COMPLETE, FAILED, ExploreConfig, explore_question
from .gateway import (
    DEFAULT_API_KEY_ENV,
    DEFAULT_CALL_BUDGET,
    BudgetExceededError,
    CallLedger,
    Gateway,
    HttpBackend,
    OracleBackend,
    ScriptedBackend,
)
from .kg import Graph, load_graph
from .metrics import score_boolean, score_match
from .parsing import ClueParseError, parse_clues
from .prompts import PromptSet

logger = logging.getLogger(__name__)

QA_KINDS = ("boolean", "query")
BACKENDS = ("oracle", "scripted", "http")


class HarnessError(Exception):
    pass


class ReportError(HarnessError):
    """A report's aggregates do not match its rows."""


@dataclass(frozen=True)
class QAItem:
    id: str
    question: str
    answers: tuple[str, ...]
    kind: str = "query"

    def __post_init__(self) -> None:
        if not self.answers:
            raise HarnessError(f"question {self.id}: answers must be non-empty")
        if self.kind not in QA_KINDS:
            raise HarnessError(f"question {self.id}: unknown kind {self.kind!r}")
        if self.kind == "boolean":
            bad = [a for a in self.answers if a.strip().lower() not in ("yes", "no")]
            if bad:
                raise HarnessError(f"question {self.id}: boolean answers must be yes/no")


def load_qa(path: str) -> list[QAItem]:
    """Load a QA set: one JSON object per line with id/question/answers/kind."""
    items: list[QAItem] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                items.append(
                    QAItem(
                        id=str(obj["id"]),
                        question=obj["question"],
                        answers=tuple(obj["answers"]),
                        kind=obj.get("kind", "query"),
                    )
                )
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise HarnessError(f"{path}:{lineno}: bad QA record: {exc}") from exc
    if not items:
        raise HarnessError(f"{path}: QA set is empty")
    return items


@dataclass(frozen=True)
class RunConfig:
    graph: str
    qa: str
    backend: str = "oracle"
    endpoint: str | None = None
    model: str | None = None
    script: str | None = None
    api_key_env: str = DEFAULT_API_KEY_ENV
    graph_format: str = "tsv"
    include_inverse: bool = False
    normalization: str = "casefold"
    language: str = "en"
    theta: int = 5
    policy: str = "all"
    branch_cap: int | None = None
    budget: int = DEFAULT_CALL_BUDGET
    no_sr: bool = False
    no_ams: bool = False
    no_baa: bool = False
    variant: str = "none"
    seed: int = 0
    width: int = 1
    max_retries: int = 2
    out: str | None = None

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise HarnessError(f"unknown backend {self.backend!r}")
        if self.backend == "http" and not (self.endpoint and self.model):
            raise HarnessError("http backend requires endpoint and model")
        if self.backend == "scripted" and not self.script:
            raise HarnessError("scripted backend requires a script path")
        if self.budget < 1:
            raise HarnessError("call budget must be >= 1")
        if self.width < 1:
            raise HarnessError("width must be >= 1")
        if self.variant not in VARIANTS:
            raise HarnessError(f"unknown clue variant {self.variant!r}")

    def explore_config(self) -> ExploreConfig:
        return ExploreConfig(
            theta=self.theta,
            policy=self.policy,
            branch_cap=self.branch_cap,
            no_sr=self.no_sr,
            no_ams=self.no_ams,
        )


def make_backend(cfg: RunConfig):
    if cfg.backend == "oracle":
        return OracleBackend()
    if cfg.backend == "scripted":
        return ScriptedBackend.from_file(cfg.script)
    return HttpBackend(endpoint=cfg.endpoint, model=cfg.model, api_key_env=cfg.api_key_env)


def extract_clues(gateway: Gateway, prompts: PromptSet, question: str) -> ClueSet:
    """One extraction call, one automatic re-prompt, then fail soft.

    Failing soft means an empty clue set: no starting point will match and
    the question takes the chain-of-thought fallback route.
    """
    request = prompts.render(
        "clue_extraction", slots={"sentence": question}, meta={"question": question}
    )
    for attempt in (1, 2):
        try:
            response = gateway.complete(request)
        except BudgetExceededError:
            return ClueSet.from_texts(question, [])
        try:
            return ClueSet.from_texts(question, parse_clues(response.text))
        except ClueParseError:
            if attempt == 1:
                logger.info("unparseable clue list, re-prompting once")
                continue
    return ClueSet.from_texts(question, [])


@dataclass
class RunReport:
    rows: list[dict[str, Any]]
    summary: dict[str, Any]

    def validate(self) -> None:
        """Check that every aggregate is recomputable from the rows."""
        recomputed = summarize(self.rows, self.summary.get("config", {}))
        if recomputed != self.summary:
            mismatched = {
                k: (self.summary.get(k), recomputed.get(k))
                for k in set(self.summary) | set(recomputed)
                if self.summary.get(k) != recomputed.get(k)
            }
            raise ReportError(f"summary does not match rows: {mismatched}")

    def fingerprint(self) -> str:
        """Deterministic serialization with wall-clock fields removed."""
        timing_keys = ("llm_seconds", "total_seconds")
        rows = []
        for row in self.rows:
            rows.append({k: v for k, v in row.items() if k not in timing_keys})
        summary = {
            k: v
            for k, v in self.summary.items()
            if k not in ("avg_llm_seconds", "avg_total_seconds")
        }
        return json.dumps({"rows": rows, "summary": summary}, sort_keys=True)


def write_report(report: RunReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for row in report.rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
        handle.write(json.dumps({"summary": report.summary}, sort_keys=True) + "\n")


def read_report(path: str) -> RunReport:
    rows: list[dict[str, Any]] = []
    summary: dict[str, Any] | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "summary" in obj:
                summary = obj["summary"]
            else:
                rows.append(obj)
    if summary is None:
        raise HarnessError(f"{path}: report has no summary line")
    return RunReport(rows=rows, summary=summary)


def summarize(rows: Sequence[Mapping[str, Any]], config_echo: Mapping[str, Any]) -> dict[str, Any]:
    """Aggregate per-question rows; always recomputable from them."""
    n = len(rows)
    boolean_rows = [r for r in rows if r["kind"] == "boolean"]
    query_rows = [r for r in rows if r["kind"] == "query"]
    summary: dict[str, Any] = {
        "questions": n,
        "errors": sum(1 for r in rows if r.get("error")),
        "boolean_total": len(boolean_rows),
        "boolean_correct": sum(1 for r in boolean_rows if r["bool_correct"]),
        "query_total": len(query_rows),
        "partial_matches": sum(1 for r in query_rows if r["partial"]),
        "complete_matches": sum(1 for r in query_rows if r["complete"]),
        "avg_llm_calls": _avg([r["calls"] for r in rows]),
        "avg_total_tokens": _avg([r["total_tokens"] for r in rows]),
        "avg_llm_seconds": _avg([r["llm_seconds"] for r in rows]),
        "avg_total_seconds": _avg([r["total_seconds"] for r in rows]),
        "config": dict(config_echo),
    }
    summary["boolean_accuracy"] = _rate(summary["boolean_correct"], summary["boolean_total"])
    summary["partial_rate"] = _rate(summary["partial_matches"], summary["query_total"])
    summary["complete_rate"] = _rate(summary["complete_matches"], summary["query_total"])
    return summary


def _avg(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _rate(hits: int, total: int) -> float:
    return hits / total if total else 0.0


def _config_echo(cfg: RunConfig) -> dict[str, Any]:
    echo = dataclasses.asdict(cfg)
    echo.pop("out", None)
    return echo


def run_question(
    item: QAItem,
    g: Graph,
    prompts: PromptSet,
    backend,
    cfg: RunConfig,
    variant_seed: int,
) -> dict[str, Any]:
    """Run the full pipeline for one question; errors become row fields."""
    ledger = CallLedger()
    gateway = Gateway(backend, ledger, budget=cfg.budget, max_retries=cfg.max_retries)
    started = time.perf_counter()
    row: dict[str, Any] = {
        "id": item.id,
        "question": item.question,
        "kind": item.kind,
        "gold": list(item.answers),
        "answer": "",
        "mode": COT_FALLBACK,
        "clues": [],
        "starts": 0,
        "branches": {"total": 0, "complete": 0, "failed": 0, "active": 0},
        "complete_paths": [],
        "trace": [],
        "partial": False,
        "complete": False,
        "bool_correct": False,
        "error": None,
    }
    try:
        cs = extract_clues(gateway, prompts, item.question)
        sp_pairs = g.find_starting_points(cs.clues, cfg.normalization) if len(cs) else []
        if cfg.variant != "none" and len(cs):
            sp_clues = []
            for clue, _ in sp_pairs:
                if clue not in sp_clues:
                    sp_clues.append(clue)
            cs = apply_variant(cs, cfg.variant, variant_seed, sp_hits=sp_clues)
            sp_pairs = g.find_starting_points(cs.clues, cfg.normalization) if len(cs) else []
        row["clues"] = cs.texts()
        row["starts"] = len(sp_pairs)

        result = explore_question(g, cs, sp_pairs, gateway, prompts, cfg.explore_config())
        statuses = [b.status for b in result.branches]
        row["branches"] = {
            "total": len(statuses),
            "complete": statuses.count(COMPLETE),
            "failed": statuses.count(FAILED),
            "active": statuses.count(ACTIVE),
        }
        row["complete_paths"] = [
            [list(g.triple_labels(t)) for t in b.path()]
            for b in result.branches
            if b.status == COMPLETE
        ]
        row["trace"] = [dataclasses.asdict(record) for record in result.records]

        ctx = build_context(result.branches, item.question, include_failed=cfg.no_baa)
        row["mode"] = ctx.mode
        row["answer"] = answer(ctx, g, gateway, prompts)

        if item.kind == "boolean":
            row["bool_correct"] = score_boolean(row["answer"], item.answers[0])
        else:
            row["partial"], row["complete"] = score_match(row["answer"], item.answers)
    except Exception as exc:  # per-question failures never abort the run
        logger.exception("question %s failed", item.id)
        row["error"] = f"{type(exc).__name__}: {exc}"

    snapshot = ledger.snapshot()
    row["calls"] = snapshot["total_calls"]
    row["calls_by_tag"] = snapshot["calls_by_tag"]
    row["prompt_tokens"] = snapshot["prompt_tokens"]
    row["completion_tokens"] = snapshot["completion_tokens"]
    row["total_tokens"] = snapshot["total_tokens"]
    row["clamped_scores"] = snapshot["clamped_scores"]
    row["llm_seconds"] = snapshot["llm_seconds"]
    row["total_seconds"] = time.perf_counter() - started
    return row


def run(cfg: RunConfig) -> RunReport:
    """Run the whole QA set under ``cfg`` and return the validated report."""
    g = load_graph(cfg.graph, fmt=cfg.graph_format, include_inverse=cfg.include_inverse)
    items = load_qa(cfg.qa)
    prompts = PromptSet.load(cfg.language)
    backend = make_backend(cfg)

    def one(indexed: tuple[int, QAItem]) -> dict[str, Any]:
        index, item = indexed
        return run_question(item, g, prompts, backend, cfg, variant_seed=cfg.seed + index)

    if cfg.width == 1:
        rows = [one(pair) for pair in enumerate(items)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.width) as pool:
            rows = list(pool.map(one, enumerate(items)))
    rows.sort(key=lambda r: r["id"])

    report = RunReport(rows=rows, summary=summarize(rows, _config_echo(cfg)))
    report.validate()
    if cfg.out:
        write_report(report, cfg.out)
    return report


def merge_with_io(method: RunReport, io: RunReport) -> RunReport:
    """Evaluation-time union: OR the match flags of two runs, per question.

    Cost and trace columns keep the method run's values; only the match
    flags change, so no match rate can ever decrease.
    """
    io_rows = {row["id"]: row for row in io.rows}
    method_ids = {row["id"] for row in method.rows}
    if method_ids != set(io_rows):
        raise HarnessError("cannot merge reports over different question ids")
    merged_rows = []
    for row in method.rows:
        other = io_rows[row["id"]]
        merged = dict(row)
        merged["partial"] = bool(row["partial"] or other["partial"])
        merged["complete"] = bool(row["complete"] or other["complete"])
        merged["bool_correct"] = bool(row["bool_correct"] or other["bool_correct"])
        merged_rows.append(merged)
    config = dict(method.summary.get("config", {}))
    config["merged_with_io"] = True
    return RunReport(rows=merged_rows, summary=summarize(merged_rows, config))
