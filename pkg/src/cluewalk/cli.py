"""Command-line interface: run evaluations, merge reports, print summaries."""

from __future__ import annotations

import argparse
import logging
import sys

from .gateway import DEFAULT_API_KEY_ENV, DEFAULT_CALL_BUDGET
from .clues import VARIANTS
from .runner import (
    HarnessError,
    RunConfig,
    merge_with_io,
    read_report,
    run,
    write_report,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cluewalk",
        description="Clue-driven stateful knowledge-graph exploration and QA evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a QA set end to end and write a report")
    runp.add_argument("--graph", required=True, help="triple file path")
    runp.add_argument("--qa", required=True, help="QA set path (JSON lines)")
    runp.add_argument(
        "--backend", choices=("http", "scripted", "oracle"), default="oracle"
    )
    runp.add_argument("--endpoint", help="chat-completions URL (http backend)")
    runp.add_argument("--model", help="model name (http backend)")
    runp.add_argument("--script", help="replay file (scripted backend)")
    runp.add_argument(
        "--api-key-env",
        default=DEFAULT_API_KEY_ENV,
        help=f"environment variable holding the bearer token (default {DEFAULT_API_KEY_ENV})",
    )
    runp.add_argument("--graph-format", choices=("tsv", "ntriples"), default="tsv")
    runp.add_argument(
        "--inverse", action="store_true", help="also index inverse edges as inv:<relation>"
    )
    runp.add_argument("--normalization", choices=("casefold", "exact"), default="casefold")
    runp.add_argument("--language", default="en", help="prompt template language")
    runp.add_argument("--theta", type=int, default=5, help="minimum mapping score (0-10)")
    runp.add_argument("--policy", choices=("all", "top1"), default="all")
    runp.add_argument("--branch-cap", type=int, default=None)
    runp.add_argument("--budget", type=int, default=DEFAULT_CALL_BUDGET)
    runp.add_argument("--no-sr", action="store_true", help="ablation: drop the stateful record")
    runp.add_argument(
        "--no-ams", action="store_true", help="ablation: force single-clue mapping only"
    )
    runp.add_argument(
        "--no-baa", action="store_true", help="ablation: always pass retrieved triples"
    )
    runp.add_argument("--variant", choices=VARIANTS, default="none")
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--width", type=int, default=1, help="concurrent questions")
    runp.add_argument("--out", help="report path (JSON lines)")

    mergep = sub.add_parser("merge-io", help="OR the match flags of two reports")
    mergep.add_argument("method_report")
    mergep.add_argument("io_report")
    mergep.add_argument("--out", required=True)

    reportp = sub.add_parser("report", help="pretty-print a report's aggregates")
    reportp.add_argument("report_path")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = RunConfig(
        graph=args.graph,
        qa=args.qa,
        backend=args.backend,
        endpoint=args.endpoint,
        model=args.model,
        script=args.script,
        api_key_env=args.api_key_env,
        graph_format=args.graph_format,
        include_inverse=args.inverse,
        normalization=args.normalization,
        language=args.language,
        theta=args.theta,
        policy=args.policy,
        branch_cap=args.branch_cap,
        budget=args.budget,
        no_sr=args.no_sr,
        no_ams=args.no_ams,
        no_baa=args.no_baa,
        variant=args.variant,
        seed=args.seed,
        width=args.width,
        out=args.out,
    )
    report = run(cfg)
    _print_summary(report.summary)
    return 0


def _cmd_merge(args: argparse.Namespace) -> int:
    merged = merge_with_io(read_report(args.method_report), read_report(args.io_report))
    write_report(merged, args.out)
    _print_summary(merged.summary)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    _print_summary(read_report(args.report_path).summary)
    return 0


def _print_summary(summary: dict) -> None:
    lines = [
        ("questions", summary["questions"]),
        ("errors", summary["errors"]),
        ("boolean accuracy", _fmt_rate(summary["boolean_accuracy"], summary["boolean_total"])),
        ("partial match", _fmt_rate(summary["partial_rate"], summary["query_total"])),
        ("complete match", _fmt_rate(summary["complete_rate"], summary["query_total"])),
        ("avg LLM calls", f"{summary['avg_llm_calls']:.2f}"),
        ("avg tokens", f"{summary['avg_total_tokens']:.1f}"),
        ("avg LLM seconds", f"{summary['avg_llm_seconds']:.3f}"),
        ("avg total seconds", f"{summary['avg_total_seconds']:.3f}"),
    ]
    width = max(len(name) for name, _ in lines)
    for name, value in lines:
        print(f"{name:<{width}}  {value}")


def _fmt_rate(rate: float, total: int) -> str:
    if not total:
        return "n/a"
    return f"{100 * rate:.1f}% ({total})"


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "merge-io": _cmd_merge, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (HarnessError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
