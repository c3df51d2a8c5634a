"""Command-line entry points: run, report, replay."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .llm import ChatClient, LlmEndpointConfig, LlmPolicy
from .metrics import ConditionReport
from .policies import POLICY_NAMES, make_policy
from .report import render_figures, render_report
from .runner import RunConfig, RunError, parse_condition, run_condition, verify_transcript


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dinerbench",
        description="Deterministic Dining Philosophers coordination benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one condition and persist transcripts")
    run_p.add_argument("--condition", required=True, help="condition code, e.g. sim5nc, seq3c")
    run_p.add_argument("--policy", default="greedy-left",
                       help=f"one of {', '.join(POLICY_NAMES)} or llm")
    run_p.add_argument("--episodes", type=int, default=20)
    run_p.add_argument("--max-timesteps", type=int, default=30)
    run_p.add_argument("--seed", type=int, default=42)
    run_p.add_argument("--out", type=Path, required=True, help="output directory")
    run_p.add_argument("--base-url", default="https://api.openai.com/v1",
                       help="chat-completions base URL (llm policy only)")
    run_p.add_argument("--model", default=None, help="model id (llm policy only)")
    run_p.add_argument("--temperature", type=float, default=0.7)
    run_p.add_argument("--api-key-env", default="DINERBENCH_API_KEY",
                       help="environment variable holding the API key")
    run_p.add_argument("--max-retries", type=int, default=3)

    rep_p = sub.add_parser("report", help="aggregate condition reports into a table + figures")
    rep_p.add_argument("--in", dest="in_dir", type=Path, required=True,
                       help="directory containing <condition>/report.json files")
    rep_p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    rep_p.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures next to the table")

    replay_p = sub.add_parser("replay", help="verify a transcript by re-deriving every state")
    replay_p.add_argument("--transcript", type=Path, required=True)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        condition = parse_condition(args.condition)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config = RunConfig(
        condition=condition,
        episodes=args.episodes,
        max_timesteps=args.max_timesteps,
        seed=args.seed,
        policy_name=args.policy,
        out_dir=args.out,
    )
    if args.policy == "llm":
        if not args.model:
            print("error: --model is required with --policy llm", file=sys.stderr)
            return 2
        endpoint = LlmEndpointConfig(
            base_url=args.base_url,
            model_id=args.model,
            temperature=args.temperature,
            api_key_env_var=args.api_key_env,
            max_retries=args.max_retries,
        )
        client = ChatClient(endpoint)
        policies = [LlmPolicy(client) for _ in range(condition.n)]
    else:
        policies = [make_policy(args.policy) for _ in range(condition.n)]

    try:
        report = run_condition(config, policies)
    except RunError as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return 1
    print(f"condition {report.condition_code}: {report.episodes} episodes")
    print(f"  deadlock rate: {report.deadlock_rate:.2f}")
    print(f"  throughput:    {report.throughput_mean:.3f} (std {report.throughput_std:.3f})")
    print(f"  fairness:      {report.fairness_mean:.3f} (std {report.fairness_std:.3f})")
    if args.policy == "llm":
        calls = sum(p.accounting.calls for p in policies)
        tokens = sum(p.accounting.total_tokens for p in policies)
        print(f"  llm calls: {calls}, total tokens: {tokens}")
    print(f"transcripts and report.json written under {args.out / condition.code}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report_files = sorted(args.in_dir.glob("*/report.json"))
    if not report_files:
        print(f"no condition reports found under {args.in_dir}", file=sys.stderr)
        return 1
    reports = [ConditionReport(**json.loads(p.read_text())) for p in report_files]
    text = render_report(reports, args.format)
    out_path = args.in_dir / f"report.{args.format}"
    out_path.write_text(text)
    print(text, end="")
    print(f"wrote {out_path}")
    if not args.no_figures:
        for fig_path in render_figures(reports, args.in_dir):
            print(f"wrote {fig_path}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    ok, problems = verify_transcript(args.transcript)
    if ok:
        print(f"{args.transcript}: OK (all recorded states reproduced)")
        return 0
    print(f"{args.transcript}: FAILED")
    for problem in problems:
        print(f"  - {problem}")
    return 1


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "report": _cmd_report, "replay": _cmd_replay}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
