"""Command-line interface.

    secminer mine <config>                 run the mining pipeline
    secminer sample <run-dir> [options]    re-draw the triage sample
    secminer report <run-dir>              print the summary report
    secminer bot --base A --head B ...     CI diff warnings
    secminer serve --sample S --store L    triage HTTP service

Exit codes: 0 success, 2 configuration error, 3 stage failure.  The bot
subcommand exits with the policy verdict (0 or 1) instead.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bot import POLICIES, diff_indicators, exit_policy, render_findings
from .config import ConfigError
from .gitrepo import RepositoryError
from .lexicon import DEFAULT_LEXICON_PATH, LexiconError, load_lexicon
from .pipeline import StageError, redraw_sample, render_summary, run_pipeline
from .sampling import SampleSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secminer",
        description="Mine developer-admitted security concerns from repositories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mine = sub.add_parser("mine", help="run the full mining pipeline")
    mine.add_argument("config", help="path to the run config file")

    sample = sub.add_parser("sample", help="re-draw the triage sample for a run")
    sample.add_argument("run_dir", help="directory produced by `mine`")
    sample.add_argument("--confidence", type=float, default=0.95)
    sample.add_argument("--margin", type=float, default=0.05)
    sample.add_argument("--proportion", type=float, default=0.5)
    sample.add_argument("--seed", type=int, default=0)

    report = sub.add_parser("report", help="print the summary report for a run")
    report.add_argument("run_dir")

    bot = sub.add_parser("bot", help="warn about indicator comment changes")
    bot.add_argument("--repo", default=".", help="repository path (default: .)")
    bot.add_argument("--base", required=True, help="base revision")
    bot.add_argument("--head", required=True, help="head revision")
    bot.add_argument("--lexicon", default=str(DEFAULT_LEXICON_PATH))
    bot.add_argument("--format", choices=("text", "structured"), default="text")
    bot.add_argument("--policy", choices=POLICIES, default="warn_only")

    serve = sub.add_parser("serve", help="serve the triage API and UI")
    serve.add_argument("--sample", required=True, help="sample_tasks.jsonl from a run")
    serve.add_argument("--store", required=True, help="label store path (append-only)")
    serve.add_argument("--bind", default="127.0.0.1:8017")
    serve.add_argument("--lexicon", default="", help="lexicon for relevance stats")
    serve.add_argument(
        "--agreement-list",
        default="",
        help="file with one externally-relevant phrase per line",
    )
    serve.add_argument("--static", default="", help="directory with the web UI")
    serve.add_argument("--token", default="", help="shared auth token for the API")
    return parser


def _cmd_mine(args) -> int:
    run_dir = run_pipeline(args.config)
    print(f"run complete: {run_dir}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    spec = SampleSpec(args.confidence, args.margin, args.proportion, args.seed)
    spec.validate()
    out = redraw_sample(args.run_dir, spec)
    print(f"sample written: {out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    print(render_summary(args.run_dir))
    return EXIT_OK


def _cmd_bot(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    findings = diff_indicators(args.repo, args.base, args.head, lexicon)
    print(render_findings(findings, args.format))
    return exit_policy(findings, args.policy)


def _cmd_serve(args) -> int:
    from .triage import serve

    kwargs = {}
    if args.lexicon:
        kwargs["lexicon"] = load_lexicon(args.lexicon)
    if args.agreement_list:
        kwargs["other_relevant"] = [
            line.strip()
            for line in Path(args.agreement_list).read_text("utf-8").splitlines()
            if line.strip()
        ]
    if args.static:
        kwargs["static_dir"] = args.static
    if args.token:
        kwargs["token"] = args.token
    serve(args.sample, args.store, bind=args.bind, **kwargs)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "mine": _cmd_mine,
        "sample": _cmd_sample,
        "report": _cmd_report,
        "bot": _cmd_bot,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, LexiconError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageError, RepositoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
