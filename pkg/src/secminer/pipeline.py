"""Pipeline orchestration, summary statistics, and dataset emission.

A run produces, atomically per file, into the configured output
directory:

    manifest.json              run metadata (the only place a timestamp
                               appears), methodology notes
    commits.csv/.jsonl         all commits with issue refs and matches
    comment_lifetimes.csv/.jsonl  tracked indicator comments
    issues.csv/.jsonl          normalized tracker issues with matches
    survival.csv               per-lifetime-bucket figure data
    summary.json               per-project summary statistics
    candidates.jsonl           all triage candidates (pre-sampling)
    sample_tasks.jsonl         the drawn sample, consumed by the triage
                               service

Datasets are UTF-8 CSV with RFC-4180 quoting plus a line-delimited JSON
variant; both open with a meta record carrying the schema version, the
config hash, and the lexicon version.  Rerunning with identical inputs
reproduces every artifact byte for byte except the manifest timestamp.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import shutil
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .comments import decode_source, detect_language_profile, extract_comments, normalize_comment
from .config import ConfigError, RunConfig, load_config
from .gitrepo import CommitRecord, FileBlob, IssueRef, list_commits, list_release_tags, snapshot_files
from .issues import (
    HttpTransport,
    IssueRecord,
    ReplayTransport,
    fetch_all_github_issues,
    fetch_all_jira_issues,
    issue_document_id,
    match_issues,
)
from .lexicon import IndicatorMatch, Lexicon, load_lexicon, match_text
from .sampling import SampleSpec, SampleTask, draw_sample
from .tracking import CommentLifetime, SurvivalTable, build_timeline, survival_table

SCHEMAS = {
    "commits": "commits-v1",
    "lifetimes": "comment-lifetimes-v1",
    "issues": "issues-v1",
    "survival": "survival-v1",
    "summary": "summary-v1",
    "candidates": "sample-candidates-v1",
    "sample": "sample-tasks-v1",
    "manifest": "run-manifest-v1",
}

ISSUE_BODY_EXCERPT = 1500


class StageError(RuntimeError):
    """A pipeline stage failed; names the stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class SummaryReport:
    project: str
    years_of_history: float
    release_count: int
    commit_count: int
    lines_of_code: int
    indicator_commit_count: int
    indicator_commit_with_issue_pct: float
    indicator_commit_with_issue_pct_defined: bool
    lifetimes_total: int
    breaking_point: Optional[float]
    issue_count: int = 0
    indicator_issue_count: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


CommitRow = tuple[CommitRecord, list[IndicatorMatch]]
IssueRow = tuple[IssueRecord, list[IndicatorMatch]]


def summary_stats(
    commit_rows: Sequence[CommitRow],
    lifetimes: Sequence[CommentLifetime],
    issue_rows: Sequence[IssueRow],
    lines_of_code: int,
    *,
    project: str = "",
    release_count: int = 0,
) -> SummaryReport:
    """Project characteristics plus the indicator/issue link rate."""
    indicator_commits = [row for row in commit_rows if row[1]]
    with_issue = [row for row in indicator_commits if row[0].issue_refs]
    defined = bool(indicator_commits)
    pct = 100.0 * len(with_issue) / len(indicator_commits) if defined else 0.0
    times = [record.author_time for record, _ in commit_rows]
    years = (max(times) - min(times)) / (365.25 * 86400.0) if len(times) > 1 else 0.0
    table = survival_table(lifetimes)
    return SummaryReport(
        project=project,
        years_of_history=round(years, 2),
        release_count=release_count,
        commit_count=len(commit_rows),
        lines_of_code=lines_of_code,
        indicator_commit_count=len(indicator_commits),
        indicator_commit_with_issue_pct=pct,
        indicator_commit_with_issue_pct_defined=defined,
        lifetimes_total=len(lifetimes),
        breaking_point=table.breaking_point,
        issue_count=len(issue_rows),
        indicator_issue_count=sum(1 for row in issue_rows if row[1]),
    )


def count_lines_of_code(
    blobs: Iterable[FileBlob], extension_filter: Optional[set[str]] = None
) -> int:
    """Physical newline-delimited lines; a trailing partial line counts."""
    total = 0
    for blob in blobs:
        if extension_filter is not None:
            name = blob.path.rsplit("/", 1)[-1]
            ext = name.rsplit(".", 1)[-1].lower() if "." in name else ""
            if ext not in extension_filter:
                continue
        data = blob.content
        if not data:
            continue
        total += data.count(b"\n") + (0 if data.endswith(b"\n") else 1)
    return total


def _meta_line(schema: str, meta: dict) -> str:
    return (
        f"#meta schema={schema}"
        f" config={meta.get('config_hash', '')}"
        f" lexicon={meta.get('lexicon_version', '')}"
    )


def _write_csv(path: Path, schema: str, meta: dict, header: list[str], rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_meta_line(schema, meta) + "\r\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_jsonl(path: Path, schema: str, meta: dict, records: Iterable[dict]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"schema": schema, **meta}, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines:
        return {}, []
    meta = json.loads(lines[0])
    return meta, [json.loads(line) for line in lines[1:] if line.strip()]


def emit_survival_figure_data(
    table: SurvivalTable, path, meta: Optional[dict] = None
) -> None:
    """Figure data: one row per bucket plus the breaking point.

    Percentages use one decimal, enough to re-plot the survival figure.
    """
    path = Path(path)
    rows = [
        [
            bucket.k,
            f"{bucket.removed_pct:.1f}",
            f"{bucket.retained_pct:.1f}",
            bucket.removed_count,
            bucket.retained_count,
        ]
        for bucket in table.buckets
    ]
    if table.buckets:
        value = "" if table.breaking_point is None else f"{table.breaking_point:.1f}"
        rows.append(["breaking_point", value, "", "", ""])
    _write_csv(
        path,
        SCHEMAS["survival"],
        meta or {},
        ["k", "removed_pct", "retained_pct", "removed_count", "retained_count"],
        rows,
    )


def _refs_text(refs: Sequence[IssueRef]) -> str:
    return ";".join(f"{ref.kind}:{ref.value}" for ref in refs)


def _phrases_text(matches: Sequence[IndicatorMatch]) -> str:
    return ";".join(sorted({m.phrase for m in matches}))


def _task_id(*parts: str) -> str:
    return hashlib.sha1("|".join(parts).encode("utf-8")).hexdigest()[:16]


def _excerpt(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[:limit]


class _RunData:
    """Everything one run computes, prior to artifact emission."""

    def __init__(self) -> None:
        self.tags = []
        self.commit_rows: list[CommitRow] = []
        self.lifetimes: list[CommentLifetime] = []
        self.table = SurvivalTable()
        self.issue_rows: list[IssueRow] = []
        self.candidates: list[SampleTask] = []
        self.sample: list[SampleTask] = []
        self.summary: Optional[SummaryReport] = None
        self.lines_of_code = 0
        self._contexts: dict[tuple[str, str], str] = {}


def _stage(name: str, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except (StageError, ConfigError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _mine_comments(cfg: RunConfig, lexicon: Lexicon, tags, data: _RunData) -> None:
    extensions = set(cfg.extension_map)
    snapshots = []
    contexts: dict[tuple[str, str], str] = {}
    for tag in tags:
        normalized = []
        for blob in snapshot_files(cfg.repository, tag, extension_filter=extensions):
            profile = detect_language_profile(blob.path, cfg.extension_map)
            if profile is None:
                continue
            content = decode_source(blob.content)
            lines = content.splitlines()
            for raw in extract_comments(content, profile, blob.path):
                comment = normalize_comment(raw, profile)
                if not comment.key:
                    continue
                normalized.append(comment)
                context_key = (comment.key, blob.path)
                if context_key not in contexts:
                    lo = max(0, raw.start_line - 1 - cfg.context_lines)
                    hi = min(len(lines), raw.end_line + cfg.context_lines)
                    contexts[context_key] = "\n".join(lines[lo:hi])
        snapshots.append((tag, normalized))
    if snapshots:
        data.lifetimes = build_timeline(snapshots, lexicon)
    data.table = survival_table(data.lifetimes)
    data._contexts = contexts  # consumed by the sampling stage


def _fetch_issues(cfg: RunConfig, lexicon: Lexicon, transport) -> list[IssueRow]:
    if not cfg.issues_enabled:
        return []
    if transport is None:
        transport = (
            ReplayTransport(cfg.replay_path) if cfg.replay_path else HttpTransport()
        )
    if cfg.issue_source == "github":
        records = fetch_all_github_issues(
            cfg.github_slug,
            transport=transport,
            auth_token=os.environ.get("GITHUB_TOKEN"),
        )
    else:
        auth = None
        if os.environ.get("JIRA_USER") and os.environ.get("JIRA_TOKEN"):
            auth = (os.environ["JIRA_USER"], os.environ["JIRA_TOKEN"])
        records = fetch_all_jira_issues(
            cfg.jira_endpoint, cfg.jira_jql, transport=transport, auth=auth
        )
    matches = match_issues(lexicon, records)
    return [(record, matches[issue_document_id(record)]) for record in records]


def _build_candidates(cfg: RunConfig, lexicon: Lexicon, data: _RunData) -> list[SampleTask]:
    candidates: list[SampleTask] = []
    stratum = f"{cfg.project}:comment"
    for lt in data.lifetimes:
        payload = data._contexts.get((lt.key, lt.first_path)) or lt.key
        task_id = _task_id("comment", stratum, lt.key, lt.first_path, str(lt.introduced_index))
        candidates.append(
            SampleTask(
                task_id=task_id,
                source_kind="comment",
                stratum=stratum,
                payload=payload,
                matches=tuple(match_text(lexicon, payload, "comment", document_id=task_id)),
            )
        )
    stratum = f"{cfg.project}:commit_message"
    for record, matches in data.commit_rows:
        if not matches:
            continue
        task_id = _task_id("commit_message", stratum, record.commit_id)
        candidates.append(
            SampleTask(
                task_id=task_id,
                source_kind="commit_message",
                stratum=stratum,
                payload=record.message,
                matches=tuple(
                    match_text(lexicon, record.message, "commit_message", document_id=task_id)
                ),
            )
        )
    stratum = f"{cfg.project}:issue"
    for record, matches in data.issue_rows:
        if not matches:
            continue
        payload = f"{record.title}\n\n{_excerpt(record.body, ISSUE_BODY_EXCERPT)}"
        task_id = _task_id("issue", stratum, issue_document_id(record))
        candidates.append(
            SampleTask(
                task_id=task_id,
                source_kind="issue",
                stratum=stratum,
                payload=payload,
                matches=tuple(match_text(lexicon, payload, "issue", document_id=task_id)),
            )
        )
    return candidates


def group_by_stratum(candidates: Iterable[SampleTask]) -> dict[str, list[SampleTask]]:
    grouped: dict[str, list[SampleTask]] = {}
    for task in candidates:
        grouped.setdefault(task.stratum, []).append(task)
    return grouped


def _commit_record_dict(record: CommitRecord, matches: Sequence[IndicatorMatch]) -> dict:
    return {
        "commit_id": record.commit_id,
        "author_time": record.author_time,
        "message": record.message,
        "issue_refs": [{"kind": r.kind, "value": r.value} for r in record.issue_refs],
        "matches": [m.to_dict() for m in matches],
    }


def _lifetime_dict(lt: CommentLifetime, tags) -> dict:
    names = {tag.order_index: tag.name for tag in tags}
    return {
        "key": lt.key,
        "first_path": lt.first_path,
        "introduced_index": lt.introduced_index,
        "introduced_tag": names.get(lt.introduced_index, ""),
        "removed_index": lt.removed_index,
        "removed_tag": names.get(lt.removed_index, "") if lt.removed_index is not None else "",
        "censored": lt.censored,
        "lifetime": lt.lifetime,
        "matches": [m.to_dict() for m in lt.matches],
    }


def _issue_dict(record: IssueRecord, matches: Sequence[IndicatorMatch]) -> dict:
    d = record.to_dict()
    d["matches"] = [m.to_dict() for m in matches]
    return d


def _write_artifacts(cfg: RunConfig, lexicon: Lexicon, data: _RunData) -> Path:
    meta = {"config_hash": cfg.config_hash, "lexicon_version": lexicon.version}
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    tmp_dir = Path(tempfile.mkdtemp(prefix=".secminer-", dir=out_dir.parent))
    try:
        _write_csv(
            tmp_dir / "commits.csv",
            SCHEMAS["commits"],
            meta,
            ["commit_id", "author_time", "message", "issue_refs", "phrases"],
            [
                [r.commit_id, r.author_time, r.message, _refs_text(r.issue_refs), _phrases_text(ms)]
                for r, ms in data.commit_rows
            ],
        )
        _write_jsonl(
            tmp_dir / "commits.jsonl",
            SCHEMAS["commits"],
            meta,
            (_commit_record_dict(r, ms) for r, ms in data.commit_rows),
        )
        _write_csv(
            tmp_dir / "comment_lifetimes.csv",
            SCHEMAS["lifetimes"],
            meta,
            [
                "key", "first_path", "introduced_index", "introduced_tag",
                "removed_index", "removed_tag", "censored", "lifetime", "phrases",
            ],
            [
                [
                    lt.key,
                    lt.first_path,
                    lt.introduced_index,
                    next((t.name for t in data.tags if t.order_index == lt.introduced_index), ""),
                    "" if lt.removed_index is None else lt.removed_index,
                    next((t.name for t in data.tags if t.order_index == lt.removed_index), ""),
                    int(lt.censored),
                    lt.lifetime,
                    _phrases_text(lt.matches),
                ]
                for lt in data.lifetimes
            ],
        )
        _write_jsonl(
            tmp_dir / "comment_lifetimes.jsonl",
            SCHEMAS["lifetimes"],
            meta,
            (_lifetime_dict(lt, data.tags) for lt in data.lifetimes),
        )
        _write_csv(
            tmp_dir / "issues.csv",
            SCHEMAS["issues"],
            meta,
            ["source", "external_id", "title", "state", "created_at", "labels", "phrases"],
            [
                [r.source, r.external_id, r.title, r.state, r.created_at,
                 ";".join(r.labels), _phrases_text(ms)]
                for r, ms in data.issue_rows
            ],
        )
        _write_jsonl(
            tmp_dir / "issues.jsonl",
            SCHEMAS["issues"],
            meta,
            (_issue_dict(r, ms) for r, ms in data.issue_rows),
        )
        emit_survival_figure_data(data.table, tmp_dir / "survival.csv", meta)
        summary = {"schema": SCHEMAS["summary"], **meta, **data.summary.to_dict()}
        (tmp_dir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _write_jsonl(
            tmp_dir / "candidates.jsonl",
            SCHEMAS["candidates"],
            meta,
            (task.to_dict() for task in data.candidates),
        )
        _write_jsonl(
            tmp_dir / "sample_tasks.jsonl",
            SCHEMAS["sample"],
            meta,
            (task.to_dict() for task in data.sample),
        )
        manifest = {
            "schema": SCHEMAS["manifest"],
            "project": cfg.project,
            "config_hash": cfg.config_hash,
            "lexicon_version": lexicon.version,
            "generated_at": int(time.time()),
            "artifacts": [
                "commits.csv", "commits.jsonl",
                "comment_lifetimes.csv", "comment_lifetimes.jsonl",
                "issues.csv", "issues.jsonl",
                "survival.csv", "summary.json",
                "candidates.jsonl", "sample_tasks.jsonl",
            ],
            "notes": {
                "branch_scope": "commit mining follows the default branch head only",
                "survival_semantics": (
                    "buckets compare removed vs still-present populations per "
                    "lifetime value; the breaking point is interpolated where "
                    "the removed share crosses below 50%"
                ),
                "loc_method": "physical newline-delimited lines at the newest release tag",
                "issue_source": cfg.issue_source if cfg.issues_enabled else "",
                "jql": cfg.jira_jql,
                "sampling": {
                    "confidence": cfg.sampling.confidence,
                    "margin": cfg.sampling.margin,
                    "proportion": cfg.sampling.proportion,
                    "seed": cfg.sampling.seed,
                    "strata": "project x source",
                },
            },
        }
        (tmp_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        for name in sorted(p.name for p in tmp_dir.iterdir()):
            os.replace(tmp_dir / name, out_dir / name)
    finally:
        shutil.rmtree(tmp_dir, ignore_errors=True)
    return out_dir


def run_pipeline(config_path, *, transport=None) -> Path:
    """Run all stages; returns the run directory.

    Any stage error is surfaced as StageError naming the failing stage;
    partially written artifacts are discarded.
    """
    cfg = load_config(config_path)
    if not cfg.repository.exists():
        raise StageError("repository", FileNotFoundError(f"repository path {cfg.repository} does not exist"))
    lexicon = _stage("lexicon", load_lexicon, cfg.lexicon_path)
    data = _RunData()
    data.tags = _stage("repository", list_release_tags, cfg.repository)
    commits = _stage("repository", lambda: list(list_commits(cfg.repository)))
    data.commit_rows = _stage(
        "commits",
        lambda: [
            (record, match_text(lexicon, record.message, "commit_message", document_id=record.commit_id))
            for record in commits
        ],
    )
    _stage("comments", _mine_comments, cfg, lexicon, data.tags, data)
    data.issue_rows = _stage("issues", _fetch_issues, cfg, lexicon, transport)
    data.candidates = _stage("sampling", _build_candidates, cfg, lexicon, data)
    grouped = group_by_stratum(data.candidates)
    data.sample = _stage("sampling", draw_sample, grouped, cfg.sampling) if grouped else []
    if data.tags:
        blobs = _stage(
            "summary",
            lambda: list(snapshot_files(cfg.repository, data.tags[-1], extension_filter=set(cfg.extension_map))),
        )
        data.lines_of_code = count_lines_of_code(blobs)
    data.summary = _stage(
        "summary",
        summary_stats,
        data.commit_rows,
        data.lifetimes,
        data.issue_rows,
        data.lines_of_code,
        project=cfg.project,
        release_count=len(data.tags),
    )
    return _stage("write", _write_artifacts, cfg, lexicon, data)


def load_commits_dataset(path) -> list[CommitRow]:
    _, records = read_jsonl(path)
    rows: list[CommitRow] = []
    for r in records:
        record = CommitRecord(
            commit_id=r["commit_id"],
            message=r["message"],
            author_time=int(r["author_time"]),
            issue_refs=tuple(IssueRef(x["kind"], x["value"]) for x in r["issue_refs"]),
        )
        rows.append((record, [IndicatorMatch.from_dict(m) for m in r["matches"]]))
    return rows


def load_lifetimes_dataset(path) -> list[CommentLifetime]:
    _, records = read_jsonl(path)
    return [
        CommentLifetime(
            key=r["key"],
            first_path=r["first_path"],
            introduced_index=int(r["introduced_index"]),
            removed_index=None if r["removed_index"] is None else int(r["removed_index"]),
            censored=bool(r["censored"]),
            lifetime=int(r["lifetime"]),
            matches=tuple(IndicatorMatch.from_dict(m) for m in r["matches"]),
        )
        for r in records
    ]


def load_issues_dataset(path) -> list[IssueRow]:
    _, records = read_jsonl(path)
    return [
        (IssueRecord.from_dict(r), [IndicatorMatch.from_dict(m) for m in r["matches"]])
        for r in records
    ]


def load_sample_tasks(path) -> list[SampleTask]:
    _, records = read_jsonl(path)
    return [SampleTask.from_dict(r) for r in records]


def redraw_sample(run_dir, spec: SampleSpec) -> Path:
    """Re-draw sample_tasks.jsonl from a run's stored candidates."""
    run_dir = Path(run_dir)
    meta, _ = read_jsonl(run_dir / "candidates.jsonl")
    candidates = load_sample_tasks(run_dir / "candidates.jsonl")
    grouped = group_by_stratum(candidates)
    sample = draw_sample(grouped, spec) if grouped else []
    out = run_dir / "sample_tasks.jsonl"
    _write_jsonl(
        out,
        SCHEMAS["sample"],
        {k: v for k, v in meta.items() if k != "schema"},
        (task.to_dict() for task in sample),
    )
    return out


def render_summary(run_dir) -> str:
    """Human-readable report for a completed run."""
    run_dir = Path(run_dir)
    summary = json.loads((run_dir / "summary.json").read_text("utf-8"))
    lines = [
        f"project:                 {summary['project']}",
        f"years of history:        {summary['years_of_history']}",
        f"releases:                {summary['release_count']}",
        f"commits:                 {summary['commit_count']}",
        f"lines of code:           {summary['lines_of_code']}",
        f"indicator commits:       {summary['indicator_commit_count']}",
    ]
    if summary["indicator_commit_with_issue_pct_defined"]:
        lines.append(
            f"  with linked issue:     {summary['indicator_commit_with_issue_pct']:.1f}%"
        )
    else:
        lines.append("  with linked issue:     n/a (no indicator commits)")
    lines.append(f"tracked comment lifetimes: {summary['lifetimes_total']}")
    if summary["breaking_point"] is not None:
        lines.append(f"breaking point:          {summary['breaking_point']:.1f} release tags")
    else:
        lines.append("breaking point:          none")
    lines.append(f"issues fetched:          {summary['issue_count']}")
    lines.append(f"  with indicators:       {summary['indicator_issue_count']}")
    return "\n".join(lines)
