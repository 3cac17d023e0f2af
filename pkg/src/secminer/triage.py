"""Triage service: serve sampled tasks to human raters over HTTP.

Labels land in an append-only line-delimited log; a write is fsynced
before the request is acknowledged, so acknowledged labels survive a
process restart.  For statistics, the latest label per (task, rater)
supersedes earlier ones; the full history stays on disk and in the
export.  Per-phrase majorities resolve ties to "unsure".
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .labels import VERDICTS, Label
from .lexicon import Lexicon, relevance_summary
from .pipeline import load_sample_tasks
from .sampling import SampleTask


class StoreError(RuntimeError):
    """Corrupt label store; names the offending record line."""


@dataclass
class AgreementReport:
    base_relevant: set[str]
    other_relevant: set[str]
    overlap_pct: float
    defined: bool = True

    def to_dict(self) -> dict:
        return {
            "base_relevant": sorted(self.base_relevant),
            "other_relevant": sorted(self.other_relevant),
            "overlap_pct": self.overlap_pct,
            "defined": self.defined,
        }


class LabelStore:
    """Append-only label log with a single serialized writer."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.labels: list[Label] = []
        if self.path.exists():
            for lineno, line in enumerate(
                self.path.read_text("utf-8").splitlines(), start=1
            ):
                if not line.strip():
                    continue
                try:
                    self.labels.append(Label.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise StoreError(
                        f"corrupt label store {self.path} at line {lineno}: {exc}"
                    ) from exc

    def record_label(self, label: Label) -> None:
        """Durably append; later labels supersede earlier ones in stats."""
        label.validate()
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(label.to_dict(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.labels.append(label)

    def latest_labels(self) -> list[Label]:
        """Latest label per (task, rater), in stable task order."""
        latest: dict[tuple[str, str], Label] = {}
        for label in self.labels:  # file order; later entries win
            latest[(label.task_id, label.rater)] = label
        return list(latest.values())

    def labeled_task_ids(self) -> set[str]:
        return {label.task_id for label in self.labels}


def phrase_majorities(labels: Iterable[Label]) -> dict[str, str]:
    """Majority verdict per phrase; ties resolve to unsure."""
    counts: dict[str, dict[str, int]] = {}
    for label in labels:
        for phrase, verdict in label.phrase_verdicts.items():
            tally = counts.setdefault(phrase, {v: 0 for v in VERDICTS})
            tally[verdict] += 1
    majorities = {}
    for phrase, tally in counts.items():
        best = max(tally.values())
        winners = [v for v in VERDICTS if tally[v] == best]
        majorities[phrase] = winners[0] if len(winners) == 1 else "unsure"
    return majorities


def relevant_pair_counts(labels: Iterable[Label]) -> list[tuple[str, str, int]]:
    """How often two phrases were judged relevant together on one task.

    Feeds the pair analysis: indicators that only signal a concern in
    combination show up here even when each alone stays ambiguous.
    Sorted by count descending, then lexicographically.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for label in labels:
        relevant = sorted(
            phrase
            for phrase, verdict in label.phrase_verdicts.items()
            if verdict == "relevant"
        )
        for pair in combinations(relevant, 2):
            counts[pair] += 1
    return sorted(
        ((a, b, n) for (a, b), n in counts.items()),
        key=lambda t: (-t[2], t[0], t[1]),
    )


def compute_agreement(
    labels: Iterable[Label], other_relevant: Iterable[str]
) -> AgreementReport:
    """Directional overlap of this run's relevant phrases with an external list."""
    majorities = phrase_majorities(labels)
    base = {phrase for phrase, verdict in majorities.items() if verdict == "relevant"}
    other = set(other_relevant)
    if not base:
        return AgreementReport(base, other, 0.0, defined=False)
    return AgreementReport(base, other, 100.0 * len(base & other) / len(base))


class LabelIn(BaseModel):
    task_id: str
    rater: str
    verdict: str
    phrase_verdicts: dict[str, str] = {}
    labeled_at: Optional[int] = None


def _task_summary(task: SampleTask, labeled: set[str]) -> dict:
    return {
        "task_id": task.task_id,
        "source_kind": task.source_kind,
        "stratum": task.stratum,
        "phrases": sorted({m.phrase for m in task.matches}),
        "status": "done" if task.task_id in labeled else "pending",
    }


def create_app(
    sample_path,
    store_path,
    *,
    lexicon: Optional[Lexicon] = None,
    other_relevant: Optional[Iterable[str]] = None,
    token: Optional[str] = None,
    static_dir=None,
) -> FastAPI:
    """Build the service; raises StoreError on a corrupt label store."""
    tasks = load_sample_tasks(sample_path)
    by_id = {task.task_id: task for task in tasks}
    store = LabelStore(store_path)
    other_list = sorted(set(other_relevant)) if other_relevant is not None else None

    async def check_token(request: Request) -> None:
        if token and request.headers.get("x-auth-token") != token:
            raise HTTPException(status_code=401, detail="missing or bad auth token")

    app = FastAPI(title="security-indicator triage", dependencies=[Depends(check_token)])
    app.state.store = store
    app.state.tasks = tasks

    @app.get("/api/tasks")
    def list_tasks(status: Optional[str] = None, offset: int = 0, limit: int = 50):
        if status not in (None, "pending", "done"):
            raise HTTPException(status_code=422, detail="status must be pending or done")
        labeled = store.labeled_task_ids()
        rows = [_task_summary(task, labeled) for task in tasks]
        if status:
            rows = [row for row in rows if row["status"] == status]
        return {
            "total": len(rows),
            "offset": offset,
            "limit": limit,
            "tasks": rows[offset : offset + limit],
        }

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        task = by_id.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id}")
        labeled = store.labeled_task_ids()
        pending = [t.task_id for t in tasks if t.task_id not in labeled]
        position = pending.index(task_id) + 1 if task_id in pending else None
        body = _task_summary(task, labeled)
        body.update(
            payload=task.payload,
            matches=[m.to_dict() for m in task.matches],
            queue_position=position,
            queue_total=len(pending),
        )
        return body

    @app.post("/api/labels")
    def post_label(label_in: LabelIn):
        task = by_id.get(label_in.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {label_in.task_id}")
        task_phrases = {m.phrase for m in task.matches}
        unknown = set(label_in.phrase_verdicts) - task_phrases
        if unknown:
            raise HTTPException(
                status_code=422,
                detail=f"phrase verdicts for phrases not in task: {sorted(unknown)}",
            )
        label = Label(
            task_id=label_in.task_id,
            rater=label_in.rater,
            verdict=label_in.verdict,
            phrase_verdicts=dict(label_in.phrase_verdicts),
            labeled_at=label_in.labeled_at if label_in.labeled_at is not None else int(time.time()),
        )
        try:
            label.validate()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        store.record_label(label)
        pending = len(tasks) - len(store.labeled_task_ids())
        return {"ok": True, "task_id": label.task_id, "pending": pending}

    @app.get("/api/stats")
    def stats():
        labeled = store.labeled_task_ids()
        latest = store.latest_labels()
        body: dict = {
            "progress": {
                "total": len(tasks),
                "labeled": len([t for t in tasks if t.task_id in labeled]),
                "pending": len([t for t in tasks if t.task_id not in labeled]),
            },
            "phrase_majorities": phrase_majorities(latest),
            "relevant_pairs": [list(row) for row in relevant_pair_counts(latest)],
        }
        if lexicon is not None:
            known = lexicon.phrases()
            filtered = [
                Label(
                    task_id=label.task_id,
                    rater=label.rater,
                    verdict=label.verdict,
                    phrase_verdicts={
                        p: v for p, v in label.phrase_verdicts.items() if p in known
                    },
                    labeled_at=label.labeled_at,
                )
                for label in latest
            ]
            body["relevance"] = relevance_summary(lexicon, filtered)
        if other_list is not None:
            body["agreement"] = compute_agreement(latest, other_list).to_dict()
        return body

    @app.get("/api/export")
    def export():
        lines = [json.dumps(label.to_dict(), sort_keys=True) for label in store.labels]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""))

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def serve(
    sample_path,
    store_path,
    bind: str = "127.0.0.1:8017",
    **kwargs,
) -> None:
    """Run the service under uvicorn (blocking)."""
    import uvicorn

    host, _, port = bind.partition(":")
    app = create_app(sample_path, store_path, **kwargs)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8017))
