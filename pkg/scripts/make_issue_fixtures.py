#!/usr/bin/env python3
"""Generate the replay fixtures for the issue clients under tests/fixtures/.

Fixtures are line-delimited response records, one canned HTTP response
per line.  Rerunning rewrites the files deterministically.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"

GITHUB_MANY_SLUG = "acme/many"
GITHUB_DEMO_SLUG = "acme/demo"
JIRA_ENDPOINT = "https://jira.example.invalid"
JIRA_JQL = "project = DEMO ORDER BY created ASC"
PAGE_SIZE = 100
TOTAL = 250

BODY_TEMPLATES = [
    "Steps to reproduce the crash in module {i}.",
    "The login form rejects valid users, see module {i}.",
    "password and username appear in the example code for case {i}.",
    "uses the openssl package in build {i}",
    "Plain feature request number {i}.",
]


def record(url: str, params: dict, status: int, body) -> str:
    return json.dumps(
        {
            "url": url,
            "params": sorted((str(k), str(v)) for k, v in params.items()),
            "status": status,
            "body": json.dumps(body),
        },
        sort_keys=True,
    )


def github_issue(i: int) -> dict:
    return {
        "number": i,
        "title": f"Issue {i}: {'LDAP sync fails' if i % 7 == 0 else 'general report'}",
        "body": BODY_TEMPLATES[i % len(BODY_TEMPLATES)].format(i=i),
        "state": "open" if i % 3 else "closed",
        "created_at": f"2021-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}T10:{i % 60:02d}:00Z",
        "labels": [{"name": "bug"}] if i % 2 else [],
    }


def jira_issue(i: int) -> dict:
    return {
        "key": f"DEMO-{i}",
        "fields": {
            "summary": f"DEMO-{i}: {'two factor rollout' if i % 9 == 0 else 'routine task'}",
            "description": BODY_TEMPLATES[i % len(BODY_TEMPLATES)].format(i=i),
            "status": {"name": "Open" if i % 3 else "Done"},
            "created": f"2021-{(i % 12) + 1:02d}-{(i % 28) + 1:02d}T09:{i % 60:02d}:00.000+0000",
            "labels": ["security"] if i % 10 == 0 else [],
        },
    }


def write_github_many(path: Path) -> None:
    url = f"https://api.github.com/repos/{GITHUB_MANY_SLUG}/issues"
    issues = [github_issue(i) for i in range(1, TOTAL + 1)]
    lines = []
    for page in range(1, (TOTAL + PAGE_SIZE - 1) // PAGE_SIZE + 1):
        chunk = issues[(page - 1) * PAGE_SIZE : page * PAGE_SIZE]
        params = {"state": "all", "per_page": PAGE_SIZE, "page": page}
        lines.append(record(url, params, 200, chunk))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_jira_many(path: Path) -> None:
    url = f"{JIRA_ENDPOINT}/rest/api/2/search"
    issues = [jira_issue(i) for i in range(1, TOTAL + 1)]
    lines = []
    for start in range(0, TOTAL, PAGE_SIZE):
        chunk = issues[start : start + PAGE_SIZE]
        params = {"jql": JIRA_JQL, "startAt": start, "maxResults": PAGE_SIZE}
        body = {
            "startAt": start,
            "maxResults": PAGE_SIZE,
            "total": TOTAL,
            "issues": chunk,
        }
        lines.append(record(url, params, 200, body))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_github_demo(path: Path) -> None:
    url = f"https://api.github.com/repos/{GITHUB_DEMO_SLUG}/issues"
    items = [
        {
            "number": 1,
            "title": "Login fails for LDAP users",
            "body": "password in example code:\n\n    login('bob', 'secret')\n",
            "state": "open",
            "created_at": "2021-03-01T09:00:00Z",
            "labels": [{"name": "bug"}],
        },
        {
            "number": 2,
            "title": "Update dependencies",
            "body": "uses the openssl package",
            "state": "closed",
            "created_at": "2021-04-02T10:30:00Z",
            "labels": [],
        },
        {
            "number": 3,
            "title": "Crash on empty input",
            "body": "Nothing sensitive here.",
            "state": "open",
            "created_at": "2021-05-03T11:45:00Z",
            "labels": [],
        },
        {
            "number": 4,
            "title": "Add CI workflow",
            "body": "automation only",
            "state": "closed",
            "created_at": "2021-06-04T12:00:00Z",
            "labels": [],
            "pull_request": {"url": "https://api.github.com/repos/acme/demo/pulls/4"},
        },
    ]
    params = {"state": "all", "per_page": PAGE_SIZE, "page": 1}
    path.write_text(record(url, params, 200, items) + "\n", encoding="utf-8")


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_github_many(FIXTURES / "github_issues_250.jsonl")
    write_jira_many(FIXTURES / "jira_issues_250.jsonl")
    write_github_demo(FIXTURES / "demo_github_issues.jsonl")
    print(f"fixtures written to {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
