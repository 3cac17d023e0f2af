"""GitHub and JIRA issue clients normalized to one record shape.

Both clients speak through a transport object so the whole pipeline can
run offline: `HttpTransport` performs real requests, `ReplayTransport`
serves recorded responses from a line-delimited file on disk and never
touches the network, and `RecordingTransport` wraps a live transport and
appends everything it sees to such a file.

Rate-limited responses are retried with exponential backoff up to a
configured cap.  Only issue titles and bodies are fetched and matched;
discussion threads are out of scope.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

import requests

from .lexicon import IndicatorMatch, Lexicon, match_text

GITHUB_API = "https://api.github.com"
DEFAULT_PAGE_SIZE = 100
DEFAULT_MAX_RETRIES = 3


class IssueClientError(RuntimeError):
    """Base error; carries the endpoint and HTTP status when known."""

    def __init__(self, message: str, *, endpoint: str = "", status: Optional[int] = None):
        detail = message
        if status is not None:
            detail += f" (HTTP {status})"
        if endpoint:
            detail += f" [{endpoint}]"
        super().__init__(detail)
        self.endpoint = endpoint
        self.status = status


class AuthenticationError(IssueClientError):
    pass


class RateLimitError(IssueClientError):
    pass


class MalformedResponseError(IssueClientError):
    pass


class JqlError(IssueClientError):
    pass


@dataclass(frozen=True)
class IssueRecord:
    source: str  # "github" | "jira"
    external_id: str
    title: str
    body: str
    state: str
    created_at: int
    labels: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "external_id": self.external_id,
            "title": self.title,
            "body": self.body,
            "state": self.state,
            "created_at": self.created_at,
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IssueRecord":
        return cls(
            source=d["source"],
            external_id=d["external_id"],
            title=d["title"],
            body=d["body"],
            state=d["state"],
            created_at=int(d["created_at"]),
            labels=tuple(d.get("labels", ())),
        )


@dataclass(frozen=True)
class TransportResponse:
    status: int
    body: str


def _request_key(url: str, params: Optional[Mapping[str, object]]) -> str:
    canonical = sorted((str(k), str(v)) for k, v in (params or {}).items())
    return json.dumps({"url": url, "params": canonical}, sort_keys=True)


class HttpTransport:
    """Live HTTPS transport (requests)."""

    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout
        self._session = requests.Session()

    def get(self, url, params=None, headers=None) -> TransportResponse:
        response = self._session.get(
            url, params=params, headers=headers, timeout=self.timeout
        )
        return TransportResponse(response.status_code, response.text)


class ReplayTransport:
    """Serves recorded responses; raises on anything not on file."""

    def __init__(self, path):
        self.path = Path(path)
        self._responses: dict[str, list[dict]] = {}
        for lineno, line in enumerate(self.path.read_text("utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{self.path}:{lineno}: bad replay record: {exc}")
            key = _request_key(record["url"], dict(record.get("params", [])))
            self._responses.setdefault(key, []).append(record)

    def get(self, url, params=None, headers=None) -> TransportResponse:
        key = _request_key(url, params)
        queue = self._responses.get(key)
        if not queue:
            raise IssueClientError(f"no recorded response for {url} {params}", endpoint=url)
        record = queue.pop(0) if len(queue) > 1 else queue[0]
        return TransportResponse(int(record["status"]), record["body"])


class RecordingTransport:
    """Wraps a live transport and appends every exchange to a replay file."""

    def __init__(self, inner, path):
        self.inner = inner
        self.path = Path(path)

    def get(self, url, params=None, headers=None) -> TransportResponse:
        response = self.inner.get(url, params=params, headers=headers)
        record = {
            "url": url,
            "params": sorted((str(k), str(v)) for k, v in (params or {}).items()),
            "status": response.status,
            "body": response.body,
        }
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        return response


def write_replay_record(path, url, params, status, body: str) -> None:
    """Append one canned response to a replay fixture file."""
    record = {
        "url": url,
        "params": sorted((str(k), str(v)) for k, v in (params or {}).items()),
        "status": status,
        "body": body,
    }
    with Path(path).open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def parse_timestamp(value: str) -> int:
    """ISO-8601 to UTC seconds, tolerating Z and colon-less offsets."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    # 3.10's fromisoformat rejects +0000 style offsets
    if len(text) >= 5 and text[-5] in "+-" and text[-4:].isdigit():
        text = text[:-2] + ":" + text[-2:]
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _fetch_page(
    transport,
    url: str,
    params: Mapping[str, object],
    headers: Mapping[str, str],
    *,
    max_retries: int,
    backoff_base: float,
    sleep: Callable[[float], None],
) -> TransportResponse:
    attempt = 0
    while True:
        response = transport.get(url, params=params, headers=headers)
        if response.status == 401:
            raise AuthenticationError(
                "authentication failed", endpoint=url, status=response.status
            )
        rate_limited = response.status == 429 or (
            response.status == 403 and "rate limit" in response.body.lower()
        )
        if rate_limited:
            if attempt >= max_retries:
                raise RateLimitError(
                    f"rate limit persisted after {max_retries} retries",
                    endpoint=url,
                    status=response.status,
                )
            sleep(backoff_base * (2 ** attempt))
            attempt += 1
            continue
        return response


def _json_body(response: TransportResponse, url: str):
    try:
        return json.loads(response.body)
    except json.JSONDecodeError as exc:
        raise MalformedResponseError(
            f"response is not valid JSON: {exc}", endpoint=url, status=response.status
        )


def fetch_github_issues(
    repo_slug: str,
    auth_token: Optional[str] = None,
    page_state: Optional[int] = None,
    *,
    transport=None,
    per_page: int = DEFAULT_PAGE_SIZE,
    max_retries: int = DEFAULT_MAX_RETRIES,
    backoff_base: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    api_base: str = GITHUB_API,
) -> tuple[list[IssueRecord], Optional[int]]:
    """One page of GitHub issues (pull requests excluded) plus next cursor."""
    if transport is None:
        transport = HttpTransport()
    if "/" not in repo_slug:
        raise ValueError(f"repository slug must be owner/name, got {repo_slug!r}")
    page = 1 if page_state is None else int(page_state)
    url = f"{api_base}/repos/{repo_slug}/issues"
    params = {"state": "all", "per_page": per_page, "page": page}
    headers = {"Accept": "application/vnd.github+json"}
    if auth_token:
        headers["Authorization"] = f"Bearer {auth_token}"
    response = _fetch_page(
        transport, url, params, headers,
        max_retries=max_retries, backoff_base=backoff_base, sleep=sleep,
    )
    if response.status != 200:
        raise IssueClientError(
            "unexpected response", endpoint=url, status=response.status
        )
    items = _json_body(response, url)
    if not isinstance(items, list):
        raise MalformedResponseError(
            "expected a JSON array of issues", endpoint=url, status=response.status
        )
    records = []
    try:
        for item in items:
            if "pull_request" in item:
                continue
            records.append(
                IssueRecord(
                    source="github",
                    external_id=str(item["number"]),
                    title=item.get("title") or "",
                    body=item.get("body") or "",
                    state=item.get("state") or "",
                    created_at=parse_timestamp(item["created_at"]),
                    labels=tuple(
                        lab["name"] if isinstance(lab, dict) else str(lab)
                        for lab in item.get("labels", ())
                    ),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponseError(
            f"issue record missing fields: {exc}", endpoint=url, status=response.status
        )
    next_cursor = page + 1 if len(items) == per_page else None
    return records, next_cursor


def fetch_jira_issues(
    endpoint: str,
    jql: str,
    auth: Optional[tuple[str, str]] = None,
    page_state: Optional[int] = None,
    *,
    transport=None,
    page_size: int = DEFAULT_PAGE_SIZE,
    max_retries: int = DEFAULT_MAX_RETRIES,
    backoff_base: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> tuple[list[IssueRecord], Optional[int]]:
    """One page of JIRA issues for a JQL query plus next start offset."""
    if transport is None:
        transport = HttpTransport()
    start_at = 0 if page_state is None else int(page_state)
    url = endpoint.rstrip("/") + "/rest/api/2/search"
    params = {"jql": jql, "startAt": start_at, "maxResults": page_size}
    headers = {"Accept": "application/json"}
    if auth:
        token = base64.b64encode(f"{auth[0]}:{auth[1]}".encode()).decode()
        headers["Authorization"] = f"Basic {token}"
    response = _fetch_page(
        transport, url, params, headers,
        max_retries=max_retries, backoff_base=backoff_base, sleep=sleep,
    )
    if response.status == 400:
        body = _json_body(response, url)
        messages = body.get("errorMessages") or ["JQL query rejected"]
        raise JqlError("; ".join(messages), endpoint=url, status=response.status)
    if response.status != 200:
        raise IssueClientError(
            "unexpected response", endpoint=url, status=response.status
        )
    body = _json_body(response, url)
    try:
        total = int(body["total"])
        issues = body["issues"]
        records = []
        for item in issues:
            fields = item.get("fields", {})
            status = fields.get("status") or {}
            records.append(
                IssueRecord(
                    source="jira",
                    external_id=item["key"],
                    title=fields.get("summary") or "",
                    body=fields.get("description") or "",
                    state=status.get("name", "") if isinstance(status, dict) else str(status),
                    created_at=parse_timestamp(fields["created"]) if fields.get("created") else 0,
                    labels=tuple(fields.get("labels", ())),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedResponseError(
            f"search response missing fields: {exc}", endpoint=url, status=response.status
        )
    consumed = start_at + len(issues)
    next_offset = consumed if issues and consumed < total else None
    return records, next_offset


def _dedup(records: Iterable[IssueRecord]) -> list[IssueRecord]:
    # issues shifting between page fetches can repeat across pages; the
    # first occurrence wins so (source, external_id) stays unique
    seen: set[tuple[str, str]] = set()
    unique = []
    for record in records:
        key = (record.source, record.external_id)
        if key not in seen:
            seen.add(key)
            unique.append(record)
    return unique


def fetch_all_github_issues(repo_slug: str, **kwargs) -> list[IssueRecord]:
    records: list[IssueRecord] = []
    cursor: Optional[int] = None
    while True:
        page, cursor = fetch_github_issues(repo_slug, page_state=cursor, **kwargs)
        records.extend(page)
        if cursor is None:
            return _dedup(records)


def fetch_all_jira_issues(endpoint: str, jql: str, **kwargs) -> list[IssueRecord]:
    records: list[IssueRecord] = []
    offset: Optional[int] = None
    while True:
        page, offset = fetch_jira_issues(endpoint, jql, page_state=offset, **kwargs)
        records.extend(page)
        if offset is None:
            return _dedup(records)


def issue_document_id(issue: IssueRecord) -> str:
    return f"{issue.source}:{issue.external_id}"


def match_issues(
    lexicon: Lexicon, issues: Iterable[IssueRecord]
) -> dict[str, list[IndicatorMatch]]:
    """Matches over "title\\n\\nbody", keyed by issue document id."""
    results: dict[str, list[IndicatorMatch]] = {}
    for issue in issues:
        doc_id = issue_document_id(issue)
        text = f"{issue.title}\n\n{issue.body}"
        results[doc_id] = match_text(lexicon, text, "issue", document_id=doc_id)
    return results
