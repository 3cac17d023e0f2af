"""Read-only git access: release tags, file snapshots, commit history.

Everything shells out to the ``git`` binary and only uses plumbing reads
(for-each-ref, rev-list, ls-tree, cat-file), so the repository on disk --
working tree, index, and refs -- is never mutated.  Works on bare and
non-bare repositories alike.
"""

from __future__ import annotations

import logging
import re
import subprocess
from dataclasses import dataclass
from typing import Iterator, Optional, Union

log = logging.getLogger(__name__)


class RepositoryError(RuntimeError):
    """Not a repository, unknown revision, or a failing git invocation."""


@dataclass(frozen=True)
class ReleaseTag:
    name: str
    commit_id: str
    timestamp: int
    order_index: int


@dataclass(frozen=True)
class IssueRef:
    kind: str  # "numeric" | "project_key"
    value: str


@dataclass(frozen=True)
class CommitRecord:
    commit_id: str
    message: str
    author_time: int
    issue_refs: tuple[IssueRef, ...]


@dataclass(frozen=True)
class FileBlob:
    path: str
    content: bytes


def _git(repo, *args: str, data: Optional[bytes] = None) -> bytes:
    cmd = ["git", "-C", str(repo), *args]
    proc = subprocess.run(cmd, input=data, capture_output=True)
    if proc.returncode != 0:
        raise RepositoryError(
            f"git {' '.join(args[:2])} failed in {repo}: "
            f"{proc.stderr.decode('utf-8', 'replace').strip()}"
        )
    return proc.stdout


def _ensure_repo(repo) -> None:
    try:
        _git(repo, "rev-parse", "--git-dir")
    except (RepositoryError, OSError) as exc:
        raise RepositoryError(f"not a git repository: {repo}") from exc


def resolve_commit(repo, rev: str) -> str:
    """Full commit id for a revision, or RepositoryError."""
    _ensure_repo(repo)
    try:
        out = _git(repo, "rev-parse", "--verify", "--quiet", f"{rev}^{{commit}}")
    except RepositoryError as exc:
        raise RepositoryError(f"unknown revision {rev!r} in {repo}") from exc
    return out.decode().strip()


def _commit_times(repo, commit_ids: list[str]) -> dict[str, int]:
    if not commit_ids:
        return {}
    unique = list(dict.fromkeys(commit_ids))
    out = _git(
        repo, "rev-list", "--no-walk=unsorted", "--format=%H %ct", *unique
    ).decode()
    times: dict[str, int] = {}
    for line in out.splitlines():
        if line.startswith("commit "):
            continue
        sha, _, ct = line.partition(" ")
        times[sha] = int(ct)
    return times


def list_release_tags(repo) -> list[ReleaseTag]:
    """All tags resolvable to commits, chronologically ordered.

    Ordering is by tagged-commit time, ties broken by tag name ascending;
    order_index is assigned densely.  Tags pointing at non-commit objects
    are skipped with a warning.
    """
    _ensure_repo(repo)
    fmt = "%(refname:short)%09%(objecttype)%09%(objectname)%09%(*objecttype)%09%(*objectname)"
    out = _git(repo, "for-each-ref", "refs/tags", f"--format={fmt}").decode()
    entries: list[tuple[str, str]] = []
    for line in out.splitlines():
        parts = (line.split("\t") + ["", "", "", ""])[:5]
        name, obj_type, obj_id, peel_type, peel_id = parts
        if obj_type == "commit":
            entries.append((name, obj_id))
        elif obj_type == "tag" and peel_type == "commit":
            entries.append((name, peel_id))
        else:
            log.warning(
                "tag %s points at a %s object, skipped", name, peel_type or obj_type
            )
    if not entries:
        return []
    times = _commit_times(repo, [commit for _, commit in entries])
    ordered = sorted((times[commit], name, commit) for name, commit in entries)
    return [
        ReleaseTag(name, commit, ts, index)
        for index, (ts, name, commit) in enumerate(ordered)
    ]


def snapshot_files(
    repo,
    tag: Union[ReleaseTag, str],
    extension_filter: Optional[set[str]] = None,
) -> Iterator[FileBlob]:
    """Stream every tracked file under the tag's tree.

    Content is the exact blob bytes, read from the object database; the
    working directory is never involved.  `extension_filter` holds
    lowercase extensions without the dot; None disables filtering.
    Unreadable objects are reported per file and the stream continues.
    """
    rev = tag.commit_id if isinstance(tag, ReleaseTag) else tag
    commit = resolve_commit(repo, rev)
    out = _git(repo, "ls-tree", "-r", "-z", commit)
    wanted: list[tuple[str, str]] = []
    for entry in out.decode("utf-8", "replace").split("\0"):
        if not entry:
            continue
        meta, _, path = entry.partition("\t")
        _, obj_type, sha = meta.split()
        if obj_type != "blob":
            continue
        if extension_filter is not None:
            name = path.rsplit("/", 1)[-1]
            ext = name.rsplit(".", 1)[-1].lower() if "." in name else ""
            if ext not in extension_filter:
                continue
        wanted.append((sha, path))

    if not wanted:
        return
    proc = subprocess.Popen(
        ["git", "-C", str(repo), "cat-file", "--batch"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
    )
    try:
        assert proc.stdin is not None and proc.stdout is not None
        for sha, path in wanted:
            proc.stdin.write(sha.encode() + b"\n")
            proc.stdin.flush()
            header = proc.stdout.readline().decode().strip()
            if header.endswith(" missing") or " blob " not in f" {header} ":
                log.warning("unreadable object %s for %s: %s", sha, path, header)
                continue
            size = int(header.rsplit(" ", 1)[-1])
            content = proc.stdout.read(size)
            proc.stdout.read(1)  # trailing newline after the blob body
            yield FileBlob(path, content)
        proc.stdin.close()
    finally:
        proc.kill()
        proc.wait()


def list_commits(repo, rev: str = "HEAD") -> Iterator[CommitRecord]:
    """Full history reachable from the default branch head, oldest first.

    Merge commits appear exactly once.  Only the designated head is
    followed (main-branch-only mining); each record carries the issue
    references parsed from its message.
    """
    _ensure_repo(repo)
    probe = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--verify", "--quiet", f"{rev}^{{commit}}"],
        capture_output=True,
    )
    if probe.returncode != 0:
        return  # repository without commits
    out = _git(repo, "log", "-z", "--reverse", "--format=%H%x1f%at%x1f%B", rev)
    for record in out.decode("utf-8", "replace").split("\0"):
        if not record:
            continue
        commit_id, author_time, message = record.split("\x1f", 2)
        message = message.rstrip("\n")
        yield CommitRecord(
            commit_id=commit_id,
            message=message,
            author_time=int(author_time),
            issue_refs=tuple(link_issues_in_message(message)),
        )


_NUMERIC_REF = re.compile(r"(?<![0-9A-Za-z_#])#([0-9]+)(?![0-9A-Za-z_])")
_PROJECT_REF = re.compile(r"(?<![0-9A-Za-z_])([A-Z]{2,10}-[0-9]+)(?![0-9A-Za-z_])")


def link_issues_in_message(message: str) -> list[IssueRef]:
    """Issue references in order of appearance, de-duplicated.

    ``#12`` yields a numeric reference (leading zeros are dropped; ``#0``
    is not a reference); ``KEY-12`` with a 2..10 letter uppercase key
    yields a project-key reference.
    """
    found: list[tuple[int, IssueRef]] = []
    for m in _NUMERIC_REF.finditer(message):
        digits = m.group(1).lstrip("0")
        if digits:
            found.append((m.start(), IssueRef("numeric", digits)))
    for m in _PROJECT_REF.finditer(message):
        found.append((m.start(), IssueRef("project_key", m.group(1))))
    found.sort(key=lambda item: item[0])
    refs: list[IssueRef] = []
    seen: set[IssueRef] = set()
    for _, ref in found:
        if ref not in seen:
            seen.add(ref)
            refs.append(ref)
    return refs
