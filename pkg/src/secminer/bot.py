"""CI bot: warn when indicator-bearing comments appear or disappear.

Between two revisions, comments are extracted from the changed files on
both sides and reduced to normalized keys (the same identity function the
miner uses, so CI findings and mining lifetimes agree).  A key present at
head but not at base is introduced; the converse is removed.  An edited
comment therefore shows up as one removal plus one introduction.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .comments import decode_source, detect_language_profile, extract_comments, normalize_comment
from .gitrepo import _git, resolve_commit
from .lexicon import Lexicon, match_text

POLICIES = ("warn_only", "fail_on_introduced", "fail_on_any")

NO_FINDINGS_TEXT = "no security-indicator comment changes"


@dataclass(frozen=True)
class Finding:
    path: str
    line: int
    key: str
    phrases: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "line": self.line,
            "key": self.key,
            "phrases": list(self.phrases),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Finding":
        return cls(d["path"], int(d["line"]), d["key"], tuple(d["phrases"]))


@dataclass
class DiffFindings:
    base: str
    head: str
    introduced: list[Finding] = field(default_factory=list)
    removed: list[Finding] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "head": self.head,
            "introduced": [f.to_dict() for f in self.introduced],
            "removed": [f.to_dict() for f in self.removed],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DiffFindings":
        return cls(
            base=d["base"],
            head=d["head"],
            introduced=[Finding.from_dict(f) for f in d["introduced"]],
            removed=[Finding.from_dict(f) for f in d["removed"]],
        )


def _changed_paths(repo, base: str, head: str) -> list[str]:
    # --no-renames keeps a moved file visible as delete+add on both sides
    out = _git(repo, "diff", "--no-renames", "--name-only", "-z", base, head)
    return [p for p in out.decode("utf-8", "replace").split("\0") if p]


def _file_at(repo, rev: str, path: str) -> Optional[bytes]:
    proc = subprocess.run(
        ["git", "-C", str(repo), "show", f"{rev}:{path}"], capture_output=True
    )
    return proc.stdout if proc.returncode == 0 else None


def _matched_keys(
    repo,
    rev: str,
    path: str,
    lexicon: Lexicon,
    extension_map: Optional[Mapping[str, str]],
) -> dict[str, tuple[int, tuple[str, ...]]]:
    """key -> (first line, matched phrases) for one file at one revision."""
    profile = detect_language_profile(path, extension_map)
    if profile is None:
        return {}
    data = _file_at(repo, rev, path)
    if data is None or b"\0" in data:  # absent on this side, or binary
        return {}
    content = decode_source(data)
    keys: dict[str, tuple[int, tuple[str, ...]]] = {}
    for raw in extract_comments(content, profile, path):
        comment = normalize_comment(raw, profile)
        if not comment.key or comment.key in keys:
            continue
        matches = match_text(lexicon, comment.key, "comment", document_id=comment.key)
        if matches:
            keys[comment.key] = (
                raw.start_line,
                tuple(sorted({m.phrase for m in matches})),
            )
    return keys


def diff_indicators(
    repo,
    base: str,
    head: str,
    lexicon: Lexicon,
    extension_map: Optional[Mapping[str, str]] = None,
) -> DiffFindings:
    """Introduced and removed indicator-bearing comments between revisions.

    Line numbers come from the side where the comment exists.  Binary
    files are skipped silently.
    """
    base_commit = resolve_commit(repo, base)
    head_commit = resolve_commit(repo, head)
    findings = DiffFindings(base=base_commit, head=head_commit)
    for path in sorted(_changed_paths(repo, base_commit, head_commit)):
        base_keys = _matched_keys(repo, base_commit, path, lexicon, extension_map)
        head_keys = _matched_keys(repo, head_commit, path, lexicon, extension_map)
        for key in sorted(set(head_keys) - set(base_keys)):
            line, phrases = head_keys[key]
            findings.introduced.append(Finding(path, line, key, phrases))
        for key in sorted(set(base_keys) - set(head_keys)):
            line, phrases = base_keys[key]
            findings.removed.append(Finding(path, line, key, phrases))
    findings.introduced.sort(key=lambda f: (f.path, f.line, f.key))
    findings.removed.sort(key=lambda f: (f.path, f.line, f.key))
    return findings


def _finding_line(sign: str, finding: Finding) -> str:
    excerpt = finding.key if len(finding.key) <= 80 else finding.key[:80]
    return f"{sign} {finding.path}:{finding.line} [{','.join(finding.phrases)}] {excerpt}"


def render_findings(findings: DiffFindings, format: str = "text") -> str:
    """Render as developer-facing text or a machine-readable document."""
    if format == "structured":
        return json.dumps(findings.to_dict(), indent=2, sort_keys=True)
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    lines = [_finding_line("+", f) for f in findings.introduced]
    lines += [_finding_line("-", f) for f in findings.removed]
    return "\n".join(lines) if lines else NO_FINDINGS_TEXT


def parse_findings(text: str) -> DiffFindings:
    """Inverse of render_findings(..., "structured")."""
    return DiffFindings.from_dict(json.loads(text))


def exit_policy(findings: DiffFindings, policy: str) -> int:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "warn_only":
        return 0
    if policy == "fail_on_introduced":
        return 1 if findings.introduced else 0
    return 1 if findings.introduced or findings.removed else 0
