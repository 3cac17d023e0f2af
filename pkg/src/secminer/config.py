"""Run configuration: INI-style key=value file with sections.

Relative paths are resolved against the config file's directory, so a
config travels with its fixtures.  Example:

    [project]
    name = demo

    [repository]
    path = repo

    [lexicon]
    path = lexicon.tsv

    [extensions]
    php = php
    js = javascript

    [issues]
    enabled = true
    source = github
    slug = acme/demo
    replay = fixtures/github_issues.jsonl

    [sampling]
    confidence = 0.95
    margin = 0.05
    seed = 7

    [output]
    dir = out
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .comments import DEFAULT_EXTENSION_MAP, PROFILES
from .lexicon import DEFAULT_LEXICON_PATH
from .sampling import SampleSpec


class ConfigError(ValueError):
    """Missing, unreadable, or inconsistent run configuration."""


@dataclass
class RunConfig:
    project: str
    repository: Path
    lexicon_path: Path
    output_dir: Path
    extension_map: dict[str, str] = field(default_factory=dict)
    sampling: SampleSpec = field(default_factory=SampleSpec)
    issues_enabled: bool = False
    issue_source: str = ""  # "github" | "jira"
    github_slug: str = ""
    jira_endpoint: str = ""
    jira_jql: str = ""
    replay_path: Optional[Path] = None
    context_lines: int = 3
    config_hash: str = ""


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(raw.decode("utf-8"))
    except (UnicodeDecodeError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    base = path.parent
    if not parser.has_option("repository", "path"):
        raise ConfigError("config is missing [repository] path")
    repository = _resolve(base, parser.get("repository", "path"))

    project = parser.get("project", "name", fallback="") or repository.name or "project"
    lexicon_path = (
        _resolve(base, parser.get("lexicon", "path"))
        if parser.has_option("lexicon", "path")
        else DEFAULT_LEXICON_PATH
    )
    output_dir = _resolve(base, parser.get("output", "dir", fallback="out"))

    extension_map = dict(DEFAULT_EXTENSION_MAP)
    if parser.has_section("extensions"):
        extension_map = {
            ext.lower().lstrip("."): profile
            for ext, profile in parser.items("extensions")
        }
        for ext, profile in extension_map.items():
            if profile not in PROFILES:
                raise ConfigError(
                    f"[extensions] {ext}: unknown language profile {profile!r}"
                )

    try:
        sampling = SampleSpec(
            confidence=parser.getfloat("sampling", "confidence", fallback=0.95),
            margin=parser.getfloat("sampling", "margin", fallback=0.05),
            proportion=parser.getfloat("sampling", "proportion", fallback=0.5),
            seed=parser.getint("sampling", "seed", fallback=0),
        )
        sampling.validate()
    except ValueError as exc:
        raise ConfigError(f"[sampling]: {exc}") from exc

    issues_enabled = parser.getboolean("issues", "enabled", fallback=False)
    issue_source = parser.get("issues", "source", fallback="").strip().lower()
    replay = parser.get("issues", "replay", fallback="")
    if issues_enabled:
        if issue_source not in ("github", "jira"):
            raise ConfigError("[issues] source must be github or jira when enabled")
        if issue_source == "github" and not parser.get("issues", "slug", fallback=""):
            raise ConfigError("[issues] slug is required for the github source")
        if issue_source == "jira" and not parser.get("issues", "endpoint", fallback=""):
            raise ConfigError("[issues] endpoint is required for the jira source")

    try:
        context_lines = parser.getint("comments", "context_lines", fallback=3)
    except ValueError as exc:
        raise ConfigError(f"[comments] context_lines: {exc}") from exc

    return RunConfig(
        project=project,
        repository=repository,
        lexicon_path=lexicon_path,
        output_dir=output_dir,
        extension_map=extension_map,
        sampling=sampling,
        issues_enabled=issues_enabled,
        issue_source=issue_source,
        github_slug=parser.get("issues", "slug", fallback=""),
        jira_endpoint=parser.get("issues", "endpoint", fallback=""),
        jira_jql=parser.get("issues", "jql", fallback=""),
        replay_path=_resolve(base, replay) if replay else None,
        context_lines=context_lines,
        config_hash=hashlib.sha256(raw).hexdigest()[:12],
    )
