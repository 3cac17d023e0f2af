#!/usr/bin/env python3
"""Build the deterministic demo repository used by tests and the demo run.

Three release tags, a file move, a removed comment, a reappearing
comment, a comment marker hidden inside a string literal, and commit
messages with and without issue references.  All author/committer
identities and dates are pinned, so the commit hashes are stable across
rebuilds.
"""

from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

FIXTURE_ENV = {
    "GIT_AUTHOR_NAME": "Fixture Author",
    "GIT_AUTHOR_EMAIL": "fixture@example.invalid",
    "GIT_COMMITTER_NAME": "Fixture Author",
    "GIT_COMMITTER_EMAIL": "fixture@example.invalid",
}

BASE_TS = 1100000000
STEP = 2592000  # 30 days between commits

AUTH_V1 = """<?php
// TODO check xss here
$greeting = "// password not a comment";
// signature widget
function login_user($name) {
    return true;
}
"""

AUTH_V2 = """<?php
// TODO check xss here
$greeting = "// password not a comment";
// two factor support pending
function login_user($name) {
    return validate($name);
}
"""

AUTH_V3 = """<?php
$greeting = "// password not a comment";
// two factor support pending
// signature widget
function login_user($name) {
    return validate($name);
}
"""

UTIL_V1 = """/* hack around ldap login */
function helper() {
  return 1; // plain note
}
"""

UTIL_V2 = """/* hack around ldap login */
function helper() {
  return 2; // plain note
}
"""

README = "# Demo project\n\nFixture repository for the mining toolkit.\n"


def git(repo: Path, *args: str, ts: int | None = None) -> str:
    env = dict(os.environ, **FIXTURE_ENV)
    if ts is not None:
        env["GIT_AUTHOR_DATE"] = f"{ts} +0000"
        env["GIT_COMMITTER_DATE"] = f"{ts} +0000"
    proc = subprocess.run(
        ["git", "-C", str(repo), *args], check=True, capture_output=True, env=env
    )
    return proc.stdout.decode()


def commit(repo: Path, files: dict, message: str, ts: int, tag: str | None = None, rm=()):
    for rel in rm:
        git(repo, "rm", "-q", rel)
    for rel, content in files.items():
        target = repo / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content, encoding="utf-8")
        git(repo, "add", rel)
    git(repo, "commit", "-q", "-m", message, ts=ts)
    if tag:
        git(repo, "tag", tag)


def build_demo_repo(path) -> Path:
    repo = Path(path)
    repo.mkdir(parents=True, exist_ok=True)
    subprocess.run(
        ["git", "init", "-q", "-b", "main", str(repo)], check=True, capture_output=True
    )
    ts = BASE_TS
    commit(
        repo,
        {"src/auth.php": AUTH_V1, "src/util.js": UTIL_V1, "README.md": README},
        "initial import",
        ts,
        tag="v0.1",
    )
    ts += STEP
    commit(repo, {"src/auth.php": AUTH_V1 + "// end\n"}, "fix search engine for XSS", ts)
    ts += STEP
    commit(repo, {"src/util.js": UTIL_V2}, "Fix minor bug in LDAP aliases #2", ts)
    ts += STEP
    commit(
        repo,
        {"src/lib/util.js": UTIL_V2, "src/auth.php": AUTH_V2 + "// end\n"},
        "move util into lib",
        ts,
        tag="v0.2",
        rm=["src/util.js"],
    )
    ts += STEP
    commit(repo, {"src/auth.php": AUTH_V3}, "harden password handling #5", ts)
    ts += STEP
    commit(repo, {"README.md": README + "\nMaintained.\n"}, "docs update", ts, tag="v0.3")
    return repo


DEMO_CONFIG = """[project]
name = demo

[repository]
path = repo

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


def prepare_demo_run(base_dir, replay_fixture) -> Path:
    """Demo repo + config + replay fixture under one directory.

    All config paths are relative to the config file, so the resulting
    layout is byte-stable no matter where it lives.  Returns the config
    path.
    """
    base = Path(base_dir)
    base.mkdir(parents=True, exist_ok=True)
    build_demo_repo(base / "repo")
    fixtures = base / "fixtures"
    fixtures.mkdir(exist_ok=True)
    (fixtures / "github_issues.jsonl").write_bytes(Path(replay_fixture).read_bytes())
    config_path = base / "demo.cfg"
    config_path.write_text(DEMO_CONFIG, encoding="utf-8")
    return config_path


def main(argv) -> int:
    if len(argv) != 2:
        print("usage: make_demo_repo.py <path>", file=sys.stderr)
        return 2
    repo = build_demo_repo(argv[1])
    print(f"demo repository at {repo}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
