#!/usr/bin/env python3
"""Rebuild tests/golden/ from a fresh pipeline run on the demo fixtures.

Run this after an intentional change to artifact formats, then re-verify
the hand-traced expectations in tests/test_acceptance.py before
committing the new goldens.
"""

from __future__ import annotations

import importlib.util
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from secminer.pipeline import run_pipeline  # noqa: E402

spec = importlib.util.spec_from_file_location(
    "make_demo_repo", Path(__file__).parent / "make_demo_repo.py"
)
make_demo_repo = importlib.util.module_from_spec(spec)
spec.loader.exec_module(make_demo_repo)


def main() -> int:
    golden = ROOT / "tests" / "golden"
    replay = ROOT / "tests" / "fixtures" / "demo_github_issues.jsonl"
    with tempfile.TemporaryDirectory() as scratch:
        config = make_demo_repo.prepare_demo_run(scratch, replay)
        run_dir = run_pipeline(config)
        if golden.exists():
            shutil.rmtree(golden)
        shutil.copytree(run_dir, golden)
    print(f"goldens refreshed in {golden}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
