import json
from pathlib import Path

import pytest

from helpers import FIXTURES_DIR, load_script
from secminer.config import ConfigError, load_config
from secminer.gitrepo import CommitRecord, IssueRef
from secminer.issues import IssueRecord
from secminer.lexicon import IndicatorMatch
from secminer.pipeline import (
    StageError,
    count_lines_of_code,
    emit_survival_figure_data,
    load_commits_dataset,
    load_issues_dataset,
    load_lifetimes_dataset,
    load_sample_tasks,
    read_jsonl,
    redraw_sample,
    render_summary,
    run_pipeline,
    summary_stats,
)
from secminer.gitrepo import FileBlob
from secminer.sampling import SampleSpec
from secminer.tracking import SurvivalBucket, SurvivalTable

make_demo_repo = load_script("make_demo_repo")


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("demo")
    config = make_demo_repo.prepare_demo_run(
        base, FIXTURES_DIR / "demo_github_issues.jsonl"
    )
    run_dir = run_pipeline(config)
    return base, config, run_dir


def fake_match(phrase="xss"):
    return IndicatorMatch(phrase, "commit_message", (0, len(phrase)), "d")


def commit_row(i, matched, refs=()):
    record = CommitRecord(
        commit_id=f"c{i}",
        message=f"message {i}",
        author_time=1_000_000_000 + i * 86400,
        issue_refs=tuple(IssueRef("numeric", str(r)) for r in refs),
    )
    return (record, [fake_match()] if matched else [])


class TestSummaryStats:
    def test_thirty_percent_link_rate(self):
        rows = [commit_row(i, matched=True, refs=[i] if i < 3 else []) for i in range(10)]
        rows += [commit_row(100 + i, matched=False) for i in range(5)]
        report = summary_stats(rows, [], [], 0)
        assert report.indicator_commit_count == 10
        assert report.indicator_commit_with_issue_pct == 30.0
        assert report.indicator_commit_with_issue_pct_defined

    def test_zero_indicator_commits_flagged(self):
        rows = [commit_row(i, matched=False) for i in range(4)]
        report = summary_stats(rows, [], [], 0)
        assert report.indicator_commit_with_issue_pct == 0.0
        assert not report.indicator_commit_with_issue_pct_defined

    def test_quarter_link_rate(self):
        rows = [commit_row(i, matched=True, refs=[1] if i == 0 else []) for i in range(4)]
        report = summary_stats(rows, [], [], 0)
        assert report.indicator_commit_with_issue_pct == 25.0

    def test_years_of_history(self):
        rows = [commit_row(0, False), commit_row(0, False)]
        first = rows[0][0].author_time
        rows[1] = (
            CommitRecord("cX", "m", first + int(2 * 365.25 * 86400), ()),
            [],
        )
        report = summary_stats(rows, [], [], 0)
        assert report.years_of_history == pytest.approx(2.0)

    def test_issue_counts(self):
        issues = [
            (IssueRecord("github", "1", "t", "b", "open", 0), [fake_match()]),
            (IssueRecord("github", "2", "t", "b", "open", 0), []),
        ]
        report = summary_stats([commit_row(0, False)], [], issues, 7, project="p", release_count=2)
        assert report.issue_count == 2
        assert report.indicator_issue_count == 1
        assert report.lines_of_code == 7
        assert report.release_count == 2


class TestCountLinesOfCode:
    def test_two_files(self):
        blobs = [FileBlob("a.php", b"x\n" * 10), FileBlob("b.php", b"y\n" * 5)]
        assert count_lines_of_code(blobs) == 15

    def test_no_trailing_newline(self):
        assert count_lines_of_code([FileBlob("a.php", b"a\nb\nc")]) == 3

    def test_empty_snapshot(self):
        assert count_lines_of_code([]) == 0

    def test_empty_file(self):
        assert count_lines_of_code([FileBlob("a.php", b"")]) == 0

    def test_filter(self):
        blobs = [FileBlob("a.php", b"x\n"), FileBlob("b.md", b"y\ny\n")]
        assert count_lines_of_code(blobs, {"php"}) == 1


class TestEmitSurvivalFigureData:
    def survival(self, *points):
        buckets = [
            SurvivalBucket(k, r, c, 100.0 * r / (r + c), 100.0 * c / (r + c))
            for k, r, c in points
        ]
        table = SurvivalTable(buckets)
        from secminer.tracking import breaking_point

        table.breaking_point = breaking_point(table)
        return table

    def test_rows_plus_breaking_point(self, tmp_path):
        table = self.survival((1, 3, 1), (2, 1, 3))
        out = tmp_path / "survival.csv"
        emit_survival_figure_data(table, out)
        lines = out.read_text().splitlines()
        assert lines[1] == "k,removed_pct,retained_pct,removed_count,retained_count"
        assert lines[2] == "1,75.0,25.0,3,1"
        assert lines[3] == "2,25.0,75.0,1,3"
        assert lines[4] == "breaking_point,1.5,,,"

    def test_empty_table_header_only(self, tmp_path):
        out = tmp_path / "survival.csv"
        emit_survival_figure_data(SurvivalTable([]), out)
        lines = out.read_text().splitlines()
        assert len(lines) == 2  # meta + header

    def test_one_decimal_rendering(self, tmp_path):
        table = self.survival((1, 2, 1), (2, 1, 2))
        out = tmp_path / "survival.csv"
        emit_survival_figure_data(table, out)
        lines = out.read_text().splitlines()
        assert lines[2].startswith("1,66.7,33.3")
        # interpolated crossing rendered "2.7"-style with a dot
        bp_row = lines[4].split(",")
        assert bp_row[0] == "breaking_point"
        assert "." in bp_row[1]


class TestConfig:
    def test_missing_repository_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[output]\ndir = out\n")
        with pytest.raises(ConfigError, match="repository"):
            load_config(cfg)

    def test_unknown_profile(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[repository]\npath = r\n[extensions]\nphp = cobol\n")
        with pytest.raises(ConfigError, match="cobol"):
            load_config(cfg)

    def test_relative_paths_resolved_against_config(self, tmp_path):
        cfg = tmp_path / "sub" / "c.cfg"
        cfg.parent.mkdir()
        cfg.write_text("[repository]\npath = repo\n")
        loaded = load_config(cfg)
        assert loaded.repository == tmp_path / "sub" / "repo"

    def test_bad_sampling_margin(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[repository]\npath = r\n[sampling]\nmargin = 2.0\n")
        with pytest.raises(ConfigError, match="margin"):
            load_config(cfg)

    def test_issues_need_source(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[repository]\npath = r\n[issues]\nenabled = true\n")
        with pytest.raises(ConfigError, match="source"):
            load_config(cfg)

    def test_missing_repo_names_repository_stage(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[repository]\npath = nowhere\n")
        with pytest.raises(StageError, match="repository"):
            run_pipeline(cfg)


def read_artifact_data(path: Path) -> list[str]:
    """Artifact lines without the meta line/record."""
    lines = path.read_text("utf-8").splitlines()
    return lines[1:]


class TestRunPipeline:
    def test_all_artifacts_present(self, demo_run):
        _, _, run_dir = demo_run
        names = sorted(p.name for p in run_dir.iterdir())
        assert names == [
            "candidates.jsonl",
            "comment_lifetimes.csv",
            "comment_lifetimes.jsonl",
            "commits.csv",
            "commits.jsonl",
            "issues.csv",
            "issues.jsonl",
            "manifest.json",
            "sample_tasks.jsonl",
            "summary.json",
            "survival.csv",
        ]

    def test_artifacts_embed_config_hash_and_lexicon_version(self, demo_run):
        _, config, run_dir = demo_run
        cfg = load_config(config)
        meta, _ = read_jsonl(run_dir / "commits.jsonl")
        assert meta["config_hash"] == cfg.config_hash
        assert meta["lexicon_version"] == "2024.1"
        first_line = (run_dir / "commits.csv").read_text().splitlines()[0]
        assert cfg.config_hash in first_line and "2024.1" in first_line

    def test_rerun_is_byte_identical_except_manifest_timestamp(self, demo_run, tmp_path):
        base, _, run_dir = demo_run
        config2 = make_demo_repo.prepare_demo_run(
            tmp_path / "again", FIXTURES_DIR / "demo_github_issues.jsonl"
        )
        run2 = run_pipeline(config2)
        for artifact in sorted(run_dir.iterdir()):
            other = run2 / artifact.name
            if artifact.name == "manifest.json":
                one = json.loads(artifact.read_text())
                two = json.loads(other.read_text())
                one["generated_at"] = two["generated_at"] = 0
                assert one == two
            else:
                assert artifact.read_bytes() == other.read_bytes(), artifact.name

    def test_stage_isolation_issues_off(self, demo_run, tmp_path):
        _, _, run_dir = demo_run
        config = make_demo_repo.prepare_demo_run(
            tmp_path / "noissues", FIXTURES_DIR / "demo_github_issues.jsonl"
        )
        content = config.read_text().replace("enabled = true", "enabled = false")
        config.write_text(content)
        run2 = run_pipeline(config)
        for name in (
            "commits.csv",
            "commits.jsonl",
            "comment_lifetimes.csv",
            "comment_lifetimes.jsonl",
            "survival.csv",
        ):
            assert read_artifact_data(run_dir / name) == read_artifact_data(run2 / name), name
        assert read_artifact_data(run2 / "issues.csv") == ["source,external_id,title,state,created_at,labels,phrases"]

    def test_round_trip_datasets(self, demo_run):
        _, _, run_dir = demo_run
        commits = load_commits_dataset(run_dir / "commits.jsonl")
        assert len(commits) == 6
        assert all(isinstance(r, CommitRecord) for r, _ in commits)
        reloaded = load_lifetimes_dataset(run_dir / "comment_lifetimes.jsonl")
        assert len(reloaded) == 5
        issues = load_issues_dataset(run_dir / "issues.jsonl")
        assert [r.external_id for r, _ in issues] == ["1", "2", "3"]
        tasks = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        assert len(tasks) == 10

    def test_round_trip_value_identity(self, demo_run, tmp_path):
        _, _, run_dir = demo_run
        from secminer.pipeline import (
            _commit_record_dict,
            _issue_dict,
            _lifetime_dict,
            _write_jsonl,
        )

        commits = load_commits_dataset(run_dir / "commits.jsonl")
        again = tmp_path / "commits2.jsonl"
        _write_jsonl(again, "commits-v1", {}, (_commit_record_dict(r, m) for r, m in commits))
        assert load_commits_dataset(again) == commits

        lifetimes = load_lifetimes_dataset(run_dir / "comment_lifetimes.jsonl")
        again = tmp_path / "lifetimes2.jsonl"
        _write_jsonl(again, "lt-v1", {}, (_lifetime_dict(lt, []) for lt in lifetimes))
        assert load_lifetimes_dataset(again) == lifetimes

        issues = load_issues_dataset(run_dir / "issues.jsonl")
        again = tmp_path / "issues2.jsonl"
        _write_jsonl(again, "issues-v1", {}, (_issue_dict(r, m) for r, m in issues))
        assert load_issues_dataset(again) == issues

        tasks = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        again = tmp_path / "tasks2.jsonl"
        _write_jsonl(again, "tasks-v1", {}, (t.to_dict() for t in tasks))
        assert load_sample_tasks(again) == tasks

    def test_redraw_sample_with_new_seed(self, demo_run):
        _, _, run_dir = demo_run
        before = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        redraw_sample(run_dir, SampleSpec(margin=0.35, seed=99))
        after = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        assert 0 < len(after) < len(before)
        redraw_sample(run_dir, SampleSpec(seed=7))
        restored = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        assert restored == before

    def test_render_summary(self, demo_run):
        _, _, run_dir = demo_run
        text = render_summary(run_dir)
        assert "demo" in text
        assert "66.7%" in text
        assert "breaking point" in text

    def test_lifetimes_match_hand_trace(self, demo_run):
        _, _, run_dir = demo_run
        lifetimes = load_lifetimes_dataset(run_dir / "comment_lifetimes.jsonl")
        rows = [
            (lt.key, lt.first_path, lt.introduced_index, lt.removed_index, lt.censored)
            for lt in lifetimes
        ]
        assert rows == [
            ("signature widget", "src/auth.php", 0, 1, False),
            ("todo check xss here", "src/auth.php", 0, 2, False),
            ("hack around ldap login", "src/util.js", 0, None, True),
            ("two factor support pending", "src/auth.php", 1, None, True),
            ("signature widget", "src/auth.php", 2, None, True),
        ]

    def test_string_literal_comment_not_tracked(self, demo_run):
        _, _, run_dir = demo_run
        lifetimes = load_lifetimes_dataset(run_dir / "comment_lifetimes.jsonl")
        assert not any("password not a comment" in lt.key for lt in lifetimes)

    def test_repo_without_tags(self, tmp_path):
        from helpers import commit, init_repo

        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a.php": "<?php // hack\n"}, "fix XSS hole", ts=1000000000)
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "[repository]\npath = repo\n[extensions]\nphp = php\n[output]\ndir = out\n"
        )
        run_dir = run_pipeline(cfg)
        summary = json.loads((run_dir / "summary.json").read_text())
        assert summary["release_count"] == 0
        assert summary["lifetimes_total"] == 0
        assert summary["commit_count"] == 1
        assert summary["indicator_commit_count"] == 1
        assert summary["lines_of_code"] == 0
        # commit candidates still exist, so sampling still produces tasks
        tasks = load_sample_tasks(run_dir / "sample_tasks.jsonl")
        assert [t.source_kind for t in tasks] == ["commit_message"]

    def test_jira_source(self, tmp_path):
        from helpers import commit, init_repo

        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a.php": "<?php\n"}, "initial", ts=1000000000, tag="v1")
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "[repository]\npath = repo\n"
            "[extensions]\nphp = php\n"
            "[issues]\nenabled = true\nsource = jira\n"
            "endpoint = https://jira.example.invalid\n"
            "jql = project = DEMO ORDER BY created ASC\n"
            f"replay = {FIXTURES_DIR / 'jira_issues_250.jsonl'}\n"
            "[output]\ndir = out\n"
        )
        run_dir = run_pipeline(cfg)
        issues = load_issues_dataset(run_dir / "issues.jsonl")
        assert len(issues) == 250
        assert all(record.source == "jira" for record, _ in issues)
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["notes"]["jql"] == "project = DEMO ORDER BY created ASC"
