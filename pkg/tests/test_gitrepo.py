import hashlib
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import commit, git, init_repo
from secminer.gitrepo import (
    IssueRef,
    RepositoryError,
    link_issues_in_message,
    list_commits,
    list_release_tags,
    resolve_commit,
    snapshot_files,
)


@pytest.fixture
def tagged_repo(tmp_path):
    repo = init_repo(tmp_path / "repo")
    commit(repo, {"a.txt": "one\n"}, "first", ts=1000000000, tag="v1")
    commit(repo, {"a.txt": "two\n"}, "second", ts=1000000100, tag="v2")
    commit(repo, {"a.txt": "three\n"}, "third", ts=1000000200, tag="v3")
    return repo


def tree_state(path: Path) -> dict[str, str]:
    state = {}
    for child in sorted(Path(path).rglob("*")):
        if child.is_file():
            state[str(child)] = hashlib.sha256(child.read_bytes()).hexdigest()
    return state


class TestListReleaseTags:
    def test_chronological_order_and_dense_indices(self, tagged_repo):
        tags = list_release_tags(tagged_repo)
        assert [t.name for t in tags] == ["v1", "v2", "v3"]
        assert [t.order_index for t in tags] == [0, 1, 2]
        assert tags[0].timestamp < tags[1].timestamp < tags[2].timestamp

    def test_creation_order_does_not_matter(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        first = commit(repo, {"a": "1"}, "c1", ts=1000000000)
        second = commit(repo, {"a": "2"}, "c2", ts=1000000500)
        # tag the newer commit first; ordering must follow commit time
        git(repo, "tag", "late", second)
        git(repo, "tag", "early", first)
        tags = list_release_tags(repo)
        assert [t.name for t in tags] == ["early", "late"]

    def test_zero_tags(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a": "1"}, "c1", ts=1000000000)
        assert list_release_tags(repo) == []

    def test_same_commit_ties_break_by_name(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a": "1"}, "c1", ts=1000000000)
        git(repo, "tag", "zeta")
        git(repo, "tag", "alpha")
        tags = list_release_tags(repo)
        assert [t.name for t in tags] == ["alpha", "zeta"]
        assert [t.order_index for t in tags] == [0, 1]
        assert tags[0].commit_id == tags[1].commit_id

    def test_annotated_tags_peel_to_commits(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        sha = commit(repo, {"a": "1"}, "c1", ts=1000000000)
        git(repo, "tag", "-a", "v1", "-m", "release one")
        tags = list_release_tags(repo)
        assert [(t.name, t.commit_id) for t in tags] == [("v1", sha)]

    def test_non_commit_tag_skipped(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a": "1"}, "c1", ts=1000000000, tag="good")
        blob = git(repo, "hash-object", "-w", "a").strip()
        git(repo, "tag", "weird", blob)
        tags = list_release_tags(repo)
        assert [t.name for t in tags] == ["good"]

    def test_not_a_repository(self, tmp_path):
        with pytest.raises(RepositoryError):
            list_release_tags(tmp_path / "not-here")


class TestSnapshotFiles:
    def test_extension_filter(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a.php": "<?php\n", "b.md": "# doc\n"}, "c1", ts=1000000000, tag="v1")
        tag = list_release_tags(repo)[0]
        blobs = list(snapshot_files(repo, tag, extension_filter={"php"}))
        assert [(b.path, b.content) for b in blobs] == [("a.php", b"<?php\n")]

    def test_nested_paths(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"x/y/a.php": "<?php\n"}, "c1", ts=1000000000, tag="v1")
        blobs = list(snapshot_files(repo, "v1", extension_filter={"php"}))
        assert [b.path for b in blobs] == ["x/y/a.php"]

    def test_exact_blob_bytes(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        content = "no trailing newline"
        commit(repo, {"raw.php": content}, "c1", ts=1000000000, tag="v1")
        blobs = list(snapshot_files(repo, "v1"))
        assert blobs[0].content == content.encode()

    def test_unknown_revision(self, tagged_repo):
        with pytest.raises(RepositoryError, match="unknown revision"):
            list(snapshot_files(tagged_repo, "does-not-exist"))

    def test_snapshot_of_earlier_tag(self, tagged_repo):
        tags = list_release_tags(tagged_repo)
        blobs = {b.path: b.content for b in snapshot_files(tagged_repo, tags[0])}
        assert blobs == {"a.txt": b"one\n"}

    def test_read_only(self, tagged_repo):
        before = tree_state(tagged_repo)
        list(snapshot_files(tagged_repo, "v2"))
        list_release_tags(tagged_repo)
        list(list_commits(tagged_repo))
        assert tree_state(tagged_repo) == before


class TestListCommits:
    def test_oldest_first(self, tagged_repo):
        records = list(list_commits(tagged_repo))
        assert [r.message.strip() for r in records] == ["first", "second", "third"]
        assert records[0].author_time < records[2].author_time

    def test_empty_repository(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        assert list(list_commits(repo)) == []

    def test_not_a_repository(self, tmp_path):
        with pytest.raises(RepositoryError):
            list(list_commits(tmp_path / "missing"))

    def test_merge_commit_included_once(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a": "1"}, "base", ts=1000000000)
        git(repo, "checkout", "-q", "-b", "feature")
        commit(repo, {"b": "2"}, "feature work", ts=1000000100)
        git(repo, "checkout", "-q", "main")
        commit(repo, {"c": "3"}, "main work", ts=1000000200)
        git(repo, "merge", "-q", "--no-ff", "-m", "merge feature", "feature",
            ts=1000000300)
        records = list(list_commits(repo))
        messages = [r.message.strip() for r in records]
        assert messages.count("merge feature") == 1
        assert len(records) == 4
        assert messages[0] == "base"

    def test_issue_refs_attached(self, tmp_path):
        repo = init_repo(tmp_path / "repo")
        commit(repo, {"a": "1"}, "Fix minor bug in LDAP aliases #2", ts=1000000000)
        record = next(iter(list_commits(repo)))
        assert record.issue_refs == (IssueRef("numeric", "2"),)

    def test_resolve_commit_roundtrip(self, tagged_repo):
        head = resolve_commit(tagged_repo, "HEAD")
        assert resolve_commit(tagged_repo, "v3") == head


class TestLinkIssuesInMessage:
    def test_numeric_example(self):
        assert link_issues_in_message("Fix minor bug in LDAP aliases #2") == [
            IssueRef("numeric", "2")
        ]

    def test_no_refs(self):
        assert link_issues_in_message("refactor only") == []

    def test_mixed_kinds_dedup_in_order(self):
        refs = link_issues_in_message("CORE-12 closes #7 and #7")
        assert refs == [IssueRef("project_key", "CORE-12"), IssueRef("numeric", "7")]

    def test_leading_zeros_normalized(self):
        assert link_issues_in_message("see #007") == [IssueRef("numeric", "7")]

    def test_zero_is_not_a_reference(self):
        assert link_issues_in_message("see #0") == []

    def test_word_boundaries(self):
        assert link_issues_in_message("color#2 and ABCDEFGHIJK-1") == []
        assert link_issues_in_message("(#3)") == [IssueRef("numeric", "3")]

    def test_key_length_limits(self):
        assert link_issues_in_message("AB-1 A-1") == [IssueRef("project_key", "AB-1")]

    @settings(max_examples=100, deadline=None)
    @given(message=st.text("AB-#129 xy\n", max_size=40))
    def test_refs_unique_and_ordered(self, message):
        refs = link_issues_in_message(message)
        assert len(refs) == len(set(refs))
        for ref in refs:
            if ref.kind == "numeric":
                assert ref.value == str(int(ref.value))
            else:
                key, _, digits = ref.value.partition("-")
                assert 2 <= len(key) <= 10 and key.isupper() and digits.isdigit()
