import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_timeline
from secminer.comments import NormalizedComment, RawComment
from secminer.gitrepo import ReleaseTag
from secminer.lexicon import Indicator, Lexicon, match_text
from secminer.tracking import (
    SurvivalBucket,
    SurvivalTable,
    breaking_point,
    build_timeline,
    survival_table,
)

LEX = Lexicon((Indicator("xss"), Indicator("hack"), Indicator("todo check xss")))


def nc(key, path="src/a.php"):
    raw = RawComment(path, 1, 1, f"// {key}", "line")
    return NormalizedComment(key, raw)


def snapshots_from(table):
    """table: list of list of (key, path) per tag."""
    snaps = []
    for index, entries in enumerate(table):
        tag = ReleaseTag(f"v{index}", f"c{index}", 1000 + index, index)
        snaps.append((tag, [nc(key, path) for key, path in entries]))
    return snaps


def rows(lifetimes):
    return [
        (lt.key, lt.first_path, lt.introduced_index, lt.removed_index, lt.censored, lt.lifetime)
        for lt in lifetimes
    ]


class TestBuildTimeline:
    def test_removed_comment(self):
        snaps = snapshots_from([
            [("todo check xss", "a.php")],
            [("todo check xss", "a.php")],
            [],
        ])
        result = build_timeline(snaps, LEX)
        assert rows(result) == [("todo check xss", "a.php", 0, 2, False, 2)]

    def test_censored_comment(self):
        snaps = snapshots_from([[("xss here", "a.php")]] * 3)
        result = build_timeline(snaps, LEX)
        assert rows(result) == [("xss here", "a.php", 0, None, True, 2)]

    def test_reappearance_creates_new_lifetime(self):
        snaps = snapshots_from([
            [("xss fix pending", "a.php")],
            [],
            [("xss fix pending", "a.php")],
        ])
        result = build_timeline(snaps, LEX)
        assert rows(result) == [
            ("xss fix pending", "a.php", 0, 1, False, 1),
            ("xss fix pending", "a.php", 2, None, True, 0),
        ]

    def test_file_move_keeps_identity(self):
        snaps = snapshots_from([
            [("hack around it", "old/util.js")],
            [("hack around it", "new/util.js")],
            [("hack around it", "new/util.js")],
        ])
        result = build_timeline(snaps, LEX)
        assert rows(result) == [("hack around it", "old/util.js", 0, None, True, 2)]

    def test_non_matching_comments_ignored(self):
        snaps = snapshots_from([[("plain note", "a.php")]])
        assert build_timeline(snaps, LEX) == []

    def test_same_key_two_paths_distinct_identities(self):
        snaps = snapshots_from([
            [("xss todo", "a.php"), ("xss todo", "b.php")],
            [],
        ])
        result = build_timeline(snaps, LEX)
        assert rows(result) == [
            ("xss todo", "a.php", 0, 1, False, 1),
            ("xss todo", "b.php", 0, 1, False, 1),
        ]

    def test_matches_attached(self):
        snaps = snapshots_from([[("todo check xss", "a.php")]])
        result = build_timeline(snaps, LEX)
        phrases = {m.phrase for m in result[0].matches}
        assert phrases == {"xss", "todo check xss"}

    def test_empty_snapshot_list_rejected(self):
        with pytest.raises(ValueError):
            build_timeline([], LEX)

    def test_unordered_snapshots_rejected(self):
        snaps = snapshots_from([[("xss", "a")], [("xss", "a")]])
        with pytest.raises(ValueError):
            build_timeline([snaps[1], snaps[0]], LEX)


def random_history():
    keys = st.sampled_from(["xss one", "xss two", "hack it", "plain"])
    paths = st.sampled_from(["a.php", "b.php", "c/d.php"])
    snapshot = st.lists(st.tuples(keys, paths), max_size=6)
    return st.lists(snapshot, min_size=1, max_size=5)


class TestTimelineProperties:
    @settings(max_examples=250, deadline=None)
    @given(history=random_history())
    def test_presence_matrix_oracle(self, history):
        snaps = snapshots_from(history)
        got = rows(build_timeline(snaps, LEX))
        expected = oracle_timeline(
            snaps, lambda key: bool(match_text(LEX, key, "comment"))
        )
        assert got == expected

    @settings(max_examples=150, deadline=None)
    @given(history=random_history())
    def test_partition_into_buckets(self, history):
        lifetimes = build_timeline(snapshots_from(history), LEX)
        table = survival_table(lifetimes)
        total = sum(b.removed_count + b.retained_count for b in table.buckets)
        assert total == len(lifetimes)

    @settings(max_examples=150, deadline=None)
    @given(history=random_history())
    def test_duplicating_final_tag_extends_censored_only(self, history):
        snaps = snapshots_from(history)
        base = build_timeline(snaps, LEX)
        last_tag, last_comments = snaps[-1]
        extended = snaps + [
            (
                ReleaseTag("dup", "cdup", last_tag.timestamp + 1, last_tag.order_index + 1),
                list(last_comments),
            )
        ]
        longer = build_timeline(extended, LEX)
        assert [r for r in rows(base) if not r[4]] == [r for r in rows(longer) if not r[4]]
        base_censored = sorted(r[:3] + (r[5],) for r in rows(base) if r[4])
        longer_censored = sorted(r[:3] + (r[5] - 1,) for r in rows(longer) if r[4])
        assert base_censored == longer_censored


class TestSurvivalTable:
    def test_all_removed_single_bucket(self):
        snaps = snapshots_from([
            [("xss a", "p"), ("xss b", "p")],
            [],
        ])
        table = survival_table(build_timeline(snaps, LEX))
        assert len(table.buckets) == 1
        bucket = table.buckets[0]
        assert (bucket.k, bucket.removed_count, bucket.retained_count) == (1, 2, 0)
        assert (bucket.removed_pct, bucket.retained_pct) == (100.0, 0.0)

    def test_empty_input(self):
        table = survival_table([])
        assert table.buckets == []
        assert table.breaking_point is None

    def test_mixed_fixture_counts(self):
        snaps = snapshots_from([
            [("xss a", "p"), ("xss b", "p"), ("hack c", "p")],
            [("xss a", "p"), ("hack c", "p")],
            [("xss a", "p")],
        ])
        # hand-traced presence matrix:
        #   xss a: censored, lifetime 2
        #   xss b: removed at 1, lifetime 1
        #   hack c: removed at 2, lifetime 2
        table = survival_table(build_timeline(snaps, LEX))
        as_tuples = [
            (b.k, b.removed_count, b.retained_count) for b in table.buckets
        ]
        assert as_tuples == [(1, 1, 0), (2, 1, 1)]

    def test_percentages_sum_to_100(self):
        snaps = snapshots_from([
            [("xss a", "p"), ("xss b", "p")],
            [("xss a", "p")],
        ])
        table = survival_table(build_timeline(snaps, LEX))
        for bucket in table.buckets:
            assert bucket.removed_pct + bucket.retained_pct == pytest.approx(100.0)


def table_of(*points):
    """points: (k, removed_count, retained_count)"""
    buckets = []
    for k, removed, retained in points:
        total = removed + retained
        buckets.append(
            SurvivalBucket(k, removed, retained, 100.0 * removed / total, 100.0 * retained / total)
        )
    return SurvivalTable(buckets)


class TestBreakingPoint:
    def test_interpolated_crossing(self):
        # f(2)=60, f(3)=40 -> 2.5
        table = table_of((2, 6, 4), (3, 4, 6))
        assert breaking_point(table) == pytest.approx(2.5, abs=1e-9)

    def test_all_retained_first_bucket(self):
        table = table_of((1, 0, 5), (2, 0, 3))
        assert breaking_point(table) == 1.0

    def test_all_removed_no_breaking_point(self):
        table = table_of((1, 5, 0), (2, 3, 0))
        assert breaking_point(table) is None

    def test_empty_table(self):
        assert breaking_point(SurvivalTable([])) is None

    def test_first_crossing_wins(self):
        table = table_of((1, 8, 2), (2, 3, 7), (3, 9, 1), (4, 1, 9))
        # f: 80, 30, 90, 10 -> first crossing between k=1 and k=2
        expected = 1 + (80 - 50) / (80 - 30)
        assert breaking_point(table) == pytest.approx(expected)

    def test_uneven_bucket_spacing(self):
        table = table_of((2, 6, 4), (5, 4, 6))
        assert breaking_point(table) == pytest.approx(2 + 0.5 * 3)

    @settings(max_examples=100, deadline=None)
    @given(
        counts=st.lists(
            st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(lambda t: sum(t) > 0),
            min_size=1,
            max_size=6,
        ),
        factor=st.integers(2, 7),
    )
    def test_scale_invariance(self, counts, factor):
        base = table_of(*[(k, r, c) for k, (r, c) in enumerate(counts)])
        scaled = table_of(*[(k, r * factor, c * factor) for k, (r, c) in enumerate(counts)])
        assert breaking_point(base) == breaking_point(scaled)
