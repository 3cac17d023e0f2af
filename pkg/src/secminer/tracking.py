"""Trace normalized comments across ordered release-tag snapshots.

A tracked identity is a (key, earliest path) pair whose key matches at
least one lexicon phrase.  Presence across tags uses the key at the same
path first and falls back to the same key anywhere in the snapshot, so a
comment that travels with a moved file keeps its lifetime.  A comment
that disappears and later reappears starts a new lifetime: removal and
reintroduction are distinct developer actions.

Lifetimes are measured in release tags.  A comment still present at the
newest analyzed tag is censored; its true removal time is unknown.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .comments import NormalizedComment
from .gitrepo import ReleaseTag
from .lexicon import IndicatorMatch, Lexicon, match_text


@dataclass(frozen=True)
class CommentLifetime:
    key: str
    first_path: str
    introduced_index: int
    removed_index: Optional[int]
    censored: bool
    lifetime: int
    matches: tuple[IndicatorMatch, ...] = ()


@dataclass(frozen=True)
class SurvivalBucket:
    k: int
    removed_count: int
    retained_count: int
    removed_pct: float
    retained_pct: float


@dataclass
class SurvivalTable:
    buckets: list[SurvivalBucket] = field(default_factory=list)
    breaking_point: Optional[float] = None


def build_timeline(
    snapshots: Sequence[tuple[ReleaseTag, Iterable[NormalizedComment]]],
    lexicon: Lexicon,
) -> list[CommentLifetime]:
    """One lifetime per tracked identity, folding over ordered snapshots.

    introduced_index is the first tag containing the identity;
    removed_index is the first subsequent tag not containing it (absent
    and censored when the identity survives to the last tag).
    """
    if not snapshots:
        raise ValueError("at least one snapshot is required")
    indices = [tag.order_index for tag, _ in snapshots]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("snapshots must be ordered by tag order_index")
    last_index = indices[-1]

    match_cache: dict[str, tuple[IndicatorMatch, ...]] = {}

    def matches_of(key: str) -> tuple[IndicatorMatch, ...]:
        if key not in match_cache:
            match_cache[key] = tuple(match_text(lexicon, key, "comment", document_id=key))
        return match_cache[key]

    # key -> [(first_path, introduced_index)]; identities sharing a key
    # stay present while the key exists anywhere, so they close together
    active: dict[str, list[tuple[str, int]]] = {}
    lifetimes: list[CommentLifetime] = []

    for tag, comments in snapshots:
        index = tag.order_index
        paths_by_key: dict[str, set[str]] = {}
        for comment in comments:
            paths_by_key.setdefault(comment.key, set()).add(comment.origin.file_path)
        for key in list(active):
            if key not in paths_by_key:
                for first_path, introduced in active.pop(key):
                    lifetimes.append(
                        CommentLifetime(
                            key=key,
                            first_path=first_path,
                            introduced_index=introduced,
                            removed_index=index,
                            censored=False,
                            lifetime=index - introduced,
                            matches=matches_of(key),
                        )
                    )
        for key, paths in paths_by_key.items():
            if key in active or not matches_of(key):
                continue
            active[key] = [(path, index) for path in sorted(paths)]

    for key, identities in active.items():
        for first_path, introduced in identities:
            lifetimes.append(
                CommentLifetime(
                    key=key,
                    first_path=first_path,
                    introduced_index=introduced,
                    removed_index=None,
                    censored=True,
                    lifetime=last_index - introduced,
                    matches=matches_of(key),
                )
            )
    lifetimes.sort(key=lambda lt: (lt.introduced_index, lt.first_path, lt.key))
    return lifetimes


def survival_table(lifetimes: Iterable[CommentLifetime]) -> SurvivalTable:
    """Removed/retained counts and percentages per lifetime value."""
    tally: dict[int, list[int]] = {}
    for lt in lifetimes:
        bucket = tally.setdefault(lt.lifetime, [0, 0])
        bucket[1 if lt.censored else 0] += 1
    buckets = []
    for k in sorted(tally):
        removed, retained = tally[k]
        total = removed + retained
        buckets.append(
            SurvivalBucket(
                k=k,
                removed_count=removed,
                retained_count=retained,
                removed_pct=100.0 * removed / total,
                retained_pct=100.0 * retained / total,
            )
        )
    table = SurvivalTable(buckets=buckets)
    table.breaking_point = breaking_point(table)
    return table


def breaking_point(table: SurvivalTable) -> Optional[float]:
    """Lifetime at which retained comments become the majority.

    With f(k) the removed percentage per bucket: the smallest crossing
    where f passes from above 50 to below 50 between consecutive buckets,
    linearly interpolated.  When f starts below 50 the first bucket's k is
    the breaking point; when f never drops below 50 there is none.
    """
    points = [
        (bucket.k, bucket.removed_pct)
        for bucket in table.buckets
        if bucket.removed_count + bucket.retained_count > 0
    ]
    if not points:
        return None
    if points[0][1] < 50.0:
        return float(points[0][0])
    for (k1, f1), (k2, f2) in zip(points, points[1:]):
        if f1 > 50.0 and f2 < 50.0:
            return k1 + (f1 - 50.0) / (f1 - f2) * (k2 - k1)
    return None
