"""Toolkit for mining developer-admitted security concerns.

Locates security-indicator keywords across source-code comments, commit
messages, and issue trackers; measures how long indicator-bearing
comments survive across release tags; supports human triage of sampled
matches; and warns from CI when such comments are introduced or removed.
"""

__version__ = "0.1.0"

from .comments import (
    LanguageProfile,
    NormalizedComment,
    RawComment,
    detect_language_profile,
    extract_comments,
    normalize_comment,
)
from .gitrepo import (
    CommitRecord,
    FileBlob,
    IssueRef,
    ReleaseTag,
    link_issues_in_message,
    list_commits,
    list_release_tags,
    snapshot_files,
)
from .issues import IssueRecord, fetch_github_issues, fetch_jira_issues, match_issues
from .labels import Label
from .lexicon import (
    Indicator,
    IndicatorMatch,
    Lexicon,
    PairRule,
    cooccurring_pairs,
    load_default_lexicon,
    load_lexicon,
    match_text,
    relevance_summary,
)
from .sampling import SampleSpec, SampleTask, draw_sample, required_sample_size
from .tracking import (
    CommentLifetime,
    SurvivalTable,
    breaking_point,
    build_timeline,
    survival_table,
)

__all__ = [
    "CommentLifetime",
    "CommitRecord",
    "FileBlob",
    "Indicator",
    "IndicatorMatch",
    "IssueRecord",
    "IssueRef",
    "Label",
    "LanguageProfile",
    "Lexicon",
    "NormalizedComment",
    "PairRule",
    "RawComment",
    "ReleaseTag",
    "SampleSpec",
    "SampleTask",
    "SurvivalTable",
    "breaking_point",
    "build_timeline",
    "cooccurring_pairs",
    "detect_language_profile",
    "draw_sample",
    "extract_comments",
    "fetch_github_issues",
    "fetch_jira_issues",
    "link_issues_in_message",
    "list_commits",
    "list_release_tags",
    "load_default_lexicon",
    "load_lexicon",
    "match_issues",
    "match_text",
    "normalize_comment",
    "relevance_summary",
    "required_sample_size",
    "snapshot_files",
    "survival_table",
]
