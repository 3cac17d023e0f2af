"""Security-indicator lexicon: loading, validation, and keyword matching.

The lexicon file is UTF-8 and line oriented, one record per line with
tab-separated fields:

    <phrase>TAB<relevance>TAB<ambiguous 0|1>TAB<notes>

Trailing fields may be omitted (relevance defaults to ``unclassified``,
ambiguous to ``0``, notes to empty).  Lines starting with ``#`` are
comments.  Three prefixed record kinds extend the format:

    pair:<left>TAB<right>TAB<effect>    co-occurrence rule
    version:<text>                      lexicon version
    meta:<key>TAB<value>                reference metadata (e.g. candidate
                                        and classified indicator counts)

Matching is case-insensitive on word boundaries.  A boundary is the start
or end of the text or any non-alphanumeric character (underscore counts as
a boundary).  Multi-word phrases match across runs of whitespace, so a
phrase like "two factor" also matches "two\\n  factor".
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Optional

if TYPE_CHECKING:
    from .labels import Label

RELEVANCE_CLASSES = ("relevant", "irrelevant", "unclassified")
PAIR_EFFECTS = ("promotes_relevance", "informational")
SOURCE_KINDS = ("comment", "commit_message", "issue")

DEFAULT_LEXICON_PATH = Path(__file__).parent / "data" / "default_lexicon.tsv"

# meta keys surfaced as reference counts in relevance_summary()
_REFERENCE_KEYS = ("candidates", "classified", "relevant", "irrelevant")


class LexiconError(ValueError):
    """Unreadable, unparsable, or invalid lexicon data."""


@dataclass(frozen=True)
class Indicator:
    phrase: str
    relevance: str = "unclassified"
    ambiguous: bool = False
    notes: str = ""


@dataclass(frozen=True)
class PairRule:
    left: str
    right: str
    effect: str = "informational"


@dataclass(frozen=True)
class IndicatorMatch:
    phrase: str
    source_kind: str
    span: tuple[int, int]
    document_id: str = ""

    def to_dict(self) -> dict:
        return {
            "phrase": self.phrase,
            "source_kind": self.source_kind,
            "span": [self.span[0], self.span[1]],
            "document_id": self.document_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IndicatorMatch":
        return cls(
            phrase=d["phrase"],
            source_kind=d["source_kind"],
            span=(d["span"][0], d["span"][1]),
            document_id=d.get("document_id", ""),
        )


@dataclass(frozen=True)
class Lexicon:
    """Immutable after load; all operations on it are pure functions."""

    indicators: tuple[Indicator, ...]
    pairs: tuple[PairRule, ...] = ()
    version: str = ""
    meta: Mapping[str, str] = field(default_factory=dict)

    def phrases(self) -> set[str]:
        return {ind.phrase for ind in self.indicators}

    def get(self, phrase: str) -> Optional[Indicator]:
        for ind in self.indicators:
            if ind.phrase == phrase:
                return ind
        return None


def _phrase_problem(phrase: str) -> Optional[str]:
    if not phrase:
        return "phrase is empty"
    if phrase != phrase.lower():
        return "phrase must be lowercase"
    if phrase != " ".join(phrase.split()):
        return "phrase whitespace must be single internal spaces"
    if len(phrase.split(" ")) > 6:
        return "phrase exceeds 6 words"
    return None


def validate_lexicon(
    indicators: Iterable[Indicator], pairs: Iterable[PairRule]
) -> None:
    """Raise LexiconError on any invariant violation, naming the offender."""
    seen: set[str] = set()
    for ind in indicators:
        problem = _phrase_problem(ind.phrase)
        if problem:
            raise LexiconError(f"indicator {ind.phrase!r}: {problem}")
        if ind.relevance not in RELEVANCE_CLASSES:
            raise LexiconError(
                f"indicator {ind.phrase!r}: unknown relevance {ind.relevance!r}"
            )
        if ind.phrase in seen:
            raise LexiconError(f"duplicate phrase {ind.phrase!r}")
        seen.add(ind.phrase)
    for pair in pairs:
        if pair.left == pair.right:
            raise LexiconError(f"pair ({pair.left!r}, {pair.right!r}): sides must differ")
        for side in (pair.left, pair.right):
            if side not in seen:
                raise LexiconError(f"pair references unknown phrase {side!r}")
        if pair.effect not in PAIR_EFFECTS:
            raise LexiconError(
                f"pair ({pair.left!r}, {pair.right!r}): unknown effect {pair.effect!r}"
            )


def load_lexicon(path) -> Lexicon:
    """Load and validate a lexicon file.

    Errors name the offending line number and phrase.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc

    indicators: list[Indicator] = []
    pairs: list[PairRule] = []
    version = ""
    meta: dict[str, str] = {}

    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("version:"):
            version = line[len("version:"):].strip()
            continue
        if line.startswith("meta:"):
            fields = line[len("meta:"):].split("\t")
            if len(fields) != 2 or not fields[0].strip():
                raise LexiconError(f"line {lineno}: meta record needs key<TAB>value")
            meta[fields[0].strip()] = fields[1].strip()
            continue
        if line.startswith("pair:"):
            fields = line[len("pair:"):].split("\t")
            if len(fields) != 3:
                raise LexiconError(
                    f"line {lineno}: pair record needs left<TAB>right<TAB>effect"
                )
            pairs.append(PairRule(fields[0].strip(), fields[1].strip(), fields[2].strip()))
            continue

        fields = line.split("\t", 3)
        phrase = fields[0].strip()
        relevance = fields[1].strip() if len(fields) > 1 and fields[1].strip() else "unclassified"
        ambiguous_raw = fields[2].strip() if len(fields) > 2 and fields[2].strip() else "0"
        notes = fields[3] if len(fields) > 3 else ""
        problem = _phrase_problem(phrase)
        if problem:
            raise LexiconError(f"line {lineno}: indicator {phrase!r}: {problem}")
        if ambiguous_raw not in ("0", "1"):
            raise LexiconError(
                f"line {lineno}: indicator {phrase!r}: ambiguous must be 0 or 1"
            )
        indicators.append(Indicator(phrase, relevance, ambiguous_raw == "1", notes))

    # collapse duplicate pair lines (set semantics) before validation
    unique_pairs = list(dict.fromkeys(pairs))
    try:
        validate_lexicon(indicators, unique_pairs)
    except LexiconError as exc:
        raise LexiconError(f"{path}: {exc}") from exc
    return Lexicon(tuple(indicators), tuple(unique_pairs), version, meta)


def load_default_lexicon() -> Lexicon:
    return load_lexicon(DEFAULT_LEXICON_PATH)


def _walk_phrase(text: str, start: int, words: list[str]) -> Optional[int]:
    """Match `words` at `start`; return the end offset or None.

    Case folding is per character, so spans index the original text.  A
    single space between phrase words consumes one or more whitespace
    characters of any kind in the text.
    """
    n = len(text)
    j = start
    for wi, word in enumerate(words):
        if wi:
            if j >= n or not text[j].isspace():
                return None
            while j < n and text[j].isspace():
                j += 1
        for ch in word:
            if j >= n or text[j].lower() != ch:
                return None
            j += 1
    return j


def _boundary_ok(text: str, start: int, end: int) -> bool:
    if start > 0 and text[start - 1].isalnum():
        return False
    if end < len(text) and text[end].isalnum():
        return False
    return True


def _charwise_lower(text: str) -> str:
    """Per-character lowercase, aligned with the original offsets.

    Full-string str.lower() can change length or apply context-sensitive
    mappings (final sigma), which would break span arithmetic.  Characters
    whose lowercase form is not a single character can never equal a
    single phrase character, so they map to a placeholder.
    """
    if text.isascii():
        return text.lower()
    chars = []
    for ch in text:
        low = ch.lower()
        chars.append(low if len(low) == 1 else "\x00")
    return "".join(chars)


def match_text(
    lexicon: Lexicon, text: str, source_kind: str, document_id: str = ""
) -> list[IndicatorMatch]:
    """Every occurrence of every lexicon phrase in `text`.

    Matches may overlap; ordering is by span start, then phrase.
    """
    if source_kind not in SOURCE_KINDS:
        raise ValueError(f"unknown source kind {source_kind!r}")
    matches: list[IndicatorMatch] = []
    lowered = _charwise_lower(text)
    for ind in lexicon.indicators:
        words = ind.phrase.split(" ")
        # any true match starts with a contiguous run of the first word,
        # so find() on the aligned lowercase text never skips a candidate
        first = words[0]
        start = lowered.find(first)
        while start != -1:
            end = _walk_phrase(text, start, words)
            if end is not None and _boundary_ok(text, start, end):
                matches.append(
                    IndicatorMatch(ind.phrase, source_kind, (start, end), document_id)
                )
            start = lowered.find(first, start + 1)
    matches.sort(key=lambda m: (m.span[0], m.phrase))
    return matches


def cooccurring_pairs(
    matches_by_document: Mapping[str, Iterable[IndicatorMatch]],
) -> list[tuple[str, str, int]]:
    """Document counts for every unordered pair of co-occurring phrases.

    Sorted by count descending, then lexicographically.
    """
    counts: Counter[tuple[str, str]] = Counter()
    for doc_matches in matches_by_document.values():
        phrases = sorted({m.phrase for m in doc_matches})
        for a, b in combinations(phrases, 2):
            counts[(a, b)] += 1
    return sorted(
        ((a, b, c) for (a, b), c in counts.items()),
        key=lambda t: (-t[2], t[0], t[1]),
    )


def relevance_summary(
    lexicon: Lexicon, labels: Optional[Iterable["Label"]] = None
) -> dict:
    """Counts per relevance class, plus per-indicator label tallies.

    The summary always includes the counts derived from the indicator set
    (they sum to the total).  When the lexicon file carries reference
    metadata (candidate/classified/relevant counts), it is surfaced under
    ``reference``.  When `labels` are given, each indicator's tally of
    relevant/irrelevant/unsure human verdicts is included.
    """
    counts = {cls: 0 for cls in RELEVANCE_CLASSES}
    for ind in lexicon.indicators:
        counts[ind.relevance] += 1
    summary: dict = {
        "version": lexicon.version,
        "total": len(lexicon.indicators),
        "counts": counts,
    }
    reference = {
        key: int(lexicon.meta[key])
        for key in _REFERENCE_KEYS
        if key in lexicon.meta and str(lexicon.meta[key]).isdigit()
    }
    if "candidates" in reference and "classified" in reference:
        reference["unclassified"] = reference["candidates"] - reference["classified"]
    if reference:
        summary["reference"] = reference
    if labels is not None:
        tallies = {
            ind.phrase: {"relevant": 0, "irrelevant": 0, "unsure": 0}
            for ind in lexicon.indicators
        }
        for label in labels:
            for phrase, verdict in label.phrase_verdicts.items():
                if phrase not in tallies:
                    raise LexiconError(f"unknown phrase in labels: {phrase!r}")
                if verdict not in tallies[phrase]:
                    raise LexiconError(f"unknown verdict {verdict!r} for {phrase!r}")
                tallies[phrase][verdict] += 1
        summary["tallies"] = tallies
    return summary
