"""Comment extraction with string-literal awareness, plus key normalization.

Extraction is a single pass over characters with states {code,
line comment, block comment, string}.  In code, the longest opener
matching at the current position wins (line markers, then block
delimiters, then string delimiters on equal length).  Comment markers
inside string literals are not comments; string delimiters inside
comments are ignored; an unterminated block comment or string extends to
the end of the file.

Normalization turns a raw comment into the identity key used for
cross-revision tracking: comment markers, block delimiters, and
decorative ``*`` prefixes are stripped per line (to a fixpoint, so
normalization is idempotent), then the text is lowercased and whitespace
runs are collapsed to single spaces.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Mapping, Optional


@dataclass(frozen=True)
class LanguageProfile:
    name: str
    line_markers: tuple[str, ...] = ()
    block_delimiters: tuple[tuple[str, str], ...] = ()
    # (open char, close char, escape char or None)
    string_delimiters: tuple[tuple[str, str, Optional[str]], ...] = ()

    def __post_init__(self) -> None:
        for marker in self.line_markers:
            if not marker:
                raise ValueError("empty line marker")
        for open_, close in self.block_delimiters:
            if not open_ or not close:
                raise ValueError("empty block delimiter")
            if open_ == close:
                raise ValueError("block open must differ from close")
        for open_, close, _ in self.string_delimiters:
            if not open_ or not close:
                raise ValueError("empty string delimiter")


@dataclass(frozen=True)
class RawComment:
    file_path: str
    start_line: int
    end_line: int
    text: str
    kind: str  # "line" | "block"


@dataclass(frozen=True)
class NormalizedComment:
    key: str
    origin: RawComment


PROFILES: dict[str, LanguageProfile] = {
    "php": LanguageProfile(
        "php",
        line_markers=("//", "#"),
        block_delimiters=(("/*", "*/"),),
        string_delimiters=(("'", "'", "\\"), ('"', '"', "\\")),
    ),
    "javascript": LanguageProfile(
        "javascript",
        line_markers=("//",),
        block_delimiters=(("/*", "*/"),),
        string_delimiters=(("'", "'", "\\"), ('"', '"', "\\"), ("`", "`", "\\")),
    ),
    "css": LanguageProfile(
        "css",
        block_delimiters=(("/*", "*/"),),
        string_delimiters=(("'", "'", "\\"), ('"', '"', "\\")),
    ),
    "shell": LanguageProfile(
        "shell",
        line_markers=("#",),
        string_delimiters=(("'", "'", None), ('"', '"', "\\")),
    ),
}

# SQL-style "--" is deliberately absent (ambiguous with decrement operators).
DEFAULT_EXTENSION_MAP: dict[str, str] = {
    "php": "php",
    "phtml": "php",
    "js": "javascript",
    "jsx": "javascript",
    "mjs": "javascript",
    "ts": "javascript",
    "tsx": "javascript",
    "css": "css",
    "sh": "shell",
    "bash": "shell",
}


def decode_source(data: bytes) -> str:
    """Decode file bytes, replacing non-UTF-8 sequences (legacy encodings)."""
    return data.decode("utf-8", errors="replace")


def detect_language_profile(
    path: str, config: Optional[Mapping[str, str]] = None
) -> Optional[LanguageProfile]:
    """Profile for the file's extension, or None (file skipped)."""
    extension_map = DEFAULT_EXTENSION_MAP if config is None else config
    name = path.rsplit("/", 1)[-1]
    if "." not in name:
        return None
    ext = name.rsplit(".", 1)[-1].lower()
    profile_name = extension_map.get(ext)
    if profile_name is None:
        return None
    return PROFILES.get(profile_name)


def extract_comments(
    content: str, profile: LanguageProfile, path: str = ""
) -> list[RawComment]:
    """All comments in source order; extraction is total."""
    openers: list[tuple[str, str, tuple]] = []
    for marker in profile.line_markers:
        openers.append(("line", marker, ()))
    for open_, close in profile.block_delimiters:
        openers.append(("block", open_, (close,)))
    for open_, close, escape in profile.string_delimiters:
        openers.append(("string", open_, (close, escape)))
    # longest opener wins; sort is stable so equal lengths keep the
    # line < block < string precedence from insertion order
    openers.sort(key=lambda t: -len(t[1]))

    newline_positions = [i for i, ch in enumerate(content) if ch == "\n"]

    def line_of(index: int) -> int:
        return bisect_left(newline_positions, index) + 1

    comments: list[RawComment] = []
    n = len(content)
    i = 0

    def emit(kind: str, start: int, end: int) -> None:
        text = content[start:end]
        first = line_of(start)
        # a text with k newlines spans exactly k+1 newline-delimited lines
        comments.append(RawComment(path, first, first + text.count("\n"), text, kind))

    while i < n:
        hit = None
        for kind, opener, extra in openers:
            if content.startswith(opener, i):
                hit = (kind, opener, extra)
                break
        if hit is None:
            i += 1
            continue
        kind, opener, extra = hit
        start = i
        if kind == "line":
            j = i + len(opener)
            # carriage returns terminate line comments too, so CRLF files
            # do not leak \r into comment text
            while j < n and content[j] not in "\r\n":
                j += 1
            emit("line", start, j)
            i = j
        elif kind == "block":
            close = extra[0]
            end = content.find(close, i + len(opener))
            j = n if end == -1 else end + len(close)
            emit("block", start, j)
            i = j
        else:  # string
            close, escape = extra
            j = i + len(opener)
            while j < n:
                if escape and content.startswith(escape, j):
                    j += len(escape) + 1
                    continue
                if content.startswith(close, j):
                    j += len(close)
                    break
                j += 1
            i = min(j, n)
    return comments


def _strip_tokens(profile: Optional[LanguageProfile]) -> tuple[list[str], list[str]]:
    if profile is None:
        leading = ["//", "#", "/*", "*/", "*"]
        trailing = ["/*", "*/"]
    else:
        blocks = [tok for pair in profile.block_delimiters for tok in pair]
        leading = list(profile.line_markers) + blocks + ["*"]
        trailing = blocks
    leading.sort(key=len, reverse=True)
    trailing.sort(key=len, reverse=True)
    return leading, trailing


def _strip_line(line: str, leading: list[str], trailing: list[str]) -> str:
    # fixpoint loop, so re-normalizing a key changes nothing
    while True:
        line = line.strip()
        for tok in leading:
            if line.startswith(tok):
                line = line[len(tok):]
                break
        else:
            for tok in trailing:
                if line.endswith(tok):
                    line = line[: -len(tok)]
                    break
            else:
                return line


def normalize_comment(
    raw: RawComment, profile: Optional[LanguageProfile] = None
) -> NormalizedComment:
    """Identity key: markers stripped, lowercased, whitespace collapsed."""
    leading, trailing = _strip_tokens(profile)
    parts: list[str] = []
    for line in raw.text.splitlines():
        stripped = _strip_line(line, leading, trailing)
        if stripped:
            parts.append(stripped)
    key = " ".join(" ".join(parts).split()).lower()
    return NormalizedComment(key, raw)
