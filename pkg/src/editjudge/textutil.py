"""Text normalization and span-location helpers."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WS_RE = re.compile(r"\s+")


def tokens(text: str) -> list[str]:
    """Lowercased alphanumeric tokens; punctuation acts as a separator."""
    return _TOKEN_RE.findall(text.lower())


def normalize(text: str) -> str:
    """Lowercase, strip punctuation, collapse whitespace."""
    return " ".join(tokens(text))


def collapse_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def find_span(haystack: str, span: str) -> tuple[int, int] | None:
    """First occurrence of ``span`` in ``haystack`` as a character range.

    Falls back to a whitespace-tolerant search so that spans copied across
    line breaks still locate. Returns None when the span is not present.
    """
    span = span.strip()
    if not span:
        return None
    idx = haystack.find(span)
    if idx >= 0:
        return idx, idx + len(span)
    pattern = r"\s+".join(re.escape(part) for part in span.split())
    m = re.search(pattern, haystack)
    if m is not None:
        return m.start(), m.end()
    return None


def longest_common_substring(a: str, b: str) -> str:
    """Longest common substring; earliest position in ``a`` wins ties."""
    if not a or not b:
        return ""
    best_len = 0
    best_end = 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ch = a[i - 1]
        for j in range(1, len(b) + 1):
            if ch == b[j - 1]:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best_len:
                    best_len = cur[j]
                    best_end = i
        prev = cur
    return a[best_end - best_len : best_end]


def merge_ranges(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping or adjacent (start, end) ranges; output is sorted."""
    if not ranges:
        return []
    ordered = sorted(ranges)
    merged = [ordered[0]]
    for start, end in ordered[1:]:
        last_start, last_end = merged[-1]
        if start <= last_end:
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def remove_ranges(text: str, ranges: list[tuple[int, int]]) -> str:
    """Splice the given non-overlapping sorted ranges out of ``text``."""
    pieces = []
    cursor = 0
    for start, end in ranges:
        pieces.append(text[cursor:start])
        cursor = end
    pieces.append(text[cursor:])
    return "".join(pieces)
