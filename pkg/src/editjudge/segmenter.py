"""Rule-based sentence segmentation with clinical abbreviation handling.

Splits on terminal punctuation (., !, ?) and newlines. A period that ends
a known abbreviation ("b.i.d.", "mg.", "Dr.") does not split unless the
next word starts a new sentence (leading uppercase letter), so dosage
shorthand stays intact while real boundaries after an abbreviation are
still found. Fragments with no alphanumeric character are dropped: they
cannot carry clinical content.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_TERMINALS = ".!?"
_CLOSERS = "\"')]}"
_HAS_ALNUM = re.compile(r"[A-Za-z0-9]")

# Titles precede proper nouns, so a following capital never ends the
# sentence for them ("Dr. Smith"); other abbreviations split there
# ("take b.i.d. Call us").
_TITLE_ABBREVIATIONS = frozenset({"dr.", "mr.", "mrs.", "ms.", "prof.", "st."})


@dataclass(frozen=True)
class Sentence:
    """A sentence and its character span in the source text.

    ``text == source[start:end]`` always holds; spans of sibling sentences
    never overlap and are ordered by ``start``.
    """

    text: str
    start: int
    end: int


def _parse_abbreviations(raw: str) -> frozenset[str]:
    entries = set()
    for line in raw.splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Load an abbreviation list: one entry per line, '#' comments allowed."""
    return _parse_abbreviations(Path(path).read_text(encoding="utf-8"))


def default_abbreviations() -> frozenset[str]:
    raw = resources.files("editjudge.data").joinpath("abbreviations.txt").read_text("utf-8")
    return _parse_abbreviations(raw)


class SentenceSegmenter:
    """Deterministic splitter over terminal punctuation and newlines.

    ``split_semicolons`` optionally treats ';' as a boundary; off by
    default since clinical annotation practice there is unsettled.
    """

    def __init__(
        self,
        abbreviations: frozenset[str] | set[str] | None = None,
        split_semicolons: bool = False,
    ):
        if abbreviations is None:
            abbreviations = default_abbreviations()
        self.abbreviations = frozenset(a.lower() for a in abbreviations)
        self.split_semicolons = split_semicolons

    def segment(self, text: str) -> list[Sentence]:
        """Split ``text`` into ordered, non-overlapping sentences."""
        cuts = self._cut_positions(text)
        sentences = []
        prev = 0
        for cut in [*cuts, len(text)]:
            span = self._trim(text, prev, cut)
            if span is not None:
                start, end = span
                sentences.append(Sentence(text[start:end], start, end))
            prev = cut
        return sentences

    def _cut_positions(self, text: str) -> list[int]:
        cuts = []
        n = len(text)
        i = 0
        while i < n:
            ch = text[i]
            if ch == "\n":
                cuts.append(i)
                i += 1
                continue
            if ch == ";" and self.split_semicolons:
                cuts.append(i + 1)
                i += 1
                continue
            if ch in _TERMINALS:
                j = i
                while j + 1 < n and text[j + 1] in _TERMINALS:
                    j += 1
                cut = self._boundary_after(text, i, j)
                if cut is not None:
                    cuts.append(cut)
                i = j + 1
                continue
            i += 1
        return cuts

    def _boundary_after(self, text: str, run_start: int, run_end: int) -> int | None:
        # Trailing closers ("...", quotes, brackets) stay with the sentence.
        k = run_end + 1
        n = len(text)
        while k < n and text[k] in _CLOSERS:
            k += 1
        if k < n and not text[k].isspace():
            return None  # mid-token period: decimals, "b.i.d", URLs
        if run_start == run_end and text[run_start] == ".":
            token = self._token_ending_at(text, run_start)
            if token in self.abbreviations:
                if token in _TITLE_ABBREVIATIONS:
                    return None
                nxt = self._next_nonspace(text, k)
                if nxt is None or not nxt.isupper():
                    return None
        return k

    @staticmethod
    def _token_ending_at(text: str, period: int) -> str:
        start = period
        while start > 0 and not text[start - 1].isspace():
            start -= 1
        return text[start : period + 1].lstrip("\"'([{").lower()

    @staticmethod
    def _next_nonspace(text: str, pos: int) -> str | None:
        for ch in text[pos:]:
            if not ch.isspace():
                return ch
        return None

    @staticmethod
    def _trim(text: str, start: int, end: int) -> tuple[int, int] | None:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start >= end or not _HAS_ALNUM.search(text, start, end):
            return None
        return start, end


def segment(text: str) -> list[Sentence]:
    """Segment with default abbreviations; convenience for one-off calls."""
    return SentenceSegmenter().segment(text)
