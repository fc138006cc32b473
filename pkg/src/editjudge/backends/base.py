"""Backend interfaces, the match decision type, and span validation."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol, runtime_checkable

import numpy as np

from ..textutil import find_span, longest_common_substring

if TYPE_CHECKING:
    from ..taxonomy import ThemeTaxonomy

log = logging.getLogger(__name__)

NO_MATCH_TOKEN = "NO MATCH"


@dataclass(frozen=True)
class MatchDecision:
    """Judge verdict: a verbatim span from the draft, or no match."""

    span: str | None

    @property
    def matched(self) -> bool:
        return self.span is not None

    @classmethod
    def match(cls, span: str) -> MatchDecision:
        return cls(span=span)


NO_MATCH = MatchDecision(span=None)


class SpanPolicy(enum.Enum):
    """How to treat judge outputs that are not verbatim draft substrings.

    STRICT downgrades them to NO MATCH, preserving the removal semantics
    of edit counting. FUZZY substitutes the longest common substring with
    the draft when it covers >= 80% of the output.
    """

    STRICT = "strict"
    FUZZY = "fuzzy"


FUZZY_COVERAGE = 0.8


def validate_span(output: str, draft: str, policy: SpanPolicy) -> MatchDecision:
    """Canonicalize a claimed match span against the draft.

    A validated decision always carries an exact substring of ``draft``,
    so downstream removal can locate it.
    """
    located = find_span(draft, output)
    if located is not None:
        start, end = located
        return MatchDecision.match(draft[start:end])
    if policy is SpanPolicy.FUZZY:
        common = longest_common_substring(draft, output).strip()
        if common and len(common) >= FUZZY_COVERAGE * len(output):
            return MatchDecision.match(common)
    log.warning("judge span not found verbatim in draft; downgraded to %s", NO_MATCH_TOKEN)
    return NO_MATCH


@runtime_checkable
class Matcher(Protocol):
    def match_content(self, expert_sentence: str, draft: str) -> MatchDecision: ...


@runtime_checkable
class ThemeClassifier(Protocol):
    def classify_theme(self, sentence: str, taxonomy: "ThemeTaxonomy") -> str: ...


@runtime_checkable
class Embedder(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0.0 whenever either vector is zero (no NaNs)."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))
